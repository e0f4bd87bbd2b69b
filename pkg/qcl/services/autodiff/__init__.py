# Gradient service package
