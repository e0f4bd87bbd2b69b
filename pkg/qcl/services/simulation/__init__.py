# Simulation service package
