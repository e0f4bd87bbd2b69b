# Learning service package
