# Dataset service package
