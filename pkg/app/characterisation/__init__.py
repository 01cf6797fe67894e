"""Supply-noise susceptibility characterisation of simulated and captured CMOS frames."""
