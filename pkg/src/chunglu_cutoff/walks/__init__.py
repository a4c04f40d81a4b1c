"""Random walk kernels, quenched traces and annealed walks."""
