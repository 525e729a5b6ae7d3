"""Mixed FPU/Frenkel-Kontorova lattice and potential-KdV/sine-Gordon continuum toolkit."""
__version__ = "0.1.0"
