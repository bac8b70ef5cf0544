"""Non-Gaussianity of coherent-state constellations for discrete-modulated CV-QKD."""

__version__ = "0.1.0"
