"""Rotating-measurement photoacoustic tomography laboratory (2-D)."""
__version__ = "0.1.0"
