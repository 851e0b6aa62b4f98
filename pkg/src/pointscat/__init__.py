"""Zero-range scatterer clouds: operators, spectra, and their homogenization limit."""

__version__ = "0.1.0"
