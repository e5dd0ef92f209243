"""Discord indicators of two-qubit states from spectra, multi-copy traces
and simulated linear-optical coincidence measurements."""

__version__ = "0.1.0"
