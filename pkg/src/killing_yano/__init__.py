"""Frame-based verification of conformal Killing-Yano geometry."""

__version__ = "0.1.0"
