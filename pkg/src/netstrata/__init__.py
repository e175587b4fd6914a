"""Multi-layer interbank network construction and heavy-tail analysis."""

__version__ = "0.1.0"
