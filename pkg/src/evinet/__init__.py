"""Evidence-network analysis: structure, inter-network correlation, and community-quality rankings."""

__version__ = "0.1.0"
