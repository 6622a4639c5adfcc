"""prunelab: pruning-impact analysis for long-tailed multi-label classifiers."""

__version__ = "0.1.0"
