"""coarselab: desk-scale experiments with uniform local amenability,
metric sparsification and operator norm localisation on finite graphs."""

__version__ = "0.1.0"
