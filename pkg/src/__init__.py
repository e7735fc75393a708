"""Zero-adjusted distributional regression and quantile ensembling toolkit."""

__version__ = "0.1.0"
