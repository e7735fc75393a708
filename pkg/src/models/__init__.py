"""Individual distributional regression models and the quantile-regression combiner."""
