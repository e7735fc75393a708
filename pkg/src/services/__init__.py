"""Service layer: sample assembly, splitting, synthetic data and file IO."""
