"""Multiple systems estimation toolkit: population-size estimators for
list-overlap count data, asymptotic bias analysis, and robustness
diagnostics."""

__version__ = "0.1.0"
