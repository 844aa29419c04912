"""Grammar-guided evolution of learning-rate optimizers and schedulers."""

__version__ = "0.1.0"
