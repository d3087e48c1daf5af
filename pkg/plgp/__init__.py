"""Sequential Gaussian-process inference and design by particle learning."""

__version__ = '0.1.0'
