"""Energy time series to images, datasets, and training/eval math."""

__version__ = "0.1.0"
