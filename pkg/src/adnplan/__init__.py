"""Day-ahead dispatch planning toolkit for active distribution networks."""

__version__ = "0.1.0"
