"""Read-only figure scripts over the intersection-auction CSV schemas."""

__version__ = "0.1.0"
