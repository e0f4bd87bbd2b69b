"""Classical simulation laboratory for quantum continual learning."""

__version__ = "0.1.0"
