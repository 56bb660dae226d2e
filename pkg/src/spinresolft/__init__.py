"""Forward models and fitting tools for spin-RESOLFT NV-diamond magnetometry."""

__version__ = "0.1.0"
