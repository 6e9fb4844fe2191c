"""Knowledge-based generation of traffic scene catalogs."""

__version__ = "0.1.0"
