"""Version information for ctmc.bounds package."""

__version__ = "0.1.0"
