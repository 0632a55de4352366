"""Kostlan zeros - random polynomial systems on spheres and their zero sets."""

__version__ = "0.1.0"
