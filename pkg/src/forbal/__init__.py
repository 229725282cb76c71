"""forbal: design and simulation toolkit for force-balanced five-bar manipulators."""

__version__ = "0.1.0"
