"""rrt-lab: random recursive trees in random environments."""

__version__ = "0.1.0"
