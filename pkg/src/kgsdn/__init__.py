"""Knowledge-graph driven management of a simulated software-defined network."""

__version__ = "0.1.0"
