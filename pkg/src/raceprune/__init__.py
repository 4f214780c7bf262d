"""raceprune: static reduction of data-race instrumentation for a
concurrent mini-IR, checked against an interleaving-enumeration oracle."""

__version__ = "0.1.0"
