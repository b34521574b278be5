"""Multi-kink Allen-Cahn dynamics and the first-order Toda interface law."""

__version__ = "0.1.0"
