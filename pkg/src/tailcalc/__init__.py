"""Conversions between tail, moment (Grand Lebesgue Space) and MGF descriptions
of exponentially decaying random variables, built on grid Legendre-Fenchel
conjugation and checked against closed-form and Monte-Carlo oracles."""

__version__ = "0.1.0"
