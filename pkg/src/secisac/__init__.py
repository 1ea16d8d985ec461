"""Secure integrated sensing and communication over state-dependent channels.

Finite-alphabet information measures, achievable (rate, Tx exponent, Eve
exponent) region evaluation and a Monte Carlo simulator of the adaptive
sense-then-transmit protocol.
"""

__version__ = "0.1.0"
