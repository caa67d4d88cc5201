"""Oscillatory Hermite matrix elements, turning-point asymptotics and a
quasi-periodically forced harmonic oscillator simulator."""

__version__ = "0.1.0"
