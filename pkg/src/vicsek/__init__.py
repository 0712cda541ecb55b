"""Spectral decimation on Vicsek fractals."""
