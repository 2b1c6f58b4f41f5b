"""Spectral simulation and normal-form verification for the NLS-Szegő equation

    i u_t + eps^alpha u_xx = Pi(|u|^2 u)

on the circle, where Pi keeps the nonnegative Fourier modes.
"""
__version__ = "0.1.0"
