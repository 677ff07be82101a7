"""Numerical laboratory for the 2D generalized Zakharov-Kuznetsov equation

    u_t + d_x Delta u + d_x(u^(k+1)) = 0

on a periodic box: ground states and sharp constants, a conservative
pseudospectral integrator, threshold and scattering diagnostics, and
empirical probes of the linear dispersive estimates.
"""

from .grid import Field, GridSpec, Spectrum, dealias, forward_transform, inverse_transform

__version__ = "0.1.0"

__all__ = [
    "Field",
    "GridSpec",
    "Spectrum",
    "dealias",
    "forward_transform",
    "inverse_transform",
    "__version__",
]
