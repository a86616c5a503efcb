"""Semistability of pairs, finite-dimensional energies, Gaussian zeta
functions and heights for explicitly constructible projective varieties."""

__version__ = "1.0.0"

from . import energy, exactgeom, igusa, pairstab, polyrep, varieties  # noqa: F401,E402
