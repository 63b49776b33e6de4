"""Isogeometric Kirchhoff-Love shell analysis and FFD-based design
optimization for non-matching multipatch NURBS geometries."""

import jax

# element kernels differentiate thin-shell energies; float32 is useless here
jax.config.update("jax_enable_x64", True)

from .splines import (  # noqa: E402
    KnotVector,
    NurbsPatch,
    BsplineVolume,
    find_span,
    basis_and_derivs,
    eval_surface,
    eval_volume,
    lagrange_nodes,
    open_uniform_knots,
)
from .extraction import build_extraction, build_ffd_eval, project_to_spline  # noqa: E402

__all__ = [
    "KnotVector",
    "NurbsPatch",
    "BsplineVolume",
    "find_span",
    "basis_and_derivs",
    "eval_surface",
    "eval_volume",
    "lagrange_nodes",
    "open_uniform_knots",
    "build_extraction",
    "build_ffd_eval",
    "project_to_spline",
]
