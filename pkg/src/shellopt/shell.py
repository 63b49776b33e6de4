"""Kirchhoff-Love shell mechanics for one patch.

Element energies are written once as plain functions of the local
geometry, displacement, and thickness coefficients; every derivative the
solver and the optimizer need (residual, tangent, geometry and thickness
cross partials) is machine-differentiated from them at build time and
validated against finite differences in the test suite.

St. Venant-Kirchhoff material with analytic through-thickness
integration: membrane stiffness scales with t, bending with t^3/12.
Integrals run over the reference midsurface with (p+1)^2 Gauss points
per Bezier element.  Dead loads enter through potentials; follower
pressure contributes a configuration-dependent virtual work with a
consistent (unsymmetric) load stiffness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

import jax
import jax.numpy as jnp

from .errors import GeometryError, ValidationError
from .splines import KnotVector, LagrangeSpace, NurbsPatch, gauss_rule

SIDES = ("umin", "umax", "vmin", "vmax")


@dataclass(frozen=True)
class Material:
    """Isotropic St. Venant-Kirchhoff material."""

    E: float
    nu: float
    rho: float = 0.0

    def __post_init__(self):
        if self.E <= 0:
            raise ValidationError("Young's modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValidationError("Poisson ratio must lie in (-1, 0.5)")


@dataclass(frozen=True)
class LoadSpec:
    """One load case on a patch region.

    kinds: 'dead-pressure' (per unit reference area, fixed direction),
    'projected-pressure' (per unit area projected onto the plane normal to
    ``axis``; realizes loads given per unit horizontal length),
    'follower-pressure' (along the current surface normal, per unit current
    area), 'body-force' (per unit volume, scales with thickness),
    'edge-traction' (per unit reference edge length on a parametric side).
    """

    kind: str
    magnitude: float
    direction: tuple = (0.0, 0.0, 1.0)
    side: str | None = None
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        kinds = ("dead-pressure", "projected-pressure", "follower-pressure",
                 "body-force", "edge-traction")
        if self.kind not in kinds:
            raise ValidationError(f"unknown load kind {self.kind!r}")
        if not np.isfinite(self.magnitude):
            raise ValidationError("load magnitude must be finite")
        if self.kind == "edge-traction":
            if self.side not in SIDES:
                raise ValidationError("edge-traction needs a parametric side")
        elif self.side is not None:
            raise ValidationError(f"{self.kind} applies to the whole patch")


@dataclass(frozen=True)
class BoundarySpec:
    """Strong displacement constraint on a parametric side.

    'pin' eliminates the side's control-point row; 'clamp' eliminates the
    two adjacent rows, which also kills the edge rotation.
    """

    patch: str
    side: str
    components: tuple = (0, 1, 2)
    style: str = "pin"

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValidationError(f"unknown side {self.side!r}")
        if self.style not in ("pin", "clamp"):
            raise ValidationError(f"unknown style {self.style!r}")
        if not all(c in (0, 1, 2) for c in self.components):
            raise ValidationError("components must be in {0, 1, 2}")


@dataclass
class MidsurfaceState:
    """Pointwise midsurface kinematics and resultants."""

    A: np.ndarray          # (2, 3) reference tangents
    a: np.ndarray          # (2, 3) deformed tangents
    A3: np.ndarray         # unit reference normal
    a3: np.ndarray         # unit deformed normal
    eps: np.ndarray        # (2, 2) membrane strain
    kappa: np.ndarray      # (2, 2) curvature change
    n: np.ndarray | None = None   # (2, 2) contravariant normal-force resultants
    m: np.ndarray | None = None   # (2, 2) contravariant moment resultants


# ---------------------------------------------------------------------------
# element kernels (jax)
# ---------------------------------------------------------------------------

def _sym2(v):
    """(uu, uv, vv) -> symmetric 2x2."""
    return jnp.array([[v[0], v[1]], [v[1], v[2]]])


def _qp_state(P, u, b1, b2):
    A = b1.T @ P
    a = b1.T @ (P + u)
    HA = b2.T @ P
    ha = b2.T @ (P + u)
    A3 = jnp.cross(A[0], A[1])
    nA = jnp.linalg.norm(A3)
    A3u = A3 / nA
    a3 = jnp.cross(a[0], a[1])
    a3u = a3 / jnp.linalg.norm(a3)
    eps = 0.5 * (a @ a.T - A @ A.T)
    kap = _sym2(HA @ A3u) - _sym2(ha @ a3u)
    return A, a, A3u, a3u, nA, eps, kap


def _cdd(Ainv, e, E, nu):
    """Energy pairing e : C : e with the plane-stress tensor built on the
    reference contravariant metric."""
    Ae = Ainv @ e
    return E / (1.0 - nu**2) * (nu * jnp.trace(Ae) ** 2 + (1.0 - nu) * jnp.trace(Ae @ Ae))


def _elem_internal(P, u, t, B0, B1, B2, wq, E, nu):
    def qp(b0, b1, b2, w):
        A, a, A3u, a3u, nA, eps, kap = _qp_state(P, u, b1, b2)
        tq = b0 @ t
        Ainv = jnp.linalg.inv(A @ A.T)
        psi = 0.5 * (tq * _cdd(Ainv, eps, E, nu)
                     + tq**3 / 12.0 * _cdd(Ainv, kap, E, nu))
        return w * psi * nA

    return jnp.sum(jax.vmap(qp)(B0, B1, B2, wq))


def _elem_dead_pressure(P, u, B0, B1, wq, mag, dirv):
    def qp(b0, b1, w):
        A = b1.T @ P
        nA = jnp.linalg.norm(jnp.cross(A[0], A[1]))
        return w * mag * (dirv @ (b0 @ u)) * nA

    return jnp.sum(jax.vmap(qp)(B0, B1, wq))


def _elem_projected_pressure(P, u, B0, B1, wq, mag, dirv, axis):
    def qp(b0, b1, w):
        A = b1.T @ P
        proj = jnp.cross(A[0], A[1]) @ axis
        return w * mag * (dirv @ (b0 @ u)) * proj

    return jnp.sum(jax.vmap(qp)(B0, B1, wq))


def _elem_body_force(P, u, t, B0, B1, wq, fvec):
    def qp(b0, b1, w):
        A = b1.T @ P
        nA = jnp.linalg.norm(jnp.cross(A[0], A[1]))
        return w * (fvec @ (b0 @ u)) * (b0 @ t) * nA

    return jnp.sum(jax.vmap(qp)(B0, B1, wq))


def _elem_edge_traction(P, u, B0, B1t, wq, tvec):
    def qp(b0, b1t, w):
        At = b1t @ P
        return w * (tvec @ (b0 @ u)) * jnp.linalg.norm(At)

    return jnp.sum(jax.vmap(qp)(B0, B1t, wq))


def _elem_follower_residual(P, u, B0, B1, wq, mag):
    """Virtual work of pressure along the current normal: returns the
    (nloc, 3) external force block (no potential exists in general)."""

    def qp(b0, b1, w):
        a = b1.T @ (P + u)
        return w * mag * jnp.outer(b0, jnp.cross(a[0], a[1]))

    return jnp.sum(jax.vmap(qp)(B0, B1, wq), axis=0)


def _elem_volume(P, t, B0, B1, wq):
    def qp(b0, b1, w):
        A = b1.T @ P
        nA = jnp.linalg.norm(jnp.cross(A[0], A[1]))
        return w * (b0 @ t) * nA

    return jnp.sum(jax.vmap(qp)(B0, B1, wq))


@lru_cache(maxsize=None)
def _kernels():
    """Batched, jitted derivative kernels shared by every patch."""

    def batch(fn, n_static):
        return jax.jit(jax.vmap(fn, in_axes=(0,) * n_static + (None,) * 9))

    def make(fn, n_batched, n_params):
        # vmap over element-local arrays, broadcast scalar parameters
        axes = (0,) * n_batched + (None,) * n_params
        d = {
            "val": jax.jit(jax.vmap(fn, in_axes=axes)),
            "gu": jax.jit(jax.vmap(jax.grad(fn, argnums=1), in_axes=axes)),
            "huu": jax.jit(jax.vmap(jax.jacfwd(jax.grad(fn, argnums=1), argnums=1), in_axes=axes)),
            "huP": jax.jit(jax.vmap(jax.jacfwd(jax.grad(fn, argnums=1), argnums=0), in_axes=axes)),
            "gP": jax.jit(jax.vmap(jax.grad(fn, argnums=0), in_axes=axes)),
        }
        return d

    k = {}
    k["int"] = make(_elem_internal, 7, 2)
    k["int"]["hut"] = jax.jit(jax.vmap(
        jax.jacfwd(jax.grad(_elem_internal, argnums=1), argnums=2),
        in_axes=(0,) * 7 + (None,) * 2))
    k["int"]["gt"] = jax.jit(jax.vmap(jax.grad(_elem_internal, argnums=2),
                                      in_axes=(0,) * 7 + (None,) * 2))
    k["dead"] = make(_elem_dead_pressure, 6, 2)
    k["proj"] = make(_elem_projected_pressure, 6, 3)
    k["body"] = make(_elem_body_force, 7, 1)
    k["body"]["hut"] = jax.jit(jax.vmap(
        jax.jacfwd(jax.grad(_elem_body_force, argnums=1), argnums=2),
        in_axes=(0,) * 7 + (None,)))
    k["edge"] = make(_elem_edge_traction, 6, 1)
    k["fol"] = {
        "val": jax.jit(jax.vmap(_elem_follower_residual, in_axes=(0,) * 6 + (None,))),
        "ju": jax.jit(jax.vmap(jax.jacfwd(_elem_follower_residual, argnums=1),
                               in_axes=(0,) * 6 + (None,))),
        "jP": jax.jit(jax.vmap(jax.jacfwd(_elem_follower_residual, argnums=0),
                               in_axes=(0,) * 6 + (None,))),
    }
    k["vol"] = {
        "val": jax.jit(jax.vmap(_elem_volume, in_axes=(0,) * 5)),
        "gP": jax.jit(jax.vmap(jax.grad(_elem_volume, argnums=0), in_axes=(0,) * 5)),
        "gt": jax.jit(jax.vmap(jax.grad(_elem_volume, argnums=1), in_axes=(0,) * 5)),
    }
    return k


# ---------------------------------------------------------------------------
# quadrature tables
# ---------------------------------------------------------------------------

@dataclass
class ElementTables:
    """Per-element basis data at quadrature points (fixed for a given knot
    layout; control points never enter)."""

    idx: np.ndarray   # (nel, nloc) coefficient indices
    B0: np.ndarray    # (nel, nq, nloc)
    B1: np.ndarray    # (nel, nq, nloc, 2)
    B2: np.ndarray    # (nel, nq, nloc, 3)
    wq: np.ndarray    # (nel, nq)


def build_surface_tables(space, bp_u: np.ndarray, bp_v: np.ndarray,
                         ng_u: int, ng_v: int) -> ElementTables:
    """Tabulate ``space.basis_row`` on a Gauss grid of every Bezier element.

    ``space`` is anything with a ``basis_row(xi, max_deriv)`` method whose
    support set is constant within an element (NurbsPatch or LagrangeSpace).
    """
    gu, wu = gauss_rule(ng_u)
    gv, wv = gauss_rule(ng_v)
    idx_l, B0_l, B1_l, B2_l, wq_l = [], [], [], [], []
    for i in range(len(bp_u) - 1):
        du = bp_u[i + 1] - bp_u[i]
        for j in range(len(bp_v) - 1):
            dv = bp_v[j + 1] - bp_v[j]
            b0s, b1s, b2s, ws, idx0 = [], [], [], [], None
            for a, (pu, au) in enumerate(zip(bp_u[i] + du * gu, wu * du)):
                for b, (pv, bv) in enumerate(zip(bp_v[j] + dv * gv, wv * dv)):
                    idx, B0, B1, B2 = space.basis_row((pu, pv), 2)
                    if idx0 is None:
                        idx0 = idx
                    b0s.append(B0)
                    b1s.append(B1)
                    b2s.append(B2)
                    ws.append(au * bv)
            idx_l.append(idx0)
            B0_l.append(b0s)
            B1_l.append(b1s)
            B2_l.append(b2s)
            wq_l.append(ws)
    return ElementTables(np.asarray(idx_l), np.asarray(B0_l), np.asarray(B1_l),
                         np.asarray(B2_l), np.asarray(wq_l))


@dataclass
class EdgeTables:
    idx: np.ndarray   # (nel, nloc)
    B0: np.ndarray    # (nel, nq, nloc)
    B1t: np.ndarray   # (nel, nq, nloc) derivative along the edge direction
    wq: np.ndarray    # (nel, nq)


def build_edge_tables(space, bp_u, bp_v, side: str, ng: int) -> EdgeTables:
    gs, ws = gauss_rule(ng)
    along_v = side in ("umin", "umax")
    bp = bp_v if along_v else bp_u
    fixed = {"umin": bp_u[0], "umax": bp_u[-1],
             "vmin": bp_v[0], "vmax": bp_v[-1]}[side]
    idx_l, B0_l, B1_l, wq_l = [], [], [], []
    for e in range(len(bp) - 1):
        d = bp[e + 1] - bp[e]
        b0s, b1s, wl, idx0 = [], [], [], None
        for s, w in zip(bp[e] + d * gs, ws * d):
            xi = (fixed, s) if along_v else (s, fixed)
            idx, B0, B1, _ = space.basis_row(xi, 1)
            if idx0 is None:
                idx0 = idx
            b0s.append(B0)
            b1s.append(B1[:, 1] if along_v else B1[:, 0])
            wl.append(w)
        idx_l.append(idx0)
        B0_l.append(b0s)
        B1_l.append(b1s)
        wq_l.append(wl)
    return EdgeTables(np.asarray(idx_l), np.asarray(B0_l), np.asarray(B1_l),
                      np.asarray(wq_l))


# ---------------------------------------------------------------------------
# patch-level assembly
# ---------------------------------------------------------------------------

class PatchShell:
    """Assembles energies and their coefficient-space derivatives for one
    patch; the coefficient space is the spline space by default, or the
    nodal Lagrange space (``space='lagrange'``) for cross checks.
    """

    def __init__(self, patch: NurbsPatch, material: Material,
                 loads: list[LoadSpec] = (), space: str = "spline",
                 include_load_geometry_partials: bool = True):
        self.patch = patch
        self.material = material
        self.loads = list(loads)
        self.include_load_geometry_partials = include_load_geometry_partials
        ng_u, ng_v = patch.ku.p + 1, patch.kv.p + 1
        bp_u, bp_v = patch.ku.breakpoints, patch.kv.breakpoints
        if space == "spline":
            basis_src = patch
            self.n_cp = patch.n_cp
        elif space == "lagrange":
            basis_src = LagrangeSpace.for_patch(patch)
            self.n_cp = basis_src.n_nodes
        else:
            raise ValidationError(f"unknown space {space!r}")
        self.space = space
        self.tables = build_surface_tables(basis_src, bp_u, bp_v, ng_u, ng_v)
        ng_e = max(ng_u, ng_v)
        self.edge_tables = {
            ld.side: build_edge_tables(basis_src, bp_u, bp_v, ld.side, ng_e)
            for ld in self.loads if ld.kind == "edge-traction"}
        # scatter indices
        nel, nloc = self.tables.idx.shape
        dofs = (3 * self.tables.idx[:, :, None] + np.arange(3)).reshape(nel, 3 * nloc)
        self._dofs = dofs
        self._coo_uu = (np.repeat(dofs, 3 * nloc, axis=1).ravel(),
                        np.tile(dofs, (1, 3 * nloc)).ravel())
        self._coo_ut = (np.repeat(dofs, nloc, axis=1).ravel(),
                        np.tile(self.tables.idx, (1, 3 * nloc)).ravel())
        self._k = _kernels()

    # -- gathers ------------------------------------------------------------
    def _loc(self, arr, like="surface", side=None):
        idx = self.tables.idx if side is None else self.edge_tables[side].idx
        return np.asarray(arr)[idx]

    def _surface_load_args(self, ld, P, u, t):
        T = self.tables
        if ld.kind == "body-force":
            return (self._loc(P), self._loc(u), self._loc(t), T.B0, T.B1, T.wq)
        return (self._loc(P), self._loc(u), T.B0, T.B1, T.wq)

    # -- scalar energies ----------------------------------------------------
    def internal_energy(self, P, t, u) -> float:
        if np.min(t) <= 0:
            raise ValidationError(f"patch {self.patch.pid}: nonpositive thickness")
        T = self.tables
        vals = self._k["int"]["val"](self._loc(P), self._loc(u), self._loc(t),
                                     T.B0, T.B1, T.B2, T.wq,
                                     self.material.E, self.material.nu)
        return float(np.sum(vals))

    def external_potential(self, P, t, u) -> float:
        """Potential of the dead loads (follower pressure excluded)."""
        out = 0.0
        m = self.material
        for ld in self.loads:
            if ld.kind == "dead-pressure":
                out += float(np.sum(self._k["dead"]["val"](
                    *self._surface_load_args(ld, P, u, t),
                    ld.magnitude, np.asarray(ld.direction, dtype=float))))
            elif ld.kind == "projected-pressure":
                out += float(np.sum(self._k["proj"]["val"](
                    *self._surface_load_args(ld, P, u, t),
                    ld.magnitude, np.asarray(ld.direction, dtype=float),
                    np.asarray(ld.axis, dtype=float))))
            elif ld.kind == "body-force":
                f = ld.magnitude * np.asarray(ld.direction, dtype=float)
                out += float(np.sum(self._k["body"]["val"](
                    *self._surface_load_args(ld, P, u, t), f)))
            elif ld.kind == "edge-traction":
                E = self.edge_tables[ld.side]
                tv = ld.magnitude * np.asarray(ld.direction, dtype=float)
                out += float(np.sum(self._k["edge"]["val"](
                    self._loc(P, side=ld.side), self._loc(u, side=ld.side),
                    E.B0, E.B1t, E.wq, tv)))
        return out

    # -- residual and tangent -------------------------------------------------
    def _scatter_vec(self, contrib_u3):
        out = np.zeros(3 * self.n_cp)
        np.add.at(out, self._dofs, np.asarray(contrib_u3).reshape(len(self._dofs), -1))
        return out

    def _scatter_vec_scalar(self, contrib, idx=None):
        out = np.zeros(self.n_cp)
        np.add.at(out, self.tables.idx if idx is None else idx,
                  np.asarray(contrib).reshape(len(contrib), -1))
        return out

    def _scatter_mat(self, blocks, coo, shape):
        I, J = coo
        vals = np.asarray(blocks).ravel()
        return sp.coo_matrix((vals, (I, J)), shape=shape).tocsr()

    def residual(self, P, t, u) -> np.ndarray:
        """Gradient of the total potential wrt displacement coefficients
        (internal minus external), follower work included."""
        T = self.tables
        m = self.material
        g = self._k["int"]["gu"](self._loc(P), self._loc(u), self._loc(t),
                                 T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        R = self._scatter_vec(g)
        for ld in self.loads:
            R -= self._load_residual(ld, P, u, t)
        return R

    def _load_residual(self, ld, P, u, t):
        T = self.tables
        if ld.kind == "dead-pressure":
            g = self._k["dead"]["gu"](*self._surface_load_args(ld, P, u, t),
                                      ld.magnitude, np.asarray(ld.direction, dtype=float))
            return self._scatter_vec(g)
        if ld.kind == "projected-pressure":
            g = self._k["proj"]["gu"](*self._surface_load_args(ld, P, u, t),
                                      ld.magnitude, np.asarray(ld.direction, dtype=float),
                                      np.asarray(ld.axis, dtype=float))
            return self._scatter_vec(g)
        if ld.kind == "body-force":
            f = ld.magnitude * np.asarray(ld.direction, dtype=float)
            g = self._k["body"]["gu"](*self._surface_load_args(ld, P, u, t), f)
            return self._scatter_vec(g)
        if ld.kind == "edge-traction":
            E = self.edge_tables[ld.side]
            tv = ld.magnitude * np.asarray(ld.direction, dtype=float)
            g = self._k["edge"]["gu"](self._loc(P, side=ld.side),
                                      self._loc(u, side=ld.side),
                                      E.B0, E.B1t, E.wq, tv)
            out = np.zeros(3 * self.n_cp)
            dofs = (3 * E.idx[:, :, None] + np.arange(3)).reshape(len(E.idx), -1)
            np.add.at(out, dofs, np.asarray(g).reshape(len(E.idx), -1))
            return out
        if ld.kind == "follower-pressure":
            g = self._k["fol"]["val"](self._loc(P), self._loc(u),
                                      T.B0, T.B1, T.wq, ld.magnitude)
            return self._scatter_vec(g)
        raise ValidationError(ld.kind)

    def tangent(self, P, t, u) -> sp.csr_matrix:
        T = self.tables
        m = self.material
        nel, nloc = T.idx.shape
        H = self._k["int"]["huu"](self._loc(P), self._loc(u), self._loc(t),
                                  T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        K = self._scatter_mat(H, self._coo_uu, (3 * self.n_cp, 3 * self.n_cp))
        for ld in self.loads:
            if ld.kind == "follower-pressure":
                J = self._k["fol"]["ju"](self._loc(P), self._loc(u),
                                         T.B0, T.B1, T.wq, ld.magnitude)
                K = K - self._scatter_mat(J, self._coo_uu,
                                          (3 * self.n_cp, 3 * self.n_cp))
        return K

    # -- cross partials -------------------------------------------------------
    def dRdP(self, P, t, u) -> sp.csr_matrix:
        """Residual sensitivity to the geometry coefficients."""
        T = self.tables
        m = self.material
        shape = (3 * self.n_cp, 3 * self.n_cp)
        H = self._k["int"]["huP"](self._loc(P), self._loc(u), self._loc(t),
                                  T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        out = self._scatter_mat(H, self._coo_uu, shape)
        if not self.include_load_geometry_partials:
            return out
        for ld in self.loads:
            if ld.kind == "dead-pressure":
                J = self._k["dead"]["huP"](*self._surface_load_args(ld, P, u, t),
                                           ld.magnitude, np.asarray(ld.direction, dtype=float))
                out = out - self._scatter_mat(J, self._coo_uu, shape)
            elif ld.kind == "projected-pressure":
                J = self._k["proj"]["huP"](*self._surface_load_args(ld, P, u, t),
                                           ld.magnitude, np.asarray(ld.direction, dtype=float),
                                           np.asarray(ld.axis, dtype=float))
                out = out - self._scatter_mat(J, self._coo_uu, shape)
            elif ld.kind == "body-force":
                f = ld.magnitude * np.asarray(ld.direction, dtype=float)
                J = self._k["body"]["huP"](*self._surface_load_args(ld, P, u, t), f)
                out = out - self._scatter_mat(J, self._coo_uu, shape)
            elif ld.kind == "edge-traction":
                E = self.edge_tables[ld.side]
                tv = ld.magnitude * np.asarray(ld.direction, dtype=float)
                J = self._k["edge"]["huP"](self._loc(P, side=ld.side),
                                           self._loc(u, side=ld.side),
                                           E.B0, E.B1t, E.wq, tv)
                dofs = (3 * E.idx[:, :, None] + np.arange(3)).reshape(len(E.idx), -1)
                nl = dofs.shape[1]
                coo = (np.repeat(dofs, nl, axis=1).ravel(), np.tile(dofs, (1, nl)).ravel())
                out = out - self._scatter_mat(J, coo, shape)
            elif ld.kind == "follower-pressure":
                J = self._k["fol"]["jP"](self._loc(P), self._loc(u),
                                         T.B0, T.B1, T.wq, ld.magnitude)
                out = out - self._scatter_mat(J, self._coo_uu, shape)
        return out

    def dRdt(self, P, t, u) -> sp.csr_matrix:
        T = self.tables
        m = self.material
        shape = (3 * self.n_cp, self.n_cp)
        H = self._k["int"]["hut"](self._loc(P), self._loc(u), self._loc(t),
                                  T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        out = self._scatter_mat(H, self._coo_ut, shape)
        for ld in self.loads:
            if ld.kind == "body-force":
                f = ld.magnitude * np.asarray(ld.direction, dtype=float)
                J = self._k["body"]["hut"](*self._surface_load_args(ld, P, u, t), f)
                out = out - self._scatter_mat(J, self._coo_ut, shape)
        return out

    # -- objective partials ---------------------------------------------------
    def dWint_du(self, P, t, u) -> np.ndarray:
        T = self.tables
        m = self.material
        g = self._k["int"]["gu"](self._loc(P), self._loc(u), self._loc(t),
                                 T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        return self._scatter_vec(g)

    def dWint_dP(self, P, t, u) -> np.ndarray:
        T = self.tables
        m = self.material
        g = self._k["int"]["gP"](self._loc(P), self._loc(u), self._loc(t),
                                 T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        return self._scatter_vec(g)

    def dWint_dt(self, P, t, u) -> np.ndarray:
        T = self.tables
        m = self.material
        g = self._k["int"]["gt"](self._loc(P), self._loc(u), self._loc(t),
                                 T.B0, T.B1, T.B2, T.wq, m.E, m.nu)
        return self._scatter_vec_scalar(g)

    # -- geometric functionals --------------------------------------------------
    def volume(self, P, t) -> float:
        T = self.tables
        return float(np.sum(self._k["vol"]["val"](self._loc(P), self._loc(t),
                                                  T.B0, T.B1, T.wq)))

    def dvol_dP(self, P, t) -> np.ndarray:
        T = self.tables
        g = self._k["vol"]["gP"](self._loc(P), self._loc(t), T.B0, T.B1, T.wq)
        return self._scatter_vec(g)

    def dvol_dt(self, P, t) -> np.ndarray:
        T = self.tables
        g = self._k["vol"]["gt"](self._loc(P), self._loc(t), T.B0, T.B1, T.wq)
        return self._scatter_vec_scalar(g)

    def element_areas(self, P) -> np.ndarray:
        T = self.tables
        ones = np.ones(self.n_cp)
        vals = self._k["vol"]["val"](self._loc(P), self._loc(ones), T.B0, T.B1, T.wq)
        return np.asarray(vals)

    def area(self, P) -> float:
        return float(np.sum(self.element_areas(P)))

    # -- boundary -----------------------------------------------------------------
    def side_cp_indices(self, side: str, rows: int = 1) -> np.ndarray:
        """Flat control-point indices of the first ``rows`` grid lines next
        to a side (spline space only)."""
        if self.space != "spline":
            raise ValidationError("side rows are defined on the spline net")
        nu, nv = self.patch.ku.n, self.patch.kv.n
        grid = np.arange(nu * nv).reshape(nu, nv)
        if side == "umin":
            sel = grid[:rows, :]
        elif side == "umax":
            sel = grid[-rows:, :]
        elif side == "vmin":
            sel = grid[:, :rows]
        elif side == "vmax":
            sel = grid[:, -rows:]
        else:
            raise ValidationError(f"unknown side {side!r}")
        return sel.ravel()


# ---------------------------------------------------------------------------
# pointwise kinematics (user-facing, plain numpy)
# ---------------------------------------------------------------------------

def kinematics(patch: NurbsPatch, u_coeffs: np.ndarray, xi,
               material: Material | None = None,
               thickness: np.ndarray | float | None = None) -> MidsurfaceState:
    """Midsurface state at one parametric point.

    ``u_coeffs``: (n_cp, 3) displacement coefficients.  Resultants are
    filled when material and thickness are given.
    """
    idx, B0, B1, B2 = patch.basis_row(xi, 2)
    P = patch.cp_flat[idx]
    ue = np.asarray(u_coeffs).reshape(patch.n_cp, 3)[idx]
    A = B1.T @ P
    a = B1.T @ (P + ue)
    A3 = np.cross(A[0], A[1])
    nA = np.linalg.norm(A3)
    scale = max(np.linalg.norm(A[0]) * np.linalg.norm(A[1]), 1e-300)
    if nA < 1e-14 * scale:
        raise GeometryError(f"patch {patch.pid}: degenerate tangents at {tuple(xi)}")
    a3 = np.cross(a[0], a[1])
    na = np.linalg.norm(a3)
    if na < 1e-14 * scale:
        raise GeometryError(f"patch {patch.pid}: degenerate deformed tangents at {tuple(xi)}")
    A3u, a3u = A3 / nA, a3 / na
    eps = 0.5 * (a @ a.T - A @ A.T)
    HA = B2.T @ P
    ha = B2.T @ (P + ue)

    def sym2(v):
        return np.array([[v[0], v[1]], [v[1], v[2]]])

    kap = sym2(HA @ A3u) - sym2(ha @ a3u)
    state = MidsurfaceState(A=A, a=a, A3=A3u, a3=a3u, eps=eps, kappa=kap)
    if material is not None and thickness is not None:
        if np.isscalar(thickness):
            tq = float(thickness)
        else:
            tq = float(B0 @ np.asarray(thickness)[idx])
        Ainv = np.linalg.inv(A @ A.T)
        coef = material.E / (1 - material.nu**2)

        def stress(e):
            return coef * (material.nu * np.trace(Ainv @ e) * Ainv
                           + (1 - material.nu) * Ainv @ e @ Ainv)

        state.n = tq * stress(eps)
        state.m = tq**3 / 12.0 * stress(kap)
    return state
