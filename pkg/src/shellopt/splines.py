"""B-spline/NURBS evaluation and nodal Lagrange spaces.

Univariate basis evaluation follows the standard knot-span recursion
(values and derivatives of the p+1 local functions).  Surfaces are
rational tensor products evaluated with the quotient rule up to second
parametric derivatives, which is all Kirchhoff-Love bending needs.
Trivariate B-spline volumes are polynomial (unit weights).

The nodal Lagrange space of a patch lives on its Bezier element mesh:
per element, degree-p equispaced nodes in each direction, shared
element-boundary nodes deduplicated (a C^0 space).  It provides the
node layout and basis evaluation used to build extraction and transfer
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ContainmentError, GeometryError, ValidationError


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector with degree ``p``.

    The first and last knots must repeat exactly ``p + 1`` times and the
    sequence must be nondecreasing.
    """

    p: int
    knots: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if self.p < 0:
            raise ValidationError("degree must be nonnegative")
        if knots.ndim != 1 or knots.size < 2 * (self.p + 1):
            raise ValidationError("knot vector too short for degree %d" % self.p)
        if np.any(np.diff(knots) < 0):
            raise ValidationError("knot vector must be nondecreasing")
        if not (np.all(knots[: self.p + 1] == knots[0]) and np.all(knots[-self.p - 1:] == knots[-1])):
            raise ValidationError("knot vector must be open (end multiplicity p+1)")
        if not knots[self.p] < knots[-self.p - 1]:
            raise ValidationError("degenerate knot range")

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.p - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.p]), float(self.knots[-self.p - 1])

    @property
    def breakpoints(self) -> np.ndarray:
        """Unique knots spanning the domain (Bezier element boundaries)."""
        lo, hi = self.domain
        return np.unique(self.knots[(self.knots >= lo) & (self.knots <= hi)])

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    def greville(self) -> np.ndarray:
        """Knot averages; control points placed there give an identity map."""
        k = self.knots
        return np.array([k[i + 1: i + self.p + 1].mean() for i in range(self.n)])


def find_span(kv: KnotVector, u: float) -> int:
    """Index i with knots[i] <= u < knots[i+1]; the right end clamps to the
    last nonzero span."""
    knots, p = kv.knots, kv.p
    lo, hi = kv.domain
    tol = 1e-12 * max(1.0, abs(hi - lo))
    if u < lo - tol or u > hi + tol:
        raise DomainError(f"parameter {u} outside knot range [{lo}, {hi}]")
    u = min(max(u, lo), hi)
    if u >= hi:
        return int(np.searchsorted(knots, hi, side="left") - 1)
    return int(np.searchsorted(knots, u, side="right") - 1)


def basis_and_derivs(kv: KnotVector, u: float, max_deriv: int = 0) -> tuple[int, np.ndarray]:
    """Values and derivatives of the p+1 nonzero basis functions at ``u``.

    Returns ``(span, ders)`` where ``ders[k, j]`` is the k-th derivative of
    the function with global index ``span - p + j``.
    """
    p = kv.p
    span = find_span(kv, u)
    lo, hi = kv.domain
    u = min(max(u, lo), hi)
    U = kv.knots
    n = max_deriv
    ndu = np.zeros((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for j in range(1, p + 1):
        left[j] = u - U[span + 1 - j]
        right[j] = U[span + j] - u
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    ders = np.zeros((n + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, min(n, p) + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = p
    for k in range(1, min(n, p) + 1):
        ders[k, :] *= r
        r *= p - k
    return span, ders


def global_basis_row(kv: KnotVector, u: float, max_deriv: int = 0) -> np.ndarray:
    """Dense row(s) of all n basis values/derivatives at ``u``."""
    span, ders = basis_and_derivs(kv, u, max_deriv)
    out = np.zeros((max_deriv + 1, kv.n))
    out[:, span - kv.p: span + 1] = ders
    return out


# second-derivative component order for surfaces: (uu, uv, vv)
_D2 = ((2, 0), (1, 1), (0, 2))


@dataclass(frozen=True)
class NurbsPatch:
    """Tensor-product NURBS surface with an optional thickness coefficient
    field.

    ``control_points``: (n_u, n_v, 3) in meters.  ``weights``: (n_u, n_v),
    strictly positive.  ``thickness``: scalar or per-control-point array of
    the same coefficient count.
    """

    ku: KnotVector
    kv: KnotVector
    control_points: np.ndarray
    weights: np.ndarray | None = None
    thickness: float | np.ndarray | None = None
    pid: str = "patch"

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        if cp.shape != (self.ku.n, self.kv.n, 3):
            raise ValidationError(
                f"patch {self.pid}: control grid {cp.shape} does not match basis "
                f"counts ({self.ku.n}, {self.kv.n}, 3)")
        object.__setattr__(self, "control_points", cp)
        w = self.weights
        if w is None:
            w = np.ones((self.ku.n, self.kv.n))
        w = np.asarray(w, dtype=float)
        if w.shape != (self.ku.n, self.kv.n):
            raise ValidationError(f"patch {self.pid}: weight grid shape mismatch")
        if np.any(w <= 0):
            raise ValidationError(f"patch {self.pid}: weights must be positive")
        object.__setattr__(self, "weights", w)
        t = self.thickness
        if t is not None and not np.isscalar(t):
            t = np.asarray(t, dtype=float)
            if t.size != self.n_cp:
                raise ValidationError(
                    f"patch {self.pid}: thickness field has {t.size} coefficients, "
                    f"expected {self.n_cp}")
            object.__setattr__(self, "thickness", t)

    @property
    def n_cp(self) -> int:
        return self.ku.n * self.kv.n

    @property
    def cp_flat(self) -> np.ndarray:
        """(n_cp, 3) control points, u-major / v-fastest."""
        return self.control_points.reshape(self.n_cp, 3)

    @property
    def w_flat(self) -> np.ndarray:
        return self.weights.reshape(self.n_cp)

    @property
    def is_rational(self) -> bool:
        return not np.allclose(self.w_flat, 1.0)

    def thickness_coeffs(self) -> np.ndarray:
        """Per-control-point thickness coefficients (constant broadcast)."""
        t = self.thickness
        if t is None:
            raise ValidationError(f"patch {self.pid}: no thickness assigned")
        if np.isscalar(t):
            return np.full(self.n_cp, float(t))
        return np.asarray(t, dtype=float)

    def local_indices(self, span_u: int, span_v: int) -> np.ndarray:
        """Flat control-point indices supported on spans (span_u, span_v)."""
        iu = np.arange(span_u - self.ku.p, span_u + 1)
        iv = np.arange(span_v - self.kv.p, span_v + 1)
        return (iu[:, None] * self.kv.n + iv[None, :]).ravel()

    def basis_row(self, xi, max_deriv: int = 0):
        """Effective coefficient-space basis at ``xi``.

        Returns ``(idx, B0, B1, B2)`` for the (pu+1)(pv+1) supported
        coefficients: values, first parametric derivatives (nloc, 2) and
        second derivatives (nloc, 3) ordered (uu, uv, vv).  For rational
        patches these are the rational basis functions, so any coefficient
        field (geometry, displacement, thickness) contracts the same way.
        """
        u, v = float(xi[0]), float(xi[1])
        su, du = basis_and_derivs(self.ku, u, max_deriv)
        sv, dv = basis_and_derivs(self.kv, v, max_deriv)
        idx = self.local_indices(su, sv)
        # tensor-product polynomial basis and derivatives
        N = {}
        orders = [(0, 0)]
        if max_deriv >= 1:
            orders += [(1, 0), (0, 1)]
        if max_deriv >= 2:
            orders += list(_D2)
        for (a, b) in orders:
            N[(a, b)] = np.outer(du[a], dv[b]).ravel()
        if not self.is_rational:
            B0 = N[(0, 0)]
            B1 = np.stack([N[(1, 0)], N[(0, 1)]], axis=1) if max_deriv >= 1 else None
            B2 = np.stack([N[o] for o in _D2], axis=1) if max_deriv >= 2 else None
            return idx, B0, B1, B2
        wloc = self.w_flat[idx]
        f = {o: wloc * N[o] for o in N}
        W = {o: f[o].sum() for o in f}
        R0 = f[(0, 0)] / W[(0, 0)]
        B1 = B2 = None
        if max_deriv >= 1:
            R1 = np.empty((idx.size, 2))
            for al, o in enumerate(((1, 0), (0, 1))):
                R1[:, al] = (f[o] - R0 * W[o]) / W[(0, 0)]
            B1 = R1
        if max_deriv >= 2:
            R2 = np.empty((idx.size, 3))
            for k, (a, b) in enumerate(_D2):
                oa = (1, 0) if a >= 1 else (0, 1)
                ob = (0, 1) if b >= 1 else (1, 0)
                Ra = B1[:, 0] if oa == (1, 0) else B1[:, 1]
                Rb = B1[:, 0] if ob == (1, 0) else B1[:, 1]
                R2[:, k] = (f[(a, b)] - Ra * W[ob] - Rb * W[oa] - R0 * W[(a, b)]) / W[(0, 0)]
            B2 = R2
        return idx, R0, B1, B2

    def eval(self, xi, max_deriv: int = 0):
        """Evaluate position and parametric derivatives at ``xi``.

        Returns ``(X, A, H)``: position (3,), first derivatives (2, 3) and
        second derivatives (3, 3) ordered (uu, uv, vv); ``A``/``H`` are None
        below the requested order.
        """
        idx, B0, B1, B2 = self.basis_row(xi, max_deriv)
        P = self.cp_flat[idx]
        X = B0 @ P
        A = B1.T @ P if max_deriv >= 1 else None
        H = B2.T @ P if max_deriv >= 2 else None
        return X, A, H

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        cp = self.cp_flat
        return cp.min(axis=0), cp.max(axis=0)


def eval_surface(patch: NurbsPatch, xi, max_deriv: int = 2):
    """Position and parametric derivatives of the surface map (module-level
    convenience wrapper)."""
    return patch.eval(xi, max_deriv)


@dataclass(frozen=True)
class BsplineVolume:
    """Trivariate polynomial B-spline block."""

    ku: KnotVector
    kv: KnotVector
    kw: KnotVector
    control_points: np.ndarray

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        if cp.shape != (self.ku.n, self.kv.n, self.kw.n, 3):
            raise ValidationError(
                f"volume control grid {cp.shape} does not match basis counts "
                f"({self.ku.n}, {self.kv.n}, {self.kw.n}, 3)")
        object.__setattr__(self, "control_points", cp)

    @property
    def n_cp(self) -> int:
        return self.ku.n * self.kv.n * self.kw.n

    @property
    def cp_flat(self) -> np.ndarray:
        return self.control_points.reshape(self.n_cp, 3)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.ku.n, self.kv.n, self.kw.n

    def basis_row(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Indices and values of the supported trivariate basis functions at
        ``theta``; at most (p+1)^3 nonzeros, values sum to 1."""
        kvs = (self.ku, self.kv, self.kw)
        names = "uvw"
        spans, vals = [], []
        for c, kv in enumerate(kvs):
            lo, hi = kv.domain
            t = float(theta[c])
            tol = 1e-9 * max(1.0, hi - lo)
            if t < lo - tol or t > hi + tol:
                raise ContainmentError(
                    f"coordinate {names[c]}={t} outside block range [{lo}, {hi}]")
            s, d = basis_and_derivs(kv, min(max(t, lo), hi), 0)
            spans.append(s)
            vals.append(d[0])
        nu, nv, nw = self.shape
        iu = np.arange(spans[0] - self.ku.p, spans[0] + 1)
        iv = np.arange(spans[1] - self.kv.p, spans[1] + 1)
        iw = np.arange(spans[2] - self.kw.p, spans[2] + 1)
        idx = ((iu[:, None, None] * nv + iv[None, :, None]) * nw + iw[None, None, :]).ravel()
        B = (vals[0][:, None, None] * vals[1][None, :, None] * vals[2][None, None, :]).ravel()
        return idx, B

    def eval(self, theta) -> np.ndarray:
        idx, B = self.basis_row(theta)
        return B @ self.cp_flat[idx]


def eval_volume(block: BsplineVolume, theta) -> np.ndarray:
    return block.eval(theta)


def basis_row(block: BsplineVolume, theta):
    return block.basis_row(theta)


# ---------------------------------------------------------------------------
# Nodal Lagrange space on the Bezier element mesh
# ---------------------------------------------------------------------------

def _lagrange_1d_tables(p: int):
    """Values/derivatives of the p+1 equispaced-node Lagrange polynomials on
    [0, 1]: returns a callable tau -> (p+1, 3) array of (L, L', L'')."""
    nodes = np.linspace(0.0, 1.0, p + 1)

    def ev(tau: float) -> np.ndarray:
        out = np.zeros((p + 1, 3))
        for j in range(p + 1):
            others = [m for m in range(p + 1) if m != j]
            denom = np.prod([nodes[j] - nodes[m] for m in others]) if others else 1.0
            # value
            val = np.prod([tau - nodes[m] for m in others]) if others else 1.0
            out[j, 0] = val / denom
            # first derivative: sum over dropped factor
            d1 = 0.0
            for m in others:
                rest = [l for l in others if l != m]
                d1 += np.prod([tau - nodes[l] for l in rest]) if rest else 1.0
            out[j, 1] = d1 / denom
            # second derivative: sum over dropped pairs
            d2 = 0.0
            for mi, m in enumerate(others):
                for l in others[mi + 1:]:
                    rest = [r for r in others if r != m and r != l]
                    d2 += 2.0 * (np.prod([tau - nodes[r] for r in rest]) if rest else 1.0)
            out[j, 2] = d2 / denom
        return out

    return ev


@dataclass(frozen=True)
class Lagrange1D:
    """C^0 nodal Lagrange space of degree p on the element mesh of a knot
    vector; nodes equispaced per element, shared endpoints deduplicated."""

    p: int
    breakpoints: np.ndarray
    _ev: object = field(repr=False, default=None)

    @classmethod
    def from_knots(cls, kv: KnotVector) -> "Lagrange1D":
        return cls(kv.p, kv.breakpoints, _lagrange_1d_tables(kv.p))

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    @property
    def n_nodes(self) -> int:
        return self.n_elements * self.p + 1

    def nodes(self) -> np.ndarray:
        z = self.breakpoints
        out = [z[0]]
        for e in range(self.n_elements):
            loc = z[e] + (z[e + 1] - z[e]) * np.arange(1, self.p + 1) / self.p
            out.extend(loc.tolist())
        return np.asarray(out)

    def locate(self, u: float) -> int:
        z = self.breakpoints
        tol = 1e-12 * max(1.0, abs(z[-1] - z[0]))
        if u < z[0] - tol or u > z[-1] + tol:
            raise DomainError(f"parameter {u} outside [{z[0]}, {z[-1]}]")
        e = int(np.searchsorted(z, u, side="right") - 1)
        return min(max(e, 0), self.n_elements - 1)

    def basis(self, u: float, max_deriv: int = 0):
        """Local node indices and (p+1, max_deriv+1) basis table at ``u``."""
        e = self.locate(u)
        z = self.breakpoints
        h = z[e + 1] - z[e]
        tau = min(max((u - z[e]) / h, 0.0), 1.0)
        tab = self._ev(tau)
        idx = e * self.p + np.arange(self.p + 1)
        out = tab[:, : max_deriv + 1].copy()
        if max_deriv >= 1:
            out[:, 1] /= h
        if max_deriv >= 2:
            out[:, 2] /= h * h
        return idx, out


@dataclass(frozen=True)
class LagrangeSpace:
    """Tensor-product nodal Lagrange space over a patch's element mesh.

    Node ordering is u-major / v-fastest to match the control-point layout.
    """

    lu: Lagrange1D
    lv: Lagrange1D

    @classmethod
    def for_patch(cls, patch: NurbsPatch) -> "LagrangeSpace":
        return cls(Lagrange1D.from_knots(patch.ku), Lagrange1D.from_knots(patch.kv))

    @property
    def n_nodes(self) -> int:
        return self.lu.n_nodes * self.lv.n_nodes

    def node_coords(self) -> np.ndarray:
        """(n_nodes, 2) parametric node coordinates."""
        nu = self.lu.nodes()
        nv = self.lv.nodes()
        U, V = np.meshgrid(nu, nv, indexing="ij")
        return np.stack([U.ravel(), V.ravel()], axis=1)

    def basis_row(self, xi, max_deriv: int = 0):
        """Global node indices and basis values/derivatives at ``xi``:
        (idx, B0, B1, B2) shaped like NurbsPatch.basis_row."""
        iu, tu = self.lu.basis(float(xi[0]), max_deriv)
        iv, tv = self.lv.basis(float(xi[1]), max_deriv)
        idx = (iu[:, None] * self.lv.n_nodes + iv[None, :]).ravel()
        B0 = np.outer(tu[:, 0], tv[:, 0]).ravel()
        B1 = B2 = None
        if max_deriv >= 1:
            B1 = np.stack([np.outer(tu[:, 1], tv[:, 0]).ravel(),
                           np.outer(tu[:, 0], tv[:, 1]).ravel()], axis=1)
        if max_deriv >= 2:
            B2 = np.stack([np.outer(tu[:, 2], tv[:, 0]).ravel(),
                           np.outer(tu[:, 1], tv[:, 1]).ravel(),
                           np.outer(tu[:, 0], tv[:, 2]).ravel()], axis=1)
        return idx, B0, B1, B2


def lagrange_nodes(ku: KnotVector, kv: KnotVector) -> np.ndarray:
    """Parametric coordinates of the nodal Lagrange space over the Bezier
    element mesh of (ku, kv); shared boundary nodes appear exactly once."""
    if ku.p < 1 or kv.p < 1:
        raise ValidationError("Lagrange space requires degree >= 1")
    return LagrangeSpace(Lagrange1D.from_knots(ku), Lagrange1D.from_knots(kv)).node_coords()


# ---------------------------------------------------------------------------
# Quadrature tables
# ---------------------------------------------------------------------------

def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def open_uniform_knots(p: int, n: int, lo: float = 0.0, hi: float = 1.0) -> KnotVector:
    """Open knot vector with n basis functions, uniformly spaced interior
    knots on [lo, hi]."""
    if n < p + 1:
        raise ValidationError(f"need at least p+1={p + 1} basis functions, got {n}")
    interior = np.linspace(lo, hi, n - p + 1)[1:-1]
    knots = np.concatenate([np.full(p + 1, lo), interior, np.full(p + 1, hi)])
    return KnotVector(p, knots)
