"""Sparse linkage between spline, nodal Lagrange, and FFD-block coefficients.

For each patch, the extraction matrix M (n_FE x n_IGA) holds the spline
basis values at the Lagrange nodes, so nodal values of any spline field
are ``M @ coeffs`` and spline basis functions decompose as
``N_IGA = M^T N_FE``.  The FFD evaluation matrix A holds trivariate
block basis values at a fixed set of physical points (the baseline
Lagrange control points).  Projection back to spline coefficients is the
least-squares solve ``min ||M x - b||`` via the normal equations; the
factorization is cached and reused across optimization iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContainmentError, GeometryError
from .splines import BsplineVolume, LagrangeSpace, NurbsPatch

COND_LIMIT = 1e12


@dataclass
class ExtractionMap:
    """Spline-to-nodal linkage of one patch."""

    matrix: sp.csr_matrix
    node_coords: np.ndarray
    pid: str = "patch"
    _solve: object = field(default=None, repr=False)
    _cond_est: float = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def _factorize(self):
        """Build a solver mapping a nodal column to least-squares spline
        coefficients; normal equations by default, dense QR when the normal
        operator is badly conditioned."""
        if self._solve is None:
            M = self.matrix
            MtM = (M.T @ M).tocsc()
            n = MtM.shape[0]
            try:
                lu = spla.splu(MtM)
                if n <= 500:
                    self._cond_est = float(np.linalg.cond(MtM.toarray(), 1))
                else:
                    op = spla.LinearOperator(MtM.shape, matvec=lu.solve)
                    self._cond_est = float(spla.onenormest(op) * spla.onenormest(MtM))
            except Exception:
                self._cond_est = np.inf
            if not np.isfinite(self._cond_est) or self._cond_est > COND_LIMIT:
                Md = M.toarray()
                if np.linalg.matrix_rank(Md) < M.shape[1]:
                    raise GeometryError(
                        f"patch {self.pid}: extraction matrix is rank deficient")
                q, r = np.linalg.qr(Md)
                self._solve = lambda b, q=q, r=r: np.linalg.solve(r, q.T @ b)
            else:
                Mt = M.T.tocsr()
                self._solve = lambda b, lu=lu, Mt=Mt: lu.solve(Mt @ b)
        return self._solve

    def project(self, values: np.ndarray):
        """Least-squares fit of nodal ``values`` by spline coefficients.

        Returns ``(coeffs, residual)`` with residual = ||M coeffs - values||_2.
        """
        solve = self._factorize()
        b = np.asarray(values, dtype=float)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        x = np.stack([solve(b[:, j]) for j in range(b.shape[1])], axis=1)
        res = float(np.linalg.norm(self.matrix @ x - b))
        return (x[:, 0] if squeeze else x), res

    def extend(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal values of a spline coefficient field."""
        return self.matrix @ coeffs


def build_extraction(patch: NurbsPatch) -> ExtractionMap:
    """Extraction matrix of one patch: row i holds the spline basis values
    at Lagrange node i."""
    space = LagrangeSpace.for_patch(patch)
    nodes = space.node_coords()
    n_fe, n_iga = nodes.shape[0], patch.n_cp
    rows, cols, vals = [], [], []
    for i, xi in enumerate(nodes):
        idx, B0, _, _ = patch.basis_row(xi, 0)
        rows.extend([i] * idx.size)
        cols.extend(idx.tolist())
        vals.extend(B0.tolist())
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n_fe, n_iga))
    M.sum_duplicates()
    emap = ExtractionMap(M, nodes, patch.pid)
    emap._factorize()  # fail fast on rank deficiency
    return emap


@dataclass
class FfdEvalMap:
    """FFD-block basis values at a fixed point set (scalar-field operator;
    apply per coordinate component)."""

    matrix: sp.csr_matrix
    points: np.ndarray
    block_shape: tuple

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, lattice: np.ndarray) -> np.ndarray:
        """Evaluate the map for lattice coefficients shaped (n_cp,) or
        (n_cp, k) or the full (nu, nv, nw, k) grid."""
        arr = np.asarray(lattice, dtype=float)
        if arr.ndim == 4:
            arr = arr.reshape(-1, arr.shape[-1])
        elif arr.ndim == 3:
            arr = arr.reshape(-1)
        return self.matrix @ arr


def build_ffd_eval(block: BsplineVolume, points: np.ndarray, label: str = "points") -> FfdEvalMap:
    """Evaluate the block's trivariate basis at each physical point (the
    block has an identity geometric map, so physical equals parametric)."""
    pts = np.asarray(points, dtype=float)
    rows, cols, vals = [], [], []
    for i, x in enumerate(pts):
        try:
            idx, B = block.basis_row(x)
        except ContainmentError as err:
            raise ContainmentError(f"{label}, point {i}: {err}") from None
        rows.extend([i] * idx.size)
        cols.extend(idx.tolist())
        vals.extend(B.tolist())
    A = sp.csr_matrix((vals, (rows, cols)), shape=(pts.shape[0], block.n_cp))
    A.sum_duplicates()
    return FfdEvalMap(A, pts, block.shape)


def project_to_spline(emap: ExtractionMap, nodal_values: np.ndarray):
    """Module-level convenience wrapper around ExtractionMap.project."""
    return emap.project(nodal_values)
