import numpy as np
import pytest

from shellopt.errors import ContainmentError
from shellopt.extraction import build_extraction, build_ffd_eval, project_to_spline
from shellopt.splines import (
    KnotVector,
    LagrangeSpace,
    NurbsPatch,
    BsplineVolume,
    open_uniform_knots,
)

from test_splines import greville_identity_block, random_cubic_patch, trilinear_unit_block


def line_patch(p, n, height=0.0):
    """Degenerate-thin strip used to probe a 1D factor."""
    ku = open_uniform_knots(p, n)
    kv = KnotVector(1, np.array([0.0, 0.0, 1.0, 1.0]))
    g = ku.greville()
    cp = np.zeros((n, 2, 3))
    cp[:, :, 0] = g[:, None]
    cp[:, 1, 1] = 1.0
    cp[:, :, 2] = height
    return NurbsPatch(ku, kv, cp)


class TestBuildExtraction:
    def test_single_element_quadratic_rows(self):
        patch = line_patch(2, 3)
        emap = build_extraction(patch)
        # 1D factor at nodes {0, 0.5, 1}: Bernstein values
        M = emap.matrix.toarray()
        u_nodes = emap.node_coords[:, 0]
        rows0 = M[np.isclose(u_nodes, 0.0) & np.isclose(emap.node_coords[:, 1], 0.0)]
        rows5 = M[np.isclose(u_nodes, 0.5) & np.isclose(emap.node_coords[:, 1], 0.0)]
        rows1 = M[np.isclose(u_nodes, 1.0) & np.isclose(emap.node_coords[:, 1], 0.0)]
        np.testing.assert_allclose(rows0[0][[0, 2, 4]], [1, 0, 0], atol=1e-14)
        np.testing.assert_allclose(rows5[0][[0, 2, 4]], [0.25, 0.5, 0.25], atol=1e-14)
        np.testing.assert_allclose(rows1[0][[0, 2, 4]], [0, 0, 1], atol=1e-14)

    def test_linear_patch_identity(self):
        k = KnotVector(1, np.array([0.0, 0.0, 0.5, 1.0, 1.0]))
        g = np.array([0.0, 0.5, 1.0])
        cp = np.zeros((3, 3, 3))
        cp[:, :, 0] = g[:, None]
        cp[:, :, 1] = g[None, :]
        patch = NurbsPatch(k, k, cp)
        emap = build_extraction(patch)
        np.testing.assert_allclose(emap.matrix.toarray(), np.eye(9), atol=1e-14)

    def test_row_sums_and_roundtrip(self):
        patch = random_cubic_patch(7)
        emap = build_extraction(patch)
        np.testing.assert_allclose(np.asarray(emap.matrix.sum(axis=1)).ravel(), 1.0, atol=1e-12)
        nodal = emap.extend(patch.cp_flat)
        for i, xi in enumerate(emap.node_coords):
            X, _, _ = patch.eval(xi, 0)
            np.testing.assert_allclose(nodal[i], X, atol=1e-12)

    def test_extraction_identity_random_points(self):
        patch = random_cubic_patch(11)
        emap = build_extraction(patch)
        space = LagrangeSpace.for_patch(patch)
        rng = np.random.default_rng(3)
        for xi in rng.random((100, 2)):
            idx_s, Bs, _, _ = patch.basis_row(xi, 0)
            n_iga = np.zeros(patch.n_cp)
            n_iga[idx_s] = Bs
            idx_f, Bf, _, _ = space.basis_row(xi, 0)
            n_fe = np.zeros(space.n_nodes)
            n_fe[idx_f] = Bf
            np.testing.assert_allclose(emap.matrix.T @ n_fe, n_iga, atol=1e-10)


class TestProjectToSpline:
    def test_consistent_roundtrip(self):
        patch = random_cubic_patch(13)
        emap = build_extraction(patch)
        rng = np.random.default_rng(4)
        Q = rng.standard_normal((patch.n_cp, 3))
        x, res = project_to_spline(emap, emap.matrix @ Q)
        np.testing.assert_allclose(x, Q, atol=1e-10)
        assert res < 1e-10

    def test_orthogonal_perturbation_ignored(self):
        patch = random_cubic_patch(17)
        emap = build_extraction(patch)
        rng = np.random.default_rng(5)
        Q = rng.standard_normal(patch.n_cp)
        b = emap.matrix @ Q
        # component orthogonal to range(M)
        r = rng.standard_normal(b.size)
        Md = emap.matrix.toarray()
        r -= Md @ np.linalg.lstsq(Md, r, rcond=None)[0]
        x1, _ = emap.project(b)
        x2, res2 = emap.project(b + r)
        np.testing.assert_allclose(x1, x2, atol=1e-9)
        assert res2 > 1e-8  # the orthogonal part stays as residual

    def test_rigid_translation_gives_translated_net(self):
        k = KnotVector(1, np.array([0.0, 0.0, 0.5, 1.0, 1.0]))
        g = np.array([0.0, 0.5, 1.0])
        cp = np.zeros((3, 3, 3))
        cp[:, :, 0] = g[:, None]
        cp[:, :, 1] = g[None, :]
        patch = NurbsPatch(k, k, cp)
        emap = build_extraction(patch)
        d = np.array([0.3, -0.2, 0.7])
        nodal = emap.extend(patch.cp_flat) + d
        x, res = emap.project(nodal)
        np.testing.assert_allclose(x, patch.cp_flat + d, atol=1e-12)
        assert res < 1e-12

    def test_project_then_extend_identity(self):
        patch = random_cubic_patch(19)
        emap = build_extraction(patch)
        rng = np.random.default_rng(6)
        Q = rng.standard_normal(patch.n_cp)
        x, _ = emap.project(emap.extend(Q))
        np.testing.assert_allclose(x, Q, atol=1e-10)


class TestBuildFfdEval:
    def test_identity_reproduction(self):
        block = trilinear_unit_block()
        rng = np.random.default_rng(7)
        pts = rng.random((40, 3))
        amap = build_ffd_eval(block, pts)
        np.testing.assert_allclose(amap.apply(block.cp_flat), pts, atol=1e-12)

    def test_row_sums(self):
        block = greville_identity_block(2, 5)
        rng = np.random.default_rng(8)
        amap = build_ffd_eval(block, rng.random((60, 3)))
        np.testing.assert_allclose(np.asarray(amap.matrix.sum(axis=1)).ravel(), 1.0, atol=1e-12)

    def test_translation_affinity(self):
        block = greville_identity_block(2, 4)
        rng = np.random.default_rng(9)
        pts = rng.random((25, 3))
        amap = build_ffd_eval(block, pts)
        d = np.array([0.1, 0.2, -0.3])
        moved = amap.apply(block.cp_flat + d)
        np.testing.assert_allclose(moved, pts + d, atol=1e-12)

    def test_containment_error_names_point(self):
        block = trilinear_unit_block()
        with pytest.raises(ContainmentError, match="point 1"):
            build_ffd_eval(block, np.array([[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]]), label="patch p0")


class TestIntersectionPreservationProxy:
    def test_shared_edge_gap_stays_small(self):
        # two patches sharing the line x=0.5; smooth lattice perturbation
        ku_a = open_uniform_knots(3, 8, 0.0, 0.5)
        ku_b = open_uniform_knots(3, 9, 0.5, 1.0)
        kv_a = open_uniform_knots(3, 9)
        kv_b = open_uniform_knots(3, 8)

        def flat(ku, kv):
            gu, gv = ku.greville(), kv.greville()
            cp = np.zeros((ku.n, kv.n, 3))
            cp[:, :, 0] = gu[:, None]
            cp[:, :, 1] = gv[None, :]
            return NurbsPatch(ku, kv, cp)

        pa, pb = flat(ku_a, kv_a), flat(ku_b, kv_b)
        ea, eb = build_extraction(pa), build_extraction(pb)
        # single-element quartic block: any lattice move is a smooth map
        k = open_uniform_knots(4, 5)
        g = k.greville()
        kz = open_uniform_knots(4, 5, -0.3, 0.3)
        base = np.stack(np.meshgrid(g, g, kz.greville(), indexing="ij"), axis=-1)
        block = BsplineVolume(k, k, kz, base)
        amap_a = build_ffd_eval(block, ea.extend(pa.cp_flat))
        amap_b = build_ffd_eval(block, eb.extend(pb.cp_flat))
        # smooth perturbation bounded by 10% of the box
        lat = base.reshape(-1, 3).copy()
        lat[:, 2] += 0.06 * np.sin(2 * lat[:, 0]) * np.cos(lat[:, 1])
        lat[:, 0] += 0.04 * np.cos(lat[:, 1])
        cp_a, _ = ea.project(amap_a.apply(lat))
        cp_b, _ = eb.project(amap_b.apply(lat))
        new_a = NurbsPatch(pa.ku, pa.kv, cp_a.reshape(pa.ku.n, pa.kv.n, 3))
        new_b = NurbsPatch(pb.ku, pb.kv, cp_b.reshape(pb.ku.n, pb.kv.n, 3))
        diag = np.linalg.norm([1.0, 1.0, 0.12])
        gaps = []
        for s in np.linspace(0, 1, 33):
            xa, _, _ = new_a.eval((0.5, s), 0)
            xb, _, _ = new_b.eval((0.5, s), 0)
            gaps.append(np.linalg.norm(xa - xb))
        assert max(gaps) <= 1e-6 * diag
