"""Dislocated-ring, cut-operator, and counting-identity tests."""

import numpy as np
import pytest

import softwall as sw


@pytest.fixture(scope="module")
def ssh():
    return sw.ssh_kernel(1.5, 0.5)


SIGMA = 7.0  # E + 4*C_{a,b} + 1 for the SSH preset at E = 0


class TestAssembleRing:
    def test_too_few_cells(self, ssh):
        with pytest.raises(sw.TooFewCells):
            sw.assemble_ring(ssh, SIGMA, 0.0, 4)

    def test_t_range(self, ssh):
        with pytest.raises(ValueError):
            sw.assemble_ring(ssh, SIGMA, 1.5, 8)

    def test_centered_site_labels(self):
        assert sw.ring_sites(1) == [0]
        assert sw.ring_sites(2) == [0, 1]
        assert sw.ring_sites(3) == [-1, 0, 1]
        assert sw.ring_sites(6) == [-2, -1, 0, 1, 2, 3]

    def test_linearity(self, ssh):
        ring0 = sw.assemble_ring(ssh, SIGMA, 0.0, 9).matrix
        ring1 = sw.assemble_ring(ssh, SIGMA, 1.0, 9).matrix
        for t in (0.25, 0.5, 0.8):
            interp = sw.assemble_ring(ssh, SIGMA, t, 9).matrix
            assert np.max(np.abs(interp - (1 - t) * ring0 - t * ring1)) < 1e-14

    def test_midpoint_entrywise(self, ssh):
        ring0 = sw.assemble_ring(ssh, SIGMA, 0.0, 5).matrix
        ring1 = sw.assemble_ring(ssh, SIGMA, 1.0, 5).matrix
        mid = sw.assemble_ring(ssh, SIGMA, 0.5, 5).matrix
        assert np.array_equal(mid, 0.5 * (ring0 + ring1))

    def test_t0_spectrum_inside_discrete_fibers(self, ssh):
        cells = 12
        vals = np.sort(np.linalg.eigvalsh(sw.assemble_ring(ssh, SIGMA, 0.0, cells).matrix))
        fibers = np.sort(np.concatenate([
            np.linalg.eigvalsh(sw.bloch_fiber(ssh, 2 * np.pi * m / cells))
            for m in range(cells)
        ]))
        assert np.max(np.abs(vals - fibers)) < 1e-9

    def test_t1_decoupling(self, ssh):
        cells = 11
        ring1 = sw.assemble_ring(ssh, SIGMA, 1.0, cells)
        vals = np.linalg.eigvalsh(ring1.matrix)
        nearest = np.sort(np.abs(vals - SIGMA))[:2]
        assert np.max(nearest) < 1e-10
        # deleting the site-0 block reproduces the (cells-1)-ring spectrum
        n = 2
        zero_pos = (cells - 1) // 2
        keep = np.ones(cells * n, dtype=bool)
        keep[zero_pos * n:(zero_pos + 1) * n] = False
        reduced = ring1.matrix[np.ix_(keep, keep)]
        smaller = sw.assemble_ring(ssh, SIGMA, 0.0, cells - 1).matrix
        dev = np.max(np.abs(
            np.sort(np.linalg.eigvalsh(reduced)) - np.sort(np.linalg.eigvalsh(smaller))
        ))
        assert dev < 1e-10


class TestRingFlowCheck:
    def test_ssh_counts_20_19(self, ssh):
        rep = sw.ring_flow_check(ssh, SIGMA, 0.0, 20)
        assert rep["count_t0"] == 20 and rep["count_t1"] == 19
        assert rep["implied_flow"] == -1 and rep["pass"]

    def test_endpoint_identity_all_ell(self, ssh):
        for cells in range(5, 65):
            rep = sw.ring_flow_check(ssh, SIGMA, 0.0, cells)
            assert rep["count_t0"] == cells and rep["count_t1"] == cells - 1

    def test_below_all_bands(self, ssh):
        rep = sw.ring_flow_check(ssh, SIGMA, -5.0, 12)
        assert rep["count_t0"] == 0 and rep["count_t1"] == 0 and rep["pass"]

    def test_random_gapped_two_band_model(self):
        rng = np.random.default_rng(42)
        while True:
            b = rng.normal(size=(2, 2))
            b = b + b.T
            a = 0.4 * rng.normal(size=(2, 2))
            jac = sw.PeriodicJacobi(2, b, a)
            catalog = sw.gap_catalog(sw.band_structure(jac, 512))
            if catalog.gaps and catalog.gaps[0].width > 0.2:
                break
        energy = catalog.gaps[0].center
        sigma = energy + 4 * jac.coupling_norm + 1
        rep = sw.ring_flow_check(jac, sigma, energy, 16)
        assert rep["count_t0"] == 16 and rep["count_t1"] == 15

    def test_sigma_below_energy_rejected(self, ssh):
        with pytest.raises(ValueError):
            sw.ring_flow_check(ssh, -1.0, 0.0, 8)

    def test_energy_in_band_rejected(self, ssh):
        with pytest.raises(sw.EInBand):
            sw.ring_flow_check(ssh, SIGMA, 1.5, 8)


class TestCutOperator:
    def test_t0_layout(self, ssh):
        stencil = sw.cut_operator(ssh, 0.0)
        a = ssh.offdiag
        n = 2
        mat = stencil.matrix
        assert np.allclose(mat[0:n, n:2 * n], a)          # (-2, -1) bond
        assert np.allclose(mat[n:2 * n, 2 * n:3 * n], a)  # (-1, 0) bond
        assert np.allclose(mat[2 * n:3 * n, 3 * n:4 * n], 0.0)  # (0, 1) bond off

    def test_t1_is_shifted_t0(self, ssh):
        k0 = sw.cut_operator(ssh, 0.0).embed(10, 2)
        k1 = sw.cut_operator(ssh, 1.0).embed(10, 2)
        n = 2
        shifted = np.zeros_like(k0)
        shifted[n:, n:] = k0[:-n, :-n]
        assert np.max(np.abs(k1 - shifted)) < 1e-14

    def test_cut_decouples_half_lines(self, ssh):
        wall = sw.steep_wall(sw.linear_ramp(1.0, offsets=(0.0, 0.25)), ssh, 0.0)
        half_width = 12
        for t in (0.0, 1.0, 0.6):
            full = sw.assemble_edge(ssh, wall, t, half_width).matrix
            cut = full - sw.cut_operator(ssh, t).embed(half_width, 2)
            neg = 2 * half_width  # orbitals on sites < 0
            assert np.max(np.abs(cut[:neg, neg:])) == 0.0
            assert np.max(np.abs(cut[neg:, :neg])) == 0.0

    def test_left_block_last_bond_scaling(self, ssh):
        wall = sw.steep_wall(sw.linear_ramp(1.0, offsets=(0.0, 0.25)), ssh, 0.0)
        t = 0.37
        full = sw.assemble_edge(ssh, wall, t, 8).matrix
        cut = full - sw.cut_operator(ssh, t).embed(8, 2)
        left = cut[:16, :16]
        from softwall.dislocation import left_block_matrix
        assert np.max(np.abs(left - left_block_matrix(ssh, wall, t, 8))) < 1e-14


class TestLeftBlockGapCheck:
    def test_ssh_pass(self, ssh):
        steep = sw.steep_wall(sw.linear_ramp(1.0, offsets=(0.0, 0.25)), ssh, 0.0)
        rep = sw.left_block_gap_check(ssh, steep, 0.0, np.linspace(0, 1, 50), 60)
        assert rep["pass"] and rep["min_eigenvalue"] >= 1.0 - 1e-6

    def test_random_jacobi_pass(self):
        rng = np.random.default_rng(3)
        b = rng.normal(size=(2, 2))
        b = b + b.T
        jac = sw.PeriodicJacobi(2, b, 0.5 * rng.normal(size=(2, 2)))
        energy = -0.7
        steep = sw.steep_wall(sw.linear_ramp(2.0, offsets=(0.0, 0.5)), jac, energy)
        rep = sw.left_block_gap_check(jac, steep, energy, np.linspace(0, 1, 20), 40)
        assert rep["pass"]


class TestProjectorRankConvergence:
    def test_window_in_resolvent_at_t0(self, ssh):
        rep = sw.projector_rank_convergence(ssh, SIGMA, (-0.5, 0.5), 0.0, [8, 16, 32])
        assert all(row["count_in_window"] == 0 for row in rep["rows"])
        assert rep["reference"]["count_in_window"] == 0

    def test_stabilization_with_branch_in_window(self, ssh):
        # at t = 0.25 the dislocated branch sits near 0.57 inside the gap
        rep = sw.projector_rank_convergence(ssh, SIGMA, (0.3, 0.9), 0.25,
                                            [8, 16, 32, 64])
        assert rep["reference"]["count_in_window"] == 1
        assert rep["stabilized_from"] is not None
        assert rep["rows"][-1]["count_in_window"] == 1

    def test_t1_counts_follow_ring_identity(self, ssh):
        rep = sw.projector_rank_convergence(ssh, SIGMA, (-0.5, 0.5), 1.0, [8, 16])
        for row in rep["rows"]:
            assert row["count_below_E"] == row["ell"] - 1
            assert row["count_in_window"] == 0
