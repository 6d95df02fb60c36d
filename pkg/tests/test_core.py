"""Kernel, fiber, band-structure and supercell tests."""

import numpy as np
import pytest

import softwall as sw


def random_kernel(rng, block_dim=2, hop_range=2):
    """Random finite-range kernel honoring the h(-n) = h(n)^dagger symmetry."""
    blocks = {}
    h0 = rng.normal(size=(block_dim, block_dim)) + 1j * rng.normal(size=(block_dim, block_dim))
    blocks[0] = h0 + h0.conj().T
    for n in range(1, hop_range + 1):
        hn = rng.normal(size=(block_dim, block_dim)) + 1j * rng.normal(size=(block_dim, block_dim))
        blocks[n] = hn
        blocks[-n] = hn.conj().T
    return sw.ConvolutionKernel(block_dim, blocks)


class TestConvolutionKernel:
    def test_symmetry_enforced(self):
        good = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            sw.ConvolutionKernel(2, {1: good, -1: good})  # not the adjoint

    def test_missing_partner_rejected(self):
        with pytest.raises(ValueError):
            sw.ConvolutionKernel(1, {1: [[1.0]]})

    def test_block_shape_enforced(self):
        with pytest.raises(ValueError):
            sw.ConvolutionKernel(2, {0: np.zeros((3, 3))})

    def test_zero_kernel_and_range(self):
        k = sw.ConvolutionKernel(3, {})
        assert k.hop_range == 0
        assert np.allclose(sw.bloch_fiber(k, 0.3), 0.0)

    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        k = random_kernel(rng, block_dim=3, hop_range=2)
        path = tmp_path / "model.json"
        sw.save_kernel(k, path)
        back = sw.load_kernel(path)
        assert back.block_dim == 3
        for n in k.support:
            assert np.allclose(back.block(n), k.block(n), atol=1e-15)


class TestBlochFiber:
    def test_ssh_closed_form_matrix(self):
        j1, j2 = 1.5, 0.5
        fiber = sw.bloch_fiber(sw.ssh_kernel(j1, j2), 0.7)
        expected = np.array([
            [0.0, j1 + j2 * np.exp(-0.7j)],
            [np.conj(j1) + np.conj(j2) * np.exp(0.7j), 0.0],
        ])
        assert np.max(np.abs(fiber - expected)) < 1e-14

    def test_direct_summation_oracle(self):
        # independent oracle: naive python loop over the stored support
        rng = np.random.default_rng(3)
        kernel = random_kernel(rng, block_dim=2, hop_range=2)
        k = 0.7
        oracle = np.zeros((2, 2), dtype=complex)
        for n in kernel.support:
            oracle = oracle + kernel.block(n) * (np.cos(k * n) - 1j * np.sin(k * n))
        assert np.max(np.abs(sw.bloch_fiber(kernel, k) - oracle)) < 1e-13

    def test_hermiticity_random_k(self):
        rng = np.random.default_rng(11)
        kernel = random_kernel(rng, block_dim=3, hop_range=3)
        for k in rng.uniform(-20, 20, size=1000):
            fiber = sw.bloch_fiber(kernel, k)
            assert np.max(np.abs(fiber - fiber.conj().T)) < 1e-12

    def test_ssh_eigenvalue_closed_form(self):
        j1, j2 = 1.5, 0.5
        kernel = sw.ssh_kernel(j1, j2)
        rng = np.random.default_rng(5)
        for k in rng.uniform(-np.pi, np.pi, size=1000):
            vals = np.linalg.eigvalsh(sw.bloch_fiber(kernel, k))
            mag = abs(j1 + j2 * np.exp(1j * k))
            assert abs(vals[0] + mag) < 1e-12 and abs(vals[1] - mag) < 1e-12


class TestBandStructure:
    def test_ssh_hulls(self):
        bands = sw.band_structure(sw.ssh_kernel(1.5, 0.5), 2048)
        hulls = bands.band_hulls()
        # sigma_bulk = [-W, -delta] U [delta, W], W = 2, delta = 1
        assert abs(hulls[0][0] + 2.0) < 1e-6 and abs(hulls[0][1] + 1.0) < 1e-6
        assert abs(hulls[1][0] - 1.0) < 1e-6 and abs(hulls[1][1] - 2.0) < 1e-6

    def test_flat_band_scalar(self):
        kernel = sw.ConvolutionKernel(1, {0: [[2.5]]})
        bands = sw.band_structure(kernel, 16)
        assert np.allclose(bands.curves, 2.5)

    def test_columns_sorted(self):
        rng = np.random.default_rng(9)
        bands = sw.band_structure(random_kernel(rng, 3, 2), 128)
        assert np.all(np.diff(bands.curves, axis=1) >= 0)

    def test_periodicity_wraparound(self):
        rng = np.random.default_rng(13)
        kernel = random_kernel(rng, 2, 2)
        bands = sw.band_structure(kernel, 512)
        # last grid point is k = pi; compare against the fiber at -pi
        wrapped = np.linalg.eigvalsh(sw.bloch_fiber(kernel, -np.pi))
        assert np.max(np.abs(bands.curves[-1] - wrapped)) < 1e-10

    def test_band_continuity_lipschitz(self):
        rng = np.random.default_rng(17)
        kernel = random_kernel(rng, 2, 3)
        bands = sw.band_structure(kernel, 1024)
        lip = kernel.fiber_lipschitz()
        dk = 2 * np.pi / 1024
        jumps = np.abs(np.diff(bands.curves, axis=0))
        assert np.max(jumps) <= lip * dk + 1e-9

    def test_k_count_validation(self):
        with pytest.raises(ValueError):
            sw.band_structure(sw.ssh_kernel(), 1)


class TestGapCatalog:
    def test_touching_bands_yield_no_gap(self):
        bands = sw.band_structure(sw.ssh_kernel(1.0, 1.0), 2048)
        assert sw.gap_catalog(bands).gaps == ()

    def test_bands_below_annotation(self):
        catalog = sw.gap_catalog(sw.band_structure(sw.ssh_kernel(1.5, 0.5), 1024))
        assert len(catalog.gaps) == 1
        assert catalog.gaps[0].bands_below == 1

    def test_count_bands_below(self):
        catalog = sw.gap_catalog(sw.band_structure(sw.ssh_kernel(1.5, 0.5), 1024))
        assert sw.count_bands_below(catalog, 0.0) == 1
        assert sw.count_bands_below(catalog, -5.0) == 0
        assert sw.count_bands_below(catalog, 2.5) == 2

    def test_energy_in_band_rejected(self):
        catalog = sw.gap_catalog(sw.band_structure(sw.ssh_kernel(1.5, 0.5), 1024))
        with pytest.raises(sw.EInBand):
            sw.count_bands_below(catalog, 1.5)
        with pytest.raises(sw.EInBand):
            sw.count_bands_below(catalog, 0.95, margin=0.1)


class TestSupercell:
    def test_single_cell_is_identity_transform(self):
        jac = sw.ssh_kernel(1.5, 0.5)
        kernel = jac.as_kernel()
        folded = sw.supercell_jacobi(kernel, 1)
        assert np.allclose(folded.diag, kernel.block(0))
        assert np.allclose(folded.offdiag, kernel.block(-1))

    def test_scalar_ssh_chain_folds_to_standard_blocks(self):
        j1, j2 = 1.5, 0.5
        folded = sw.fold_kperiodic([j1, j2], [0.0, 0.0])
        ref = sw.ssh_kernel(j1, j2)
        assert np.allclose(folded.diag, ref.diag)
        assert np.allclose(folded.offdiag, ref.offdiag)

    def test_range_exceeded(self):
        rng = np.random.default_rng(23)
        with pytest.raises(sw.RangeExceeded):
            sw.supercell_jacobi(random_kernel(rng, 2, 3), 2)

    @pytest.mark.parametrize("cell", [3, 4])
    def test_folding_equivalence_random_kernel(self, cell):
        # brute-force oracle: union of the folded original fibers
        rng = np.random.default_rng(29 + cell)
        kernel = random_kernel(rng, 2, 3)
        folded = sw.supercell_jacobi(kernel, cell)
        for k in rng.uniform(-np.pi, np.pi, size=25):
            super_vals = np.sort(np.linalg.eigvalsh(sw.bloch_fiber(folded, k)))
            union = np.sort(np.concatenate([
                np.linalg.eigvalsh(sw.bloch_fiber(kernel, km))
                for km in sw.folded_momenta(k, cell)
            ]))
            assert np.max(np.abs(super_vals - union)) < 1e-9


class TestTruncate:
    def test_noop_when_range_covered(self):
        rng = np.random.default_rng(31)
        kernel = random_kernel(rng, 2, 2)
        out, discarded = sw.truncate_kernel(kernel, 5)
        assert discarded == 0.0
        assert out.support == kernel.support

    def test_ssh_cutoff_zero_keeps_onsite(self):
        out, _ = sw.truncate_kernel(sw.ssh_kernel(1.5, 0.5), 0)
        assert out.support == (0,)

    def test_discarded_mass_oracle(self):
        rng = np.random.default_rng(37)
        kernel = random_kernel(rng, 2, 3)
        _, discarded = sw.truncate_kernel(kernel, 1)
        oracle = sum(
            np.linalg.norm(kernel.block(n), ord=2) for n in (-3, -2, 2, 3)
        )
        assert abs(discarded - oracle) < 1e-12
