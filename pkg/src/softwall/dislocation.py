"""Dislocated Jacobi models: finite rings, cut stencils, and counting checks.

The dislocated family interpolates linearly between the plain periodic chain
(t = 0) and the same chain with one site decoupled at level Sigma (t = 1).
On a ring of ell cells the endpoint spectra are exactly computable: ell,
respectively ell - 1, copies of each Bloch band plus the Sigma eigenvalue,
so the eigenvalue counts below a gap energy drop from ell*N(E) to
(ell-1)*N(E) and the implied flow is -N(E).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    PeriodicJacobi,
    SoftwallError,
    band_structure,
    count_bands_below,
    gap_catalog,
)
from .walls import SoftWallProfile, eval_wall


class TooFewCells(SoftwallError):
    """Dislocated rings need at least 5 cells to separate the defect."""


def ring_sites(cells: int) -> list[int]:
    """The centered labeling of the ell-cell torus: {0}, {0,1}, {-1,0,1}, ..."""
    return list(range(-((cells - 1) // 2), cells // 2 + 1))


def _ring_matrix(jacobi: PeriodicJacobi, cells: int) -> np.ndarray:
    n = jacobi.block_dim
    a, b = jacobi.offdiag, jacobi.diag
    mat = np.zeros((cells * n, cells * n), dtype=complex)
    for p in range(cells):
        q = (p + 1) % cells
        mat[p * n:(p + 1) * n, p * n:(p + 1) * n] = b
        mat[p * n:(p + 1) * n, q * n:(q + 1) * n] = a
        mat[q * n:(q + 1) * n, p * n:(p + 1) * n] = a.conj().T
    return mat


@dataclass(frozen=True)
class DislocatedRing:
    """The interpolated dislocated Hamiltonian on the ell-cell torus."""

    jacobi: PeriodicJacobi
    sigma: float
    t: float
    cells: int
    matrix: np.ndarray

    @property
    def sites(self) -> list[int]:
        return ring_sites(self.cells)


def assemble_ring(jacobi: PeriodicJacobi, sigma: float, t: float,
                  cells: int) -> DislocatedRing:
    """Build the ring matrix, linear in t between its two endpoint layouts.

    At t = 0 this is the block-circulant periodic ring; at t = 1 the site-0
    block decouples to sigma times the identity and the sites next to it are
    bridged directly, leaving a periodic ring of ell - 1 cells.
    """
    if cells < 5:
        raise TooFewCells(f"need at least 5 cells, got {cells}")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    n = jacobi.block_dim
    a = jacobi.offdiag
    m0 = _ring_matrix(jacobi, cells)
    zero = (cells - 1) // 2  # position of site 0 in the centered labeling
    before, after = zero - 1, zero + 1
    m1 = m0.copy()
    m1[zero * n:(zero + 1) * n, :] = 0.0
    m1[:, zero * n:(zero + 1) * n] = 0.0
    m1[zero * n:(zero + 1) * n, zero * n:(zero + 1) * n] = sigma * np.eye(n)
    m1[before * n:(before + 1) * n, after * n:(after + 1) * n] = a
    m1[after * n:(after + 1) * n, before * n:(before + 1) * n] = a.conj().T
    return DislocatedRing(jacobi, float(sigma), float(t), cells,
                          (1.0 - t) * m0 + t * m1)


def open_dislocated_matrix(jacobi: PeriodicJacobi, sigma: float, t: float,
                           half_width: int) -> np.ndarray:
    """The dislocated operator truncated to the open chain [-B, B]."""
    n = jacobi.block_dim
    a = jacobi.offdiag
    cells = 2 * half_width + 1
    m0 = _ring_matrix(jacobi, cells)
    # strip the ring's wrap-around bond to get the open chain
    m0[:n, (cells - 1) * n:] = 0.0
    m0[(cells - 1) * n:, :n] = 0.0
    zero = half_width
    before, after = zero - 1, zero + 1
    m1 = m0.copy()
    m1[zero * n:(zero + 1) * n, :] = 0.0
    m1[:, zero * n:(zero + 1) * n] = 0.0
    m1[zero * n:(zero + 1) * n, zero * n:(zero + 1) * n] = sigma * np.eye(n)
    m1[before * n:(before + 1) * n, after * n:(after + 1) * n] = a
    m1[after * n:(after + 1) * n, before * n:(before + 1) * n] = a.conj().T
    return (1.0 - t) * m0 + t * m1


def ring_flow_check(jacobi: PeriodicJacobi, sigma: float, energy: float,
                    cells: int, k_count: int = 1024, margin: float = 0.0) -> dict:
    """Endpoint eigenvalue counts below E versus ell*N(E) and (ell-1)*N(E)."""
    if sigma <= energy:
        raise ValueError("sigma must exceed the probe energy")
    catalog = gap_catalog(band_structure(jacobi.as_kernel(), k_count))
    n_below = count_bands_below(catalog, energy, margin)
    count0 = int(np.count_nonzero(
        np.linalg.eigvalsh(assemble_ring(jacobi, sigma, 0.0, cells).matrix) < energy
    ))
    count1 = int(np.count_nonzero(
        np.linalg.eigvalsh(assemble_ring(jacobi, sigma, 1.0, cells).matrix) < energy
    ))
    ok = count0 == cells * n_below and count1 == (cells - 1) * n_below
    return {
        "ell": cells,
        "E": energy,
        "sigma": sigma,
        "N_of_E": n_below,
        "count_t0": count0,
        "count_t1": count1,
        "expected": [cells * n_below, (cells - 1) * n_below],
        "implied_flow": count1 - count0,
        "pass": bool(ok),
    }


@dataclass(frozen=True)
class CutStencil:
    """The bond-erasing perturbation K(t) on the four sites around the cut.

    Nonzero blocks: (1-t)*a on the (-2, -1) bond, a on the (-1, 0) bond and
    t*a on the (0, 1) bond, plus adjoints.  Subtracting the embedded stencil
    from the dislocation-free edge operator decouples the chain across the
    negative/nonnegative split at t in {0, 1}.
    """

    sites: tuple[int, int, int, int]
    matrix: np.ndarray
    t: float

    def embed(self, half_width: int, block_dim: int) -> np.ndarray:
        cells = 2 * half_width + 1
        out = np.zeros((cells * block_dim, cells * block_dim), dtype=complex)
        for i, si in enumerate(self.sites):
            for j, sj in enumerate(self.sites):
                pi, pj = si + half_width, sj + half_width
                out[pi * block_dim:(pi + 1) * block_dim,
                    pj * block_dim:(pj + 1) * block_dim] = \
                    self.matrix[i * block_dim:(i + 1) * block_dim,
                                j * block_dim:(j + 1) * block_dim]
        return out


def cut_operator(jacobi: PeriodicJacobi, t: float) -> CutStencil:
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    n = jacobi.block_dim
    a = jacobi.offdiag
    mat = np.zeros((4 * n, 4 * n), dtype=complex)
    bonds = {(0, 1): (1.0 - t) * a, (1, 2): a, (2, 3): t * a}
    for (i, j), block in bonds.items():
        mat[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
        mat[j * n:(j + 1) * n, i * n:(i + 1) * n] = block.conj().T
    return CutStencil((-2, -1, 0, 1), mat, float(t))


def left_block_matrix(jacobi: PeriodicJacobi, wall: SoftWallProfile, t: float,
                      half_width: int) -> np.ndarray:
    """The cut operator's left block: sites [-L, -1] with the (-2,-1) bond scaled by t."""
    n = jacobi.block_dim
    a, b = jacobi.offdiag, jacobi.diag
    cells = half_width  # sites -L .. -1
    mat = np.zeros((cells * n, cells * n), dtype=complex)
    for p in range(cells):
        site = p - half_width
        mat[p * n:(p + 1) * n, p * n:(p + 1) * n] = b + eval_wall(wall, site - t)
        if p + 1 < cells:
            hop = a if p + 1 < cells - 1 else t * a
            mat[p * n:(p + 1) * n, (p + 1) * n:(p + 2) * n] = hop
            mat[(p + 1) * n:(p + 2) * n, p * n:(p + 1) * n] = hop.conj().T
    return mat


def left_block_gap_check(jacobi: PeriodicJacobi, steep: SoftWallProfile,
                         energy: float, t_grid, half_width: int,
                         tol: float = 1e-6) -> dict:
    """Min eigenvalue of the left block must stay above E + 1 for all t."""
    minima = [
        float(np.linalg.eigvalsh(left_block_matrix(jacobi, steep, t, half_width))[0])
        for t in np.asarray(t_grid, dtype=float)
    ]
    overall = min(minima)
    return {
        "E": energy,
        "threshold": energy + 1.0 - tol,
        "min_eigenvalue": overall,
        "pass": bool(overall >= energy + 1.0 - tol),
        "per_t": minima,
    }


def projector_rank_convergence(jacobi: PeriodicJacobi, sigma: float,
                               window: tuple[float, float], t: float,
                               ell_list, box_half_width: int | None = None) -> dict:
    """Eigenvalue counts in a gap window for rings of growing size.

    The reference is the dislocated operator on an open chain with box
    half-width 4 * max(ell); the table records the ring counts and the
    smallest ring size from which they stabilize at the reference value.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must be an open interval (lo, hi)")
    ell_list = sorted(int(e) for e in ell_list)
    if box_half_width is None:
        box_half_width = 4 * max(ell_list)
    energy = 0.5 * (lo + hi)
    rows = []
    for cells in ell_list:
        vals = np.linalg.eigvalsh(assemble_ring(jacobi, sigma, t, cells).matrix)
        rows.append({
            "ell": cells,
            "t": t,
            "count_below_E": int(np.count_nonzero(vals < energy)),
            "count_in_window": int(np.count_nonzero((vals > lo) & (vals < hi))),
        })
    ref_vals = np.linalg.eigvalsh(
        open_dislocated_matrix(jacobi, sigma, t, box_half_width)
    )
    reference = {
        "box_half_width": box_half_width,
        "t": t,
        "count_below_E": int(np.count_nonzero(ref_vals < energy)),
        "count_in_window": int(np.count_nonzero((ref_vals > lo) & (ref_vals < hi))),
    }
    stabilized_from = None
    target = reference["count_in_window"]
    for row in reversed(rows):
        if row["count_in_window"] == target:
            stabilized_from = row["ell"]
        else:
            break
    return {"rows": rows, "reference": reference, "stabilized_from": stabilized_from}
