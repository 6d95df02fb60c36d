"""Finite truncations of the edge operator H + W(t), eigensolves and sweeps.

The edge operator is restricted to the box of sites [-L, L].  The wall's
transition region sits at the box center, so the left artificial boundary is
buried in the forbidden region and the right one deep in the bulk.  Spurious
modes living at the box boundaries are filtered by the interior-mass
criterion: a normalized eigenvector is an edge mode when at least 3/4 of its
mass lies in the window [-L/2, L/2].
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import (
    ConvolutionKernel,
    GapCatalog,
    SoftwallError,
    band_structure,
    gap_catalog,
)
from .walls import SoftWallProfile, eval_wall


def hermitian_eigh(mat: np.ndarray, vectors: bool = True):
    """Dense Hermitian eigensolve, dropping to the real path when possible."""
    work = mat.real if np.max(np.abs(mat.imag)) == 0.0 else mat
    if vectors:
        return scipy.linalg.eigh(work, driver="evr")
    return scipy.linalg.eigh(work, eigvals_only=True, driver="evd")

EDGE_MASS_THRESHOLD = 0.75
BORDERLINE_MASS = 0.60


class BoxTooSmall(SoftwallError):
    """The box half-width does not exceed the hopping range by 2."""


@dataclass(frozen=True)
class EdgeTruncation:
    """H restricted to sites [-L, L] plus the shifted wall on the diagonal."""

    kernel: ConvolutionKernel
    wall: SoftWallProfile
    t: float
    half_width: int
    matrix: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)


@dataclass(frozen=True)
class EdgeMode:
    eigenvalue: float
    vector: np.ndarray
    interior_mass: float
    is_edge: bool

    @property
    def is_borderline(self) -> bool:
        """Interior mass in the ambiguous window: slow walls may spill tails."""
        return BORDERLINE_MASS <= self.interior_mass < EDGE_MASS_THRESHOLD


def assemble_edge(model, wall: SoftWallProfile, t: float, half_width: int) -> EdgeTruncation:
    """Assemble the Hermitian matrix of the truncated edge operator.

    Block (n, m) is h(n - m) plus, on the diagonal, w(n - t) for sites
    n, m in [-L, L].
    """
    kernel = model.as_kernel()
    if half_width < kernel.hop_range + 2:
        raise BoxTooSmall(
            f"half_width {half_width} < hopping range {kernel.hop_range} + 2"
        )
    if wall.block_dim != kernel.block_dim:
        raise ValueError("wall and model block dimensions differ")
    n = kernel.block_dim
    cells = 2 * half_width + 1
    mat = np.zeros((cells * n, cells * n), dtype=complex)
    for d, block in kernel.blocks.items():
        for i in range(cells):
            j = i - d
            if 0 <= j < cells:
                mat[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
    for i in range(cells):
        site = i - half_width
        mat[i * n:(i + 1) * n, i * n:(i + 1) * n] += eval_wall(wall, site - t)
    dev = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
    if dev >= 1e-12:
        raise ValueError(f"assembled truncation not Hermitian, deviation {dev:.3e}")
    return EdgeTruncation(kernel, wall, float(t), half_width, mat)


def interior_masses(vectors: np.ndarray, half_width: int, block_dim: int,
                    interior: tuple[float, float] | None = None) -> np.ndarray:
    """Mass of each (column) eigenvector inside the interior cell window."""
    if interior is None:
        interior = (-half_width / 2.0, half_width / 2.0)
    sites = np.arange(-half_width, half_width + 1)
    site_mask = (sites >= interior[0]) & (sites <= interior[1])
    orbital_mask = np.repeat(site_mask, block_dim)
    weights = np.abs(vectors) ** 2
    return weights[orbital_mask, :].sum(axis=0) / weights.sum(axis=0)


def eigensolve_classify(trunc: EdgeTruncation, threshold: float = EDGE_MASS_THRESHOLD,
                        interior: tuple[float, float] | None = None) -> list[EdgeMode]:
    """Full eigendecomposition with per-vector interior-mass classification."""
    vals, vecs = hermitian_eigh(trunc.matrix)
    masses = interior_masses(vecs, trunc.half_width, trunc.kernel.block_dim, interior)
    return [
        EdgeMode(float(vals[j]), vecs[:, j], float(masses[j]), bool(masses[j] >= threshold))
        for j in range(len(vals))
    ]


@dataclass
class EdgeSweep:
    """Eigenvalues and edge flags of the truncation over a t grid.

    eigenvalues[s, j] is the j-th ascending eigenvalue at t_grid[s]; the
    companion arrays hold the interior masses and edge flags.  Eigenvectors
    are not retained.
    """

    t_grid: np.ndarray
    eigenvalues: np.ndarray
    interior_mass: np.ndarray
    is_edge: np.ndarray
    half_width: int
    block_dim: int
    catalog: GapCatalog | None = None
    metadata: dict = field(default_factory=dict)

    def edge_eigenvalues_in(self, lo: float, hi: float, row: int) -> np.ndarray:
        vals = self.eigenvalues[row]
        mask = (vals > lo) & (vals < hi) & self.is_edge[row]
        return vals[mask]

    def write_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("t,index,eigenvalue,interior_mass,is_edge\n")
            for s, t in enumerate(self.t_grid):
                for j in range(self.eigenvalues.shape[1]):
                    fh.write(
                        f"{t:.17g},{j},{self.eigenvalues[s, j]:.17g},"
                        f"{self.interior_mass[s, j]:.17g},"
                        f"{int(self.is_edge[s, j])}\n"
                    )


def edge_sweep_t(model, wall: SoftWallProfile, half_width: int, t_grid,
                 threshold: float = EDGE_MASS_THRESHOLD,
                 interior: tuple[float, float] | None = None,
                 k_count: int = 1024, threads: int = 1) -> EdgeSweep:
    """One eigensolve_classify per grid point; rows gathered in grid order."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending")
    kernel = model.as_kernel()
    catalog = gap_catalog(band_structure(kernel, k_count))
    dim = (2 * half_width + 1) * kernel.block_dim
    eigenvalues = np.zeros((len(t_grid), dim))
    masses = np.zeros((len(t_grid), dim))
    flags = np.zeros((len(t_grid), dim), dtype=bool)

    def solve(t: float):
        trunc = assemble_edge(kernel, wall, t, half_width)
        vals, vecs = hermitian_eigh(trunc.matrix)
        mass = interior_masses(vecs, half_width, kernel.block_dim, interior)
        return vals, mass

    if threads > 1 and len(t_grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, t_grid))
    else:
        results = [solve(t) for t in t_grid]
    for s, (vals, mass) in enumerate(results):
        eigenvalues[s] = vals
        masses[s] = mass
        flags[s] = mass >= threshold
    return EdgeSweep(
        t_grid, eigenvalues, masses, flags, half_width, kernel.block_dim, catalog
    )


def eigenvalue_table(model, wall: SoftWallProfile, half_width: int, t_grid,
                     threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the truncation over a t grid, no vectors retained."""
    t_grid = np.asarray(t_grid, dtype=float)
    kernel = model.as_kernel()

    def solve(t: float) -> np.ndarray:
        return hermitian_eigh(assemble_edge(kernel, wall, t, half_width).matrix,
                              vectors=False)

    if threads > 1 and len(t_grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(solve, t_grid))
    else:
        rows = [solve(t) for t in t_grid]
    return t_grid, np.array(rows)
