"""1D periodic tight-binding operators: kernels, Bloch fibers, bands, supercells.

A periodic chain Hamiltonian acting on square-summable C^N-valued sequences
is a discrete convolution ``(H psi)_n = sum_m h(m) psi_{n-m}`` with matrix
hoppings ``h(m)``.  Hermiticity requires ``h(-m) = h(m)^dagger``.  Everything
here is finite-range; longer-range data enters through ``truncate_kernel``
which reports the discarded tail mass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

HERMITICITY_TOL = 1e-12


class SoftwallError(Exception):
    """Base class for all errors raised by this package."""


class EInBand(SoftwallError):
    """The probe energy intersects a Bloch band hull (within the margin)."""


class RangeExceeded(SoftwallError):
    """A kernel has support outside the requested supercell range."""


def _as_block(mat, n: int) -> np.ndarray:
    block = np.asarray(mat, dtype=complex)
    if block.shape != (n, n):
        raise ValueError(f"block must be {n}x{n}, got {block.shape}")
    block = block.copy()
    block.setflags(write=False)
    return block


def _opnorm(mat: np.ndarray) -> float:
    """Spectral (operator) norm."""
    return float(np.linalg.norm(mat, ord=2)) if mat.size else 0.0


@dataclass(frozen=True)
class ConvolutionKernel:
    """Finite-support hopping map n -> h(n) for a 1-periodic chain.

    Attributes
    ----------
    block_dim : int
        Number of orbitals per unit cell (blocks are block_dim x block_dim).
    blocks : dict[int, np.ndarray]
        Nonzero hoppings; symmetry h(-n) = h(n)^dagger is enforced on
        construction to 1e-12.
    """

    block_dim: int
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.block_dim < 1:
            raise ValueError("block_dim must be a positive integer")
        frozen = {}
        for n, mat in self.blocks.items():
            frozen[int(n)] = _as_block(mat, self.block_dim)
        for n, block in frozen.items():
            partner = frozen.get(-n)
            if partner is None:
                raise ValueError(f"missing block at -{n} required by symmetry")
            dev = np.max(np.abs(partner - block.conj().T)) if block.size else 0.0
            if dev >= HERMITICITY_TOL:
                raise ValueError(
                    f"kernel symmetry violated at n={n}: h(-n) vs h(n)^† deviates by {dev:.3e}"
                )
        object.__setattr__(self, "blocks", frozen)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.blocks))

    @property
    def hop_range(self) -> int:
        """Largest |n| carrying a stored block (0 for the empty kernel)."""
        return max((abs(n) for n in self.blocks), default=0)

    def block(self, n: int) -> np.ndarray:
        """h(n), a zero matrix outside the stored support."""
        got = self.blocks.get(int(n))
        if got is None:
            return np.zeros((self.block_dim, self.block_dim), dtype=complex)
        return got

    def l1_norm(self) -> float:
        """sum_n ||h(n)||_op, the convolution (Young) bound."""
        return sum(_opnorm(b) for b in self.blocks.values())

    def fiber_lipschitz(self) -> float:
        """sum_n |n| ||h(n)||_op, a Lipschitz bound for k -> eigenvalues."""
        return sum(abs(n) * _opnorm(b) for n, b in self.blocks.items())

    def as_kernel(self) -> "ConvolutionKernel":
        return self


@dataclass(frozen=True)
class PeriodicJacobi:
    """1-periodic block-tridiagonal operator with diagonal b and hopping a.

    Acts as ``(H psi)_n = a^dagger psi_{n-1} + b psi_n + a psi_{n+1}``;
    equivalently a ConvolutionKernel with h(-1) = a, h(0) = b, h(1) = a^dagger.
    """

    block_dim: int
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        b = _as_block(self.diag, self.block_dim)
        a = _as_block(self.offdiag, self.block_dim)
        dev = np.max(np.abs(b - b.conj().T)) if b.size else 0.0
        if dev >= HERMITICITY_TOL:
            raise ValueError(f"diagonal block must be Hermitian, deviation {dev:.3e}")
        object.__setattr__(self, "diag", b)
        object.__setattr__(self, "offdiag", a)

    @property
    def coupling_norm(self) -> float:
        """C_{a,b} = max(||a||_op, ||b||_op)."""
        return max(_opnorm(self.offdiag), _opnorm(self.diag))

    def as_kernel(self) -> ConvolutionKernel:
        return ConvolutionKernel(
            self.block_dim,
            {-1: self.offdiag, 0: self.diag, 1: self.offdiag.conj().T},
        )


def ssh_kernel(j1: complex = 1.5, j2: complex = 0.5) -> PeriodicJacobi:
    """SSH chain folded to a 1-periodic Jacobi operator with 2x2 blocks.

    The intracell hopping j1 sits in the diagonal block, the intercell
    hopping j2 in the off-diagonal block.  Bulk spectrum is
    [-W, -delta] U [delta, W] with W = |j1|+|j2|, delta = ||j1|-|j2||.
    """
    b = np.array([[0.0, j1], [np.conj(j1), 0.0]], dtype=complex)
    a = np.array([[0.0, 0.0], [j2, 0.0]], dtype=complex)
    return PeriodicJacobi(2, b, a)


def fold_kperiodic(hoppings: Sequence, onsites: Sequence) -> PeriodicJacobi:
    """Fold a K-periodic (block) Jacobi chain into a 1-periodic one.

    ``hoppings[i]`` couples site i to site i+1 (index mod K); ``onsites[i]``
    is the diagonal at site i.  Scalars are promoted to 1x1 blocks.  For the
    scalar SSH chain (J1, J2) this reproduces the standard 2x2 blocks.
    """
    if len(hoppings) != len(onsites) or not hoppings:
        raise ValueError("need equal, nonzero numbers of hoppings and onsites")
    period = len(hoppings)
    hops = [np.atleast_2d(np.asarray(h, dtype=complex)) for h in hoppings]
    ons = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in onsites]
    n = hops[0].shape[0]
    big = period * n
    btil = np.zeros((big, big), dtype=complex)
    atil = np.zeros((big, big), dtype=complex)
    for i in range(period):
        btil[i * n:(i + 1) * n, i * n:(i + 1) * n] = ons[i]
        if i + 1 < period:
            btil[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = hops[i]
            btil[(i + 1) * n:(i + 2) * n, i * n:(i + 1) * n] = hops[i].conj().T
    atil[(period - 1) * n:, :n] = hops[period - 1]
    return PeriodicJacobi(big, btil, atil)


def bloch_fiber(kernel, k: float) -> np.ndarray:
    """Bloch fiber H_k = sum_n h(n) exp(-i k n); Hermitian for real k."""
    kernel = kernel.as_kernel()
    out = np.zeros((kernel.block_dim, kernel.block_dim), dtype=complex)
    for n, block in kernel.blocks.items():
        out += block * np.exp(-1j * k * n)
    return out


@dataclass(frozen=True)
class BandStructure:
    """Eigenvalues of the Bloch fibers on a uniform momentum grid.

    k_grid holds ascending samples of (-pi, pi]; curves[i, j] is the j-th
    (ascending) eigenvalue at k_grid[i].  grid_lipschitz is the
    sum_n |n| ||h(n)|| bound used to estimate hull errors.
    """

    k_grid: np.ndarray
    curves: np.ndarray
    grid_lipschitz: float

    def __post_init__(self):
        kg = np.asarray(self.k_grid, dtype=float)
        cv = np.asarray(self.curves, dtype=float)
        kg.setflags(write=False)
        cv.setflags(write=False)
        object.__setattr__(self, "k_grid", kg)
        object.__setattr__(self, "curves", cv)

    @property
    def n_bands(self) -> int:
        return self.curves.shape[1]

    @property
    def grid_error(self) -> float:
        """Estimated hull error: Lipschitz constant times half the k step."""
        if len(self.k_grid) < 2:
            return np.inf
        dk = 2.0 * np.pi / len(self.k_grid)
        return self.grid_lipschitz * dk / 2.0

    def band_hulls(self) -> list[tuple[float, float]]:
        return [
            (float(self.curves[:, j].min()), float(self.curves[:, j].max()))
            for j in range(self.n_bands)
        ]


def band_structure(kernel, k_count: int = 1024) -> BandStructure:
    """Eigen-decompose the Bloch fibers on k_count uniform samples of (-pi, pi]."""
    if k_count < 2:
        raise ValueError("k_count must be at least 2")
    kernel = kernel.as_kernel()
    ks = -np.pi + 2.0 * np.pi * (np.arange(k_count) + 1) / k_count
    fibers = np.zeros((k_count, kernel.block_dim, kernel.block_dim), dtype=complex)
    for n, block in kernel.blocks.items():
        fibers += np.exp(-1j * ks * n)[:, None, None] * block[None, :, :]
    curves = np.linalg.eigvalsh(fibers)
    return BandStructure(ks, curves, kernel.fiber_lipschitz())


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    bands_below: int

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class GapCatalog:
    """Band hulls and the open gaps between consecutive hulls.

    A gap is declared only when the spacing between consecutive hulls
    exceeds 10x the estimated grid error; grids cannot certify closure.
    """

    bands: tuple[tuple[float, float], ...]
    gaps: tuple[Gap, ...]
    grid_error: float

    def gap_containing(self, energy: float) -> Gap | None:
        for gap in self.gaps:
            if gap.lo < energy < gap.hi:
                return gap
        return None


def gap_catalog(bands: BandStructure) -> GapCatalog:
    hulls = bands.band_hulls()
    err = bands.grid_error
    gaps = []
    for j in range(len(hulls) - 1):
        spacing = hulls[j + 1][0] - hulls[j][1]
        if spacing > 10.0 * err:
            gaps.append(Gap(hulls[j][1], hulls[j + 1][0], j + 1))
    return GapCatalog(tuple(hulls), tuple(gaps), err)


def count_bands_below(catalog: GapCatalog | BandStructure, energy: float,
                      margin: float = 0.0) -> int:
    """Number of Bloch bands entirely below the energy.

    Raises EInBand when the energy is within ``margin`` of any band hull;
    the spectral flow at such an energy is undefined.
    """
    if isinstance(catalog, BandStructure):
        catalog = gap_catalog(catalog)
    for lo, hi in catalog.bands:
        if lo - margin <= energy <= hi + margin:
            raise EInBand(
                f"E={energy} intersects the band hull [{lo}, {hi}] within margin {margin}"
            )
    return sum(1 for _, hi in catalog.bands if hi < energy)


def supercell_jacobi(kernel, cell: int) -> PeriodicJacobi:
    """Fold a finite-range kernel into a Jacobi operator with (cell*N) blocks.

    Requires support inside [-cell, cell].  The diagonal block is the
    block-Toeplitz matrix of h(0), ..., h(+-(cell-1)); the hopping block is
    the lower-triangular block-Toeplitz matrix of h(-cell), ..., h(-1).
    """
    kernel = kernel.as_kernel()
    if cell < 1:
        raise ValueError("cell must be a positive integer")
    if kernel.hop_range > cell:
        raise RangeExceeded(
            f"kernel range {kernel.hop_range} exceeds supercell size {cell}"
        )
    n = kernel.block_dim
    big = cell * n
    btil = np.zeros((big, big), dtype=complex)
    atil = np.zeros((big, big), dtype=complex)
    for i in range(cell):
        for j in range(cell):
            btil[i * n:(i + 1) * n, j * n:(j + 1) * n] = kernel.block(i - j)
            atil[i * n:(i + 1) * n, j * n:(j + 1) * n] = kernel.block(i - j - cell)
    return PeriodicJacobi(big, btil, atil)


def folded_momenta(k: float, cell: int) -> np.ndarray:
    """The ``cell`` original momenta folding onto supercell momentum k."""
    return np.array([(k + 2.0 * np.pi * j) / cell for j in range(cell)])


def truncate_kernel(kernel, cutoff: int) -> tuple[ConvolutionKernel, float]:
    """Zero all blocks outside [-cutoff, cutoff].

    Returns the truncated kernel together with the discarded l1 mass
    sum_{|n|>cutoff} ||h(n)||_op.
    """
    kernel = kernel.as_kernel()
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    kept = {n: b for n, b in kernel.blocks.items() if abs(n) <= cutoff}
    discarded = sum(
        _opnorm(b) for n, b in kernel.blocks.items() if abs(n) > cutoff
    )
    return ConvolutionKernel(kernel.block_dim, kept), float(discarded)


def load_kernel(source) -> ConvolutionKernel:
    """Read a model description ({"N": ..., "blocks": [{"n", "re", "im"}]})."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    n = int(data["N"])
    blocks = {}
    for item in data["blocks"]:
        re = np.asarray(item["re"], dtype=float)
        im = np.asarray(item.get("im", np.zeros_like(re)), dtype=float)
        blocks[int(item["n"])] = re + 1j * im
    return ConvolutionKernel(n, blocks)


def save_kernel(kernel, path) -> None:
    kernel = kernel.as_kernel()
    payload = {
        "N": kernel.block_dim,
        "blocks": [
            {
                "n": n,
                "re": np.real(kernel.block(n)).tolist(),
                "im": np.imag(kernel.block(n)).tolist(),
            }
            for n in kernel.support
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
