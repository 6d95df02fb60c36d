"""2D Bravais-lattice tight-binding models and their reduction to 1D chains.

A wall held constant along a lattice direction leaves the 2D model periodic
in that direction; a partial Fourier transform then produces a family of 1D
chains indexed by the conserved momentum, to which the whole 1D machinery
applies.  Commensurate wall directions n*a1 + m*a2 (coprime n, m) are
handled by a supercell with |n*m| times more atoms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .core import ConvolutionKernel, SoftwallError, band_structure, bloch_fiber
from .walls import SoftWallProfile, eval_wall


class NotCoprime(SoftwallError):
    """Cut indices must be coprime."""


class ZeroIndex(SoftwallError):
    """Cut indices must both be nonzero."""


@dataclass(frozen=True)
class BravaisLattice2D:
    """Lattice vectors a1, a2 with atom positions inside the unit cell."""

    a1: np.ndarray
    a2: np.ndarray
    atoms: tuple

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float).reshape(2)
        a2 = np.asarray(self.a2, dtype=float).reshape(2)
        det = a1[0] * a2[1] - a1[1] * a2[0]
        if abs(det) <= 1e-12:
            raise ValueError("lattice vectors must be linearly independent")
        atoms = tuple(np.asarray(x, dtype=float).reshape(2) for x in self.atoms)
        for arr in (a1, a2, *atoms):
            arr.setflags(write=False)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def cell_area(self) -> float:
        return abs(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0])

    @property
    def b1(self) -> np.ndarray:
        """First reciprocal vector: <b_i, a_j> = 2 pi delta_ij."""
        return self._reciprocal()[0]

    @property
    def b2(self) -> np.ndarray:
        return self._reciprocal()[1]

    def _reciprocal(self) -> tuple[np.ndarray, np.ndarray]:
        cols = np.column_stack([self.a1, self.a2])
        recs = 2.0 * np.pi * np.linalg.inv(cols).T
        return recs[:, 0].copy(), recs[:, 1].copy()

    def site(self, p: int, q: int) -> np.ndarray:
        return p * self.a1 + q * self.a2


@dataclass(frozen=True)
class TightBinding2D:
    """Hopping map R -> M x M matrix on a Bravais lattice.

    Blocks are keyed by integer lattice coordinates (p, q) meaning
    R = p*a1 + q*a2; the symmetry h(-R) = h(R)^dagger is enforced.
    """

    lattice: BravaisLattice2D
    blocks: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        m = self.lattice.n_atoms
        frozen = {}
        for key, mat in self.blocks.items():
            p, q = int(key[0]), int(key[1])
            block = np.asarray(mat, dtype=complex)
            if block.shape != (m, m):
                raise ValueError(f"block at {key} must be {m}x{m}")
            block = block.copy()
            block.setflags(write=False)
            frozen[(p, q)] = block
        for (p, q), block in frozen.items():
            partner = frozen.get((-p, -q))
            if partner is None or np.max(np.abs(partner - block.conj().T)) >= 1e-12:
                raise ValueError(f"symmetry h(-R) = h(R)^† violated at R={(p, q)}")
        object.__setattr__(self, "blocks", frozen)

    @property
    def n_orbitals(self) -> int:
        return self.lattice.n_atoms


def bloch2d(tb: TightBinding2D, k) -> np.ndarray:
    """Fiber sum_R h(R) exp(-i R.k); periodic under the reciprocal lattice."""
    k = np.asarray(k, dtype=float).reshape(2)
    out = np.zeros((tb.n_orbitals, tb.n_orbitals), dtype=complex)
    for (p, q), block in tb.blocks.items():
        out += block * np.exp(-1j * float(np.dot(tb.lattice.site(p, q), k)))
    return out


def k2_vector(lattice: BravaisLattice2D, k2: float) -> np.ndarray:
    """The conserved momentum as a vector: scalar coordinate along b2."""
    b2 = lattice.b2
    return k2 * b2 / np.linalg.norm(b2)


def reduce_to_1d(tb: TightBinding2D, k2: float) -> ConvolutionKernel:
    """Partial Fourier transform along a2: a 1D kernel over the a1 chain.

    k2 is the scalar momentum coordinate along b2 (periodic modulo |b2|).
    The fiber of the result at momentum k1 has the same spectrum as the 2D
    fiber on the line k1*b1 + k2.
    """
    phase_unit = 2.0 * np.pi * k2 / np.linalg.norm(tb.lattice.b2)
    m = tb.n_orbitals
    blocks: dict[int, np.ndarray] = {}
    for (p, q), block in tb.blocks.items():
        add = block * np.exp(-1j * q * phase_unit)
        if p in blocks:
            blocks[p] = blocks[p] + add
        else:
            blocks[p] = add.astype(complex)
    blocks = {p: b for p, b in blocks.items() if np.max(np.abs(b)) > 0.0}
    # re-symmetrize floating dust so the kernel validator accepts the result
    for p in list(blocks):
        if -p in blocks:
            sym = 0.5 * (blocks[p] + blocks[-p].conj().T)
            blocks[p], blocks[-p] = sym, sym.conj().T
    return ConvolutionKernel(m, blocks)


@dataclass(frozen=True)
class CommensurateCut:
    """Supercell data for a wall parallel to n*a1 + m*a2 (coprime n, m).

    The enlarged cell holds |n*m| copies of the original one; orbitals are
    ordered sublattice-first (all supercell sites of atom 1, then atom 2,
    ...), which keeps bipartite models block-off-diagonal.
    """

    n: int
    m: int
    base: TightBinding2D
    supercell: TightBinding2D
    site_points: tuple[tuple[int, int], ...]

    @property
    def copies(self) -> int:
        return abs(self.n * self.m)

    def reciprocal_representatives(self) -> list[np.ndarray]:
        """|n*m| coset representatives of the supercell reciprocal lattice."""
        b1t = self.supercell.lattice.b1
        b2t = self.supercell.lattice.b2
        return [
            alpha * b1t + beta * b2t
            for alpha in range(abs(self.n))
            for beta in range(abs(self.m))
        ]


def _supercell_sites(n: int, m: int) -> list[tuple[int, int]]:
    """Integer lattice points inside the supercell parallelogram."""
    cols = np.array([[n, n], [0, m]], dtype=float)
    inv = np.linalg.inv(cols)
    ps = [0, n, n, 2 * n]
    qs = [0, 0, m, m]
    points = []
    for p in range(min(ps) - 1, max(ps) + 2):
        for q in range(min(qs) - 1, max(qs) + 2):
            alpha, beta = inv @ np.array([p, q], dtype=float)
            if -1e-9 <= alpha < 1.0 - 1e-9 and -1e-9 <= beta < 1.0 - 1e-9:
                points.append((p, q))
    if len(points) != abs(n * m):
        raise SoftwallError(
            f"site enumeration found {len(points)} points, expected {abs(n * m)}"
        )
    return sorted(points)


def supercell_cut(tb: TightBinding2D, n: int, m: int) -> CommensurateCut:
    """Rewrite the model on the supercell lattice (n*a1, n*a1 + m*a2)."""
    if n == 0 or m == 0:
        raise ZeroIndex("cut indices must both be nonzero")
    if math.gcd(abs(n), abs(m)) != 1:
        raise NotCoprime(f"gcd(|{n}|, |{m}|) != 1")
    lat = tb.lattice
    sites = _supercell_sites(n, m)
    copies = len(sites)
    m_orb = tb.n_orbitals
    a1t = n * lat.a1
    a2t = n * lat.a1 + m * lat.a2
    atoms = tuple(
        lat.site(p, q) + lat.atoms[alpha]
        for alpha in range(m_orb)
        for (p, q) in sites
    )
    super_lat = BravaisLattice2D(a1t, a2t, atoms)
    cols = np.array([[n, n], [0, m]], dtype=float)
    inv = np.linalg.inv(cols)
    big = copies * m_orb
    blocks: dict[tuple[int, int], np.ndarray] = {}
    # With supercell components Phi^(j)(R) = Psi(R + y_j), the hopping from
    # original vector S lands at supercell vector R' = S - y_i + y_j; this
    # pairing keeps the stored atom positions y_j + x_alpha consistent with
    # the hoppings, which the per-atom wall evaluation relies on.
    for (p, q), block in tb.blocks.items():
        for i, yi in enumerate(sites):
            for j, yj in enumerate(sites):
                v = np.array([p - yi[0] + yj[0], q - yi[1] + yj[1]], dtype=float)
                coords = inv @ v
                rounded = np.round(coords)
                if np.max(np.abs(coords - rounded)) > 1e-9:
                    continue
                key = (int(rounded[0]), int(rounded[1]))
                target = blocks.setdefault(key, np.zeros((big, big), dtype=complex))
                for a in range(m_orb):
                    for b in range(m_orb):
                        target[a * copies + i, b * copies + j] = block[a, b]
    return CommensurateCut(n, m, tb, TightBinding2D(super_lat, blocks), tuple(sites))


def folded_fiber_check(tb: TightBinding2D, cut: CommensurateCut, k,
                       tol: float = 1e-9) -> dict:
    """Supercell fiber spectrum versus the union of folded original fibers."""
    k = np.asarray(k, dtype=float).reshape(2)
    super_vals = np.sort(np.linalg.eigvalsh(bloch2d(cut.supercell, k)))
    folded = np.sort(np.concatenate([
        np.linalg.eigvalsh(bloch2d(tb, k + rep))
        for rep in cut.reciprocal_representatives()
    ]))
    dev = float(np.max(np.abs(super_vals - folded)))
    return {"k": k.tolist(), "max_dev": dev, "pass": bool(dev < tol)}


def wall2d_blocks(wstar: SoftWallProfile, lattice: BravaisLattice2D, t: float,
                  cells: Sequence[tuple[int, int]]) -> list[np.ndarray]:
    """Per-cell diagonal blocks of the 2D wall, one scalar value per atom.

    The wall advances along a1 as t grows and is constant along a2; atom m
    in the cell at R feels the scalar profile at a2perp . (R - t*a1 + x_m)
    with a2perp the unit vector along b1.
    """
    if wstar.block_dim != 1:
        raise ValueError("the 2D wall takes a scalar (N=1) profile")
    b1 = lattice.b1
    a2perp = b1 / np.linalg.norm(b1)
    out = []
    for p, q in cells:
        base = lattice.site(p, q) - t * lattice.a1
        vals = [
            float(np.real(eval_wall(wstar, float(np.dot(a2perp, base + x)))[0, 0]))
            for x in lattice.atoms
        ]
        out.append(np.diag(vals).astype(complex))
    return out


def wall_profile_1d(wstar: SoftWallProfile, lattice: BravaisLattice2D) -> SoftWallProfile:
    """The 1D wall felt by the reduced chain: cell n carries w(n - t).

    Evaluating at x = n - t reproduces the 2D per-atom blocks; the chain
    profile is (nu * |Gamma| / |a2|)-Lipschitz in its scalar argument.
    """
    if wstar.block_dim != 1:
        raise ValueError("the 2D wall takes a scalar (N=1) profile")
    b1 = lattice.b1
    a2perp = b1 / np.linalg.norm(b1)
    scale = 2.0 * np.pi / np.linalg.norm(b1)  # equals |Gamma| / |a2|
    offsets = np.array([float(np.dot(a2perp, x)) for x in lattice.atoms])

    def evaluate(x: float) -> np.ndarray:
        vals = [
            float(np.real(eval_wall(wstar, x * scale + c)[0, 0])) for c in offsets
        ]
        return np.diag(vals).astype(complex)

    return SoftWallProfile(
        lattice.n_atoms,
        evaluate,
        wstar.lipschitz * scale,
        name=f"{wstar.name}@2d",
    )


def effective_interval_length(wstar_lipschitz: float, base: BravaisLattice2D,
                              cut: CommensurateCut | None = None) -> float:
    """nu * |Gamma| / |a2~|: the density interval of the supercell theorem."""
    a2 = cut.supercell.lattice.a2 if cut is not None else base.a2
    return wstar_lipschitz * base.cell_area / float(np.linalg.norm(a2))


def ssh_scalar_chain(j1: complex, j2: complex, n_sites: int) -> np.ndarray:
    """Open scalar chain with alternating hoppings, j1 on the (0, 1) bond."""
    mat = np.zeros((n_sites, n_sites), dtype=complex)
    for i in range(n_sites - 1):
        hop = j1 if i % 2 == 0 else j2
        mat[i, i + 1] = hop
        mat[i + 1, i] = np.conj(hop)
    return mat


@dataclass(frozen=True)
class GaugeResult:
    j1: float
    j2: float
    phase_j1: float
    phase_j2: float

    def site_phases(self, sites: Sequence[int]) -> np.ndarray:
        """Accumulated phases A_n of the diagonal unitary exp(i A)."""
        def bond_phase(bond: int) -> float:
            return self.phase_j1 if bond % 2 == 0 else self.phase_j2

        out = []
        for n in sites:
            if n >= 1:
                out.append(sum(bond_phase(j) for j in range(n)))
            elif n == 0:
                out.append(0.0)
            else:
                out.append(-sum(bond_phase(j) for j in range(n, 0)))
        return np.array(out)

    def unitary(self, sites: Sequence[int]) -> np.ndarray:
        return np.diag(np.exp(1j * self.site_phases(sites)))


def gauge_transform(j1: complex, j2: complex) -> GaugeResult:
    """Strip the hopping phases of a scalar 2-periodic chain.

    The diagonal unitary exp(i A) with accumulated bond phases A_n maps any
    finite truncation of the (j1, j2) chain onto the (|j1|, |j2|) chain, so
    both have identical spectra.
    """
    return GaugeResult(
        abs(j1), abs(j2),
        float(np.angle(j1)) if j1 != 0 else 0.0,
        float(np.angle(j2)) if j2 != 0 else 0.0,
    )


def wallace_preset(t0: float = 1.0) -> TightBinding2D:
    """Nearest-neighbour honeycomb model with hopping t0 (energy unit).

    Zig-zag convention: a1 = (1, -sqrt(3))/2, a2 = (1, sqrt(3))/2, lattice
    constant 1, two atoms per cell.  Five nonzero hoppings; the fiber
    eigenvalues are +-|1 + exp(-i k.a1) + exp(i k.a2)| times t0.
    """
    a1 = np.array([0.5, -np.sqrt(3.0) / 2.0])
    a2 = np.array([0.5, np.sqrt(3.0) / 2.0])
    x1 = (a1 + 2.0 * a2) / 3.0
    x2 = (2.0 * a1 + a2) / 3.0
    up = t0 * np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    dn = up.conj().T
    blocks = {
        (0, 0): t0 * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
        (1, 0): up,
        (0, -1): up,
        (-1, 0): dn,
        (0, 1): dn,
    }
    return TightBinding2D(BravaisLattice2D(a1, a2, (x1, x2)), blocks)


def dirac_points(lattice: BravaisLattice2D) -> tuple[np.ndarray, np.ndarray]:
    """K = (b1 + b2)/3 and K' = 2(b1 + b2)/3 for the honeycomb model."""
    s = lattice.b1 + lattice.b2
    return s / 3.0, 2.0 * s / 3.0


def fiber_gap_at(kernel: ConvolutionKernel, energy: float = 0.0,
                 k_count: int = 1024, refine: bool = True) -> float:
    """Distance from the energy to the sampled fiber spectrum of a 1D kernel.

    The coarse momentum grid is refined by a bounded scalar minimization
    around the grid argmin, so near-closures are resolved well below the
    grid resolution.
    """
    bands = band_structure(kernel, k_count)
    dists = np.min(np.abs(bands.curves - energy), axis=1)
    best = int(np.argmin(dists))
    if not refine:
        return float(dists[best])
    dk = 2.0 * np.pi / k_count

    def objective(k: float) -> float:
        vals = np.linalg.eigvalsh(bloch_fiber(kernel, k))
        return float(np.min(np.abs(vals - energy)))

    k0 = bands.k_grid[best]
    res = minimize_scalar(
        objective, bounds=(k0 - dk, k0 + dk), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(min(dists[best], res.fun))


def k2_gap_scan(tb: TightBinding2D, k2_count: int = 2048, energy: float = 0.0,
                k1_count: int = 1024, refine: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Distance from the energy to each k2-fiber spectrum over the k2 grid.

    Returns (k2 values, distances); the minimum and its argmin report how
    close the fiber gap comes to closing, without asserting an exact zero.
    """
    period = float(np.linalg.norm(tb.lattice.b2))
    k2s = period * np.arange(k2_count) / k2_count
    gaps = np.array([
        fiber_gap_at(reduce_to_1d(tb, k2), energy, k1_count, refine)
        for k2 in k2s
    ])
    return k2s, gaps


def load_tb2d(source) -> TightBinding2D:
    """Read a 2D model description (a1, a2, atoms, M, integer-coord blocks)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    lattice = BravaisLattice2D(data["a1"], data["a2"], tuple(data["atoms"]))
    if int(data["M"]) != lattice.n_atoms:
        raise ValueError("M does not match the number of atom positions")
    blocks = {}
    for item in data["blocks"]:
        re = np.asarray(item["re"], dtype=float)
        im = np.asarray(item.get("im", np.zeros_like(re)), dtype=float)
        blocks[tuple(int(c) for c in item["R"])] = re + 1j * im
    return TightBinding2D(lattice, blocks)


def save_tb2d(tb: TightBinding2D, path) -> None:
    payload = {
        "a1": tb.lattice.a1.tolist(),
        "a2": tb.lattice.a2.tolist(),
        "atoms": [x.tolist() for x in tb.lattice.atoms],
        "M": tb.n_orbitals,
        "blocks": [
            {
                "R": [p, q],
                "re": np.real(block).tolist(),
                "im": np.imag(block).tolist(),
            }
            for (p, q), block in sorted(tb.blocks.items())
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
