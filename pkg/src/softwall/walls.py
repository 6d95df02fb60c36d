"""Soft confining walls: Lipschitz matrix barriers and the steep-wall transform.

A soft wall is a Lipschitz map x -> w(x) into Hermitian N x N matrices whose
smallest eigenvalue diverges as x -> -infinity while all entries decay to 0
as x -> +infinity.  The shifted wall operator multiplies site n by w(n - t);
its full spectrum is the union of the block spectra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import PeriodicJacobi, SoftwallError, _opnorm


class SaturationNotFound(SoftwallError):
    """No point could be certified left of which the wall exceeds the level."""


@dataclass(frozen=True)
class SoftWallProfile:
    """A wall profile: evaluation closure plus declared metadata.

    The library trusts the declared Lipschitz constant and saturation data
    but verifies them by sampling (see the walls test module); the defining
    hypotheses are asymptotic and cannot be certified exactly.

    Attributes
    ----------
    block_dim : int
        Matrix size returned by eval_fn.
    eval_fn : callable
        x -> Hermitian block_dim x block_dim array.
    lipschitz : float
        Declared Lipschitz constant of x -> w(x) in operator norm.
    saturation_point : float, optional
        A point x_s such that w(x) >= saturation_level for all x <= x_s.
    saturation_level : float, optional
        The level certified at saturation_point.
    """

    block_dim: int
    eval_fn: Callable[[float], np.ndarray]
    lipschitz: float
    saturation_point: float | None = None
    saturation_level: float | None = None
    name: str = "custom"

    def __call__(self, x: float) -> np.ndarray:
        return eval_wall(self, x)


def eval_wall(profile: SoftWallProfile, x: float) -> np.ndarray:
    block = np.asarray(profile.eval_fn(float(x)), dtype=complex)
    if block.shape != (profile.block_dim, profile.block_dim):
        raise ValueError(
            f"wall profile returned shape {block.shape}, expected "
            f"({profile.block_dim}, {profile.block_dim})"
        )
    return block


def linear_ramp(nu: float, offsets: Sequence[float] = (0.0,)) -> SoftWallProfile:
    """Piecewise-linear ramp: 0 for x >= 0, -nu*x for x <= 0, per atom offset.

    The block is diag(ramp(x + offsets[m])), evaluating the scalar ramp at
    the position of each atom in the unit cell.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    offs = np.asarray(offsets, dtype=float)

    def evaluate(x: float) -> np.ndarray:
        vals = np.where(x + offs >= 0.0, 0.0, -nu * (x + offs))
        return np.diag(vals).astype(complex)

    return SoftWallProfile(len(offs), evaluate, float(nu), name=f"linear_ramp(nu={nu})")


def smooth_sqrt(offsets: Sequence[float] = (0.0,)) -> SoftWallProfile:
    """The smooth barrier w(x) = (sqrt(x^2 + 1) - x) / 2, per atom offset."""
    offs = np.asarray(offsets, dtype=float)

    def evaluate(x: float) -> np.ndarray:
        y = x + offs
        vals = 0.5 * (np.sqrt(y * y + 1.0) - y)
        return np.diag(vals).astype(complex)

    return SoftWallProfile(len(offs), evaluate, 1.0, name="smooth_sqrt")


def custom_table(xs: Sequence[float], ws: Sequence) -> SoftWallProfile:
    """Piecewise-linear wall through sampled Hermitian matrices.

    Between samples the blocks are interpolated linearly.  Right of the last
    sample the profile continues as a constant (the user must keep that value
    near 0); left of the first sample it continues linearly with the slope of
    the first segment, preserving the divergence at -infinity.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be at least two strictly increasing samples")
    mats = np.array([np.atleast_2d(np.asarray(w, dtype=complex)) for w in ws])
    if mats.shape[0] != len(xs):
        raise ValueError("need one matrix per sample point")
    n = mats.shape[1]
    slopes = np.diff(mats, axis=0) / np.diff(xs)[:, None, None]
    lip = max(_opnorm(s) for s in slopes)

    def evaluate(x: float) -> np.ndarray:
        if x >= xs[-1]:
            return mats[-1].copy()
        if x <= xs[0]:
            return mats[0] + (x - xs[0]) * slopes[0]
        i = int(np.searchsorted(xs, x, side="right")) - 1
        return mats[i] + (x - xs[i]) * slopes[i]

    return SoftWallProfile(n, evaluate, float(lip), name="custom_table")


def shifted_wall_blocks(profile: SoftWallProfile, t: float,
                        sites: Sequence[int]) -> list[np.ndarray]:
    """Diagonal blocks of the shifted wall operator: block n is w(n - t)."""
    return [eval_wall(profile, n - t) for n in sites]


def wall_spectrum(profile: SoftWallProfile, t: float,
                  sites: Sequence[int]) -> np.ndarray:
    """Sorted union of the block spectra over the given site range."""
    eigs = [np.linalg.eigvalsh(block) for block in shifted_wall_blocks(profile, t, sites)]
    return np.sort(np.concatenate(eigs)) if eigs else np.array([])


def _min_eig(profile: SoftWallProfile, x: float) -> float:
    return float(np.linalg.eigvalsh(eval_wall(profile, x))[0])


def find_saturation_point(profile: SoftWallProfile, level: float,
                          search_depth: float = 1000.0, step: float = 0.25,
                          verify_span: float = 100.0) -> float:
    """Rightmost sampled x <= -1 with w >= level certified on a left window.

    The sampled condition min_eig(w(x_i)) >= level + lipschitz*step/2
    certifies w >= level between samples.  Beyond verify_span below the
    candidate the asymptotic divergence contract of the profile is trusted.
    """
    slack = profile.lipschitz * step / 2.0
    x = -1.0
    candidate = None
    while x >= -1.0 - search_depth:
        if _min_eig(profile, x) >= level + slack:
            candidate = x
            break
        x -= step
    if candidate is None:
        raise SaturationNotFound(
            f"no saturation at level {level} found within {search_depth} below -1"
        )
    for y in np.arange(candidate, candidate - verify_span, -step):
        if _min_eig(profile, y) < level + slack:
            raise SaturationNotFound(
                f"wall dips below level {level} at x={y} left of candidate {candidate}"
            )
    return candidate


def steep_wall(profile: SoftWallProfile, jacobi: PeriodicJacobi, energy: float,
               sigma: float | None = None) -> SoftWallProfile:
    """Replace a soft wall by the piecewise-linear steep wall saturating at Sigma.

    Sigma defaults to E + 4*C_{a,b} + 1, the minimal admissible choice.  The
    returned profile vanishes for x >= 0, climbs linearly to Sigma - b on
    [-1, 0], holds Sigma - b down to the saturation point of the original
    wall, blends back into the original wall over one unit, and guarantees
    w(x) >= E + 3*C_{a,b} + 1 for x < -1.
    """
    if profile.block_dim != jacobi.block_dim:
        raise ValueError("wall and operator block dimensions differ")
    c = jacobi.coupling_norm
    if sigma is None:
        sigma = energy + 4.0 * c + 1.0
    b = jacobi.diag
    n = jacobi.block_dim
    plateau = sigma * np.eye(n) - b
    if (
        profile.saturation_point is not None
        and profile.saturation_level is not None
        and profile.saturation_level >= sigma
        and profile.saturation_point <= -1.0
    ):
        x_sat = float(profile.saturation_point)
    else:
        x_sat = find_saturation_point(profile, sigma)

    def evaluate(x: float) -> np.ndarray:
        if x >= 0.0:
            return np.zeros((n, n), dtype=complex)
        if x >= -1.0:
            return -x * plateau
        if x >= x_sat:
            return plateau.copy()
        if x >= x_sat - 1.0:
            base = eval_wall(profile, x)
            return (x - x_sat + 1.0) * plateau + (x_sat - x) * base
        return eval_wall(profile, x)

    # Lipschitz bound: the blend derivative involves plateau - w(x) and
    # (x_sat - x) w'(x) with |x_sat - x| <= 1 on the blend interval.
    blend_sup = max(
        _opnorm(eval_wall(profile, x))
        for x in np.linspace(x_sat - 1.0, x_sat, 65)
    )
    lip = max(
        _opnorm(plateau),
        _opnorm(plateau) + blend_sup + profile.lipschitz,
        profile.lipschitz,
    )
    return SoftWallProfile(
        n,
        evaluate,
        float(lip),
        saturation_point=-1.0,
        saturation_level=float(sigma - _opnorm(b)),
        name=f"steep(E={energy}, Sigma={sigma})",
    )


def wall_preset(spec: dict, offsets: Sequence[float] = (0.0,)) -> SoftWallProfile:
    """Build a wall from a config mapping: {"preset": name, ...params}."""
    kind = spec.get("preset")
    if kind == "linear_ramp":
        return linear_ramp(float(spec.get("nu", 1.0)), offsets)
    if kind == "smooth_sqrt":
        return smooth_sqrt(offsets)
    if kind == "custom_table":
        return custom_table(spec["x"], spec["w"])
    raise ValueError(f"unknown wall preset {kind!r}")
