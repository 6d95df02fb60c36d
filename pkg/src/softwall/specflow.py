"""Spectral flow of Hermitian matrix families over t in [0, 1].

Two independent routes compute the same integer.  The counting route is
primary: for finite Hermitian matrices the net flow is exactly the change of
the counting function, N_below(1) - N_below(0), with downward crossings
counting positive.  The partition route mirrors the projector-rank
definition: pick knots t_i and widths a_i so the levels E +- a_i are never
crossed inside a sub-interval, then sum signed eigenvalue counts in the
windows (E + a_i, E + a_{i+1}) at the knots, plus kernel-dimension boundary
terms.  Both are exact integers; any disagreement is a hard failure.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import SoftwallError, count_bands_below
from .edge import EdgeSweep, assemble_edge, edge_sweep_t, eigensolve_classify

DEFAULT_E_TOL = 1e-8
DEFAULT_CLEARANCE = 1e-6


class EOnEigenvalue(SoftwallError):
    """The probe energy coincides with an endpoint eigenvalue."""


class PlanInfeasible(SoftwallError):
    """No partition widths clear the spectrum on some sub-interval."""


@dataclass(frozen=True)
class SpectralFlowResult:
    flow: int
    method: str
    crossings: tuple[tuple[tuple[float, float], int], ...]
    energy: float
    endpoint_counts: tuple[int, int]
    plan: "PartitionPlan | None" = None

    def as_dict(self) -> dict:
        return {
            "flow": self.flow,
            "method": self.method,
            "E": self.energy,
            "endpoint_counts": list(self.endpoint_counts),
            "crossings": [
                {"t_interval": list(span), "signed_count": cnt}
                for span, cnt in self.crossings
            ],
        }


@dataclass(frozen=True)
class PartitionPlan:
    """Knots 0 = t_0 < ... < t_M = 1 and widths a_1 ... a_M.

    For each i, the levels E +- a_i stay clear of the sampled spectrum on
    [t_{i-1}, t_i] with a Lipschitz-certified margin, so the projector rank
    between those levels is constant on the sub-interval.
    """

    knots: tuple[float, ...]
    widths: tuple[float, ...]


def _normalize_table(source, t_grid):
    """Return (times list, eigenvalue rows list, catalog, evaluator)."""
    if isinstance(source, EdgeSweep):
        return (
            [float(t) for t in source.t_grid],
            [np.asarray(row) for row in source.eigenvalues],
            source.catalog,
            None,
        )
    if callable(source):
        if t_grid is None:
            t_grid = np.linspace(0.0, 1.0, 201)
        times = [float(t) for t in np.asarray(t_grid, dtype=float)]
        rows = [np.linalg.eigvalsh(source(t)) for t in times]
        return times, rows, None, source
    times, eigs = source
    times = [float(t) for t in np.asarray(times, dtype=float)]
    rows = [np.asarray(row) for row in np.asarray(eigs, dtype=float)]
    return times, rows, None, None


def _count_below(row: np.ndarray, energy: float) -> int:
    return int(np.count_nonzero(row < energy))


def flow_counting(sweep, energy: float, tol: float = DEFAULT_E_TOL,
                  margin: float = 0.0) -> SpectralFlowResult:
    """Net flow as the endpoint difference of the counting function.

    flow = #{eigenvalues < E at t_end} - #{eigenvalues < E at t_start};
    a branch crossing E downwards raises the count and contributes +1.
    Per-step signed counts from adjacent grid rows are kept as diagnostics
    and telescope to the flow.
    """
    times, rows, catalog, _ = _normalize_table(sweep, None)
    if len(times) < 2:
        raise ValueError("need at least two grid points")
    if catalog is not None:
        count_bands_below(catalog, energy, margin)
    for label, row in (("start", rows[0]), ("end", rows[-1])):
        dist = float(np.min(np.abs(row - energy)))
        if dist <= tol:
            raise EOnEigenvalue(
                f"E={energy} is within {dist:.3e} of an eigenvalue at the {label} point"
            )
    counts = [_count_below(row, energy) for row in rows]
    crossings = tuple(
        ((times[s], times[s + 1]), counts[s + 1] - counts[s])
        for s in range(len(times) - 1)
        if counts[s + 1] != counts[s]
    )
    return SpectralFlowResult(
        counts[-1] - counts[0], "counting", crossings, energy,
        (counts[0], counts[-1]),
    )


def _nudge_energy(energy: float, rows, tol: float) -> float:
    """Shift E off endpoint eigenvalues, warning as required."""
    for _ in range(50):
        dist = min(
            float(np.min(np.abs(rows[0] - energy))),
            float(np.min(np.abs(rows[-1] - energy))),
        )
        if dist > tol:
            return energy
        up = energy + 1e-7
        down = energy - 1e-7
        d_up = min(float(np.min(np.abs(r - up))) for r in (rows[0], rows[-1]))
        d_down = min(float(np.min(np.abs(r - down))) for r in (rows[0], rows[-1]))
        new = up if d_up >= d_down else down
        warnings.warn(
            f"E={energy} sits on an endpoint eigenvalue; nudged to {new}",
            stacklevel=3,
        )
        energy = new
    raise EOnEigenvalue("could not move E off the endpoint spectrum")


def _merged_forbidden(dists: np.ndarray, margin: float) -> list[tuple[float, float]]:
    """Merged intervals (d - margin, d + margin) over the distance multiset."""
    if dists.size == 0:
        return []
    lo = dists - margin
    hi = dists + margin
    order = np.argsort(lo)
    merged = []
    cur_lo, cur_hi = lo[order[0]], hi[order[0]]
    for idx in order[1:]:
        if lo[idx] <= cur_hi:
            cur_hi = max(cur_hi, hi[idx])
        else:
            merged.append((cur_lo, cur_hi))
            cur_lo, cur_hi = lo[idx], hi[idx]
    merged.append((cur_lo, cur_hi))
    return merged


def _smallest_clear_width(row_a: np.ndarray, row_b: np.ndarray,
                          energy: float, margin: float) -> float:
    """Smallest a >= 0 with E +- a at distance > margin from both rows."""
    dists = np.abs(np.concatenate([row_a, row_b]) - energy)
    merged = _merged_forbidden(dists, margin)
    point = 0.0
    for lo, hi in merged:
        if point < lo:
            break
        point = hi
    else:
        return point + margin
    if point == 0.0:
        return 0.0
    return point + min(lo - point, margin) / 2.0


def _width_is_zero_ok(row_a, row_b, energy, margin) -> bool:
    return (
        float(np.min(np.abs(row_a - energy))) > margin
        and float(np.min(np.abs(row_b - energy))) > margin
    )


def flow_partition(family, energy: float, t_grid=None, *,
                   clearance: float = DEFAULT_CLEARANCE,
                   lipschitz: float | None = None,
                   tol: float = DEFAULT_E_TOL,
                   evaluator=None) -> SpectralFlowResult:
    """Spectral flow by the knots-and-widths projector-rank formula.

    ``family`` may be a callable t -> Hermitian matrix, an EdgeSweep, or a
    pair (t_grid, eigenvalue rows).  The plan is built automatically: knots
    at the grid samples, per-step widths chosen as the smallest value
    clearing the spectrum with margin lipschitz*step/2 + clearance (the
    Lipschitz bound certifies no level crossing between samples).  The first
    and last widths are forced to zero, splitting off a short initial or
    final sub-interval when an eigenvalue crosses E right away; this needs a
    callable family (or a separate ``evaluator``) and otherwise raises
    PlanInfeasible.
    """
    times, rows, _, table_eval = _normalize_table(family, t_grid)
    if evaluator is None:
        evaluator = table_eval
    if len(times) < 2:
        raise ValueError("need at least two grid points")
    energy = _nudge_energy(energy, rows, tol)

    if lipschitz is None:
        slopes = [
            np.max(np.abs(rows[s + 1] - rows[s])) / (times[s + 1] - times[s])
            for s in range(len(times) - 1)
            if times[s + 1] > times[s]
        ]
        lipschitz = 1.5 * max(slopes, default=0.0)

    def margin(step: float, local_clearance: float = clearance) -> float:
        return lipschitz * step / 2.0 + local_clearance

    def split_endpoint(first: bool) -> None:
        """Insert a sample that makes the boundary step E-clear with a = 0."""
        if evaluator is None:
            raise PlanInfeasible(
                "an eigenvalue crosses E at the interval boundary; "
                "provide a callable family or a finer grid"
            )
        idx = 0 if first else len(times) - 1
        d0 = float(np.min(np.abs(rows[idx] - energy)))
        local = min(clearance, d0 / 8.0)
        step = times[1] - times[0] if first else times[-1] - times[-2]
        for _ in range(80):
            if lipschitz > 0.0:
                step = min(step, d0 / (2.0 * lipschitz))
            tau = times[0] + step if first else times[-1] - step
            row = np.linalg.eigvalsh(evaluator(tau))
            boundary_row = rows[0] if first else rows[-1]
            if _width_is_zero_ok(boundary_row, row, energy, margin(step, local)):
                if first:
                    times.insert(1, tau)
                    rows.insert(1, row)
                else:
                    times.insert(len(times) - 1, tau)
                    rows.insert(len(rows) - 1, row)
                return
            step /= 2.0
        raise PlanInfeasible("could not isolate the boundary crossing near the endpoint")

    def boundary_margin(step: float, boundary_row) -> float:
        d = float(np.min(np.abs(boundary_row - energy)))
        return margin(step, min(clearance, d / 8.0))

    for first in (True, False):
        i0, i1 = (0, 1) if first else (len(times) - 2, len(times) - 1)
        step = times[i1] - times[i0]
        m = boundary_margin(step, rows[i0 if first else i1])
        if not _width_is_zero_ok(rows[i0], rows[i1], energy, m):
            split_endpoint(first)

    widths = []
    for s in range(len(times) - 1):
        step = times[s + 1] - times[s]
        if s == 0 or s == len(times) - 2:
            m = boundary_margin(step, rows[0] if s == 0 else rows[-1])
            if not _width_is_zero_ok(rows[s], rows[s + 1], energy, m):
                raise PlanInfeasible("boundary sub-interval is not E-clear")
            widths.append(0.0)
        else:
            widths.append(_smallest_clear_width(rows[s], rows[s + 1], energy,
                                                margin(step)))

    plan = PartitionPlan(tuple(times), tuple(widths))

    def count_halfopen(row: np.ndarray, width: float) -> int:
        # Eigenvalues in [E, E + width); ties at E cancel between the two
        # adjacent terms sharing the knot, so exact comparisons suffice.
        return int(np.count_nonzero((row >= energy) & (row < energy + width)))

    def signed_open(row: np.ndarray, alpha: float, beta: float) -> int:
        if alpha == beta:
            return 0
        lo, hi = min(alpha, beta), max(alpha, beta)
        cnt = int(np.count_nonzero((row > lo) & (row < hi)))
        return cnt if beta > alpha else -cnt

    kernel_dim_0 = int(np.count_nonzero(np.abs(rows[0] - energy) <= tol))
    kernel_dim_1 = int(np.count_nonzero(np.abs(rows[-1] - energy) <= tol))
    boxed = kernel_dim_0 - kernel_dim_1
    for i in range(1, len(widths)):
        boxed += signed_open(rows[i], energy + widths[i - 1], energy + widths[i])

    per_step = [
        count_halfopen(rows[s], widths[s]) - count_halfopen(rows[s + 1], widths[s])
        for s in range(len(widths))
    ]
    if sum(per_step) != boxed:
        raise SoftwallError(
            f"partition bookkeeping mismatch: telescoped {sum(per_step)} vs boxed {boxed}"
        )
    crossings = tuple(
        ((times[s], times[s + 1]), per_step[s])
        for s in range(len(per_step))
        if per_step[s] != 0
    )
    return SpectralFlowResult(
        boxed, "partition", crossings, energy,
        (_count_below(rows[0], energy), _count_below(rows[-1], energy)),
        plan=plan,
    )


def verify_theorem_flow(model, wall, energy: float, half_width: int,
                        t_points: int = 200, k_count: int = 1024,
                        threads: int = 1, margin: float = 0.0) -> dict:
    """Check that both flow computations equal minus the band count below E."""
    from .core import band_structure, gap_catalog
    from .edge import eigenvalue_table

    kernel = model.as_kernel()
    catalog = gap_catalog(band_structure(kernel, k_count))
    n_below = count_bands_below(catalog, energy, margin)
    table = eigenvalue_table(kernel, wall, half_width,
                             np.linspace(0.0, 1.0, t_points), threads=threads)
    counting = flow_counting(table, energy)
    partition = flow_partition(
        table,
        energy,
        lipschitz=wall.lipschitz,
        evaluator=lambda t: assemble_edge(kernel, wall, t, half_width).matrix,
    )
    ok = counting.flow == partition.flow == -n_below
    return {
        "E": energy,
        "N_of_E": n_below,
        "flow_counting": counting.flow,
        "flow_partition": partition.flow,
        "pass": bool(ok),
        "crossings": [
            {"t_interval": list(span), "signed_count": cnt}
            for span, cnt in counting.crossings
        ],
    }


def verify_density(model, wall, energy: float, t0: float, half_width: int,
                   interval_length: float | None = None,
                   n_expected: int | None = None,
                   ladder_points: int = 201, k_count: int = 1024) -> dict:
    """Check the eigenvalue-density lower bound at a fixed wall position.

    Every interval (lambda, lambda + nu] inside the gap containing E must
    hold at least N(E) eigenvalues of the truncation; nu defaults to the
    wall's Lipschitz constant and may be overridden (supercell cuts use
    nu * |Gamma| / |a2~|).  When nu is at least the gap width the hypothesis
    is void and the report is marked vacuous.
    """
    kernel = model.as_kernel()
    from .core import band_structure, gap_catalog

    catalog = gap_catalog(band_structure(kernel, k_count))
    gap = catalog.gap_containing(energy)
    if gap is None:
        count_bands_below(catalog, energy)  # raises EInBand when inside a hull
        raise ValueError("density check needs a bounded interior gap around E")
    nu = wall.lipschitz if interval_length is None else float(interval_length)
    base = {
        "E": energy,
        "t0": t0,
        "interval_length": nu,
        "gap": [gap.lo, gap.hi],
    }
    if nu >= gap.width:
        return {**base, "vacuous": True, "pass": True, "min_count": None,
                "n_expected": None}
    n_exp = count_bands_below(catalog, energy) if n_expected is None else int(n_expected)
    trunc = assemble_edge(kernel, wall, t0, half_width)
    vals = np.sort(np.linalg.eigvalsh(trunc.matrix))
    starts = np.linspace(gap.lo, gap.hi - nu, ladder_points)
    counts = [
        bisect.bisect_right(vals, lam + nu) - bisect.bisect_right(vals, lam)
        for lam in starts
    ]
    min_count = int(min(counts))
    return {
        **base,
        "vacuous": False,
        "n_expected": n_exp,
        "min_count": min_count,
        "pass": bool(min_count >= n_exp),
    }
