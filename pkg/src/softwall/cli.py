"""Configuration-driven command line front end.

One JSON config describes a model (preset or file), a wall, sweep ranges and
probe energies; subcommands write CSV tables and JSON reports.  All numeric
CSV fields carry 17 significant digits so identical configs reproduce
byte-identical files, except for the generated= metadata header line.

Exit codes: 0 ok, 1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import core, dislocation, edge, lattice2d, specflow, walls
from .core import SoftwallError


class ConfigError(SoftwallError):
    pass


@dataclass
class ModelBundle:
    """A resolved model: 1D kernel or 2D tight-binding data plus wall hooks."""

    kind: str                      # "1d" | "2d"
    kernel: core.ConvolutionKernel | None = None
    offsets: tuple = (0.0,)
    tb: lattice2d.TightBinding2D | None = None
    cut: lattice2d.CommensurateCut | None = None
    label: str = "model"

    def reduced_kernel(self, k2: float) -> core.ConvolutionKernel:
        if self.kind != "2d":
            raise ConfigError("k2 reduction requested for a 1D model")
        model = self.cut.supercell if self.cut is not None else self.tb
        return lattice2d.reduce_to_1d(model, k2)

    @property
    def lattice(self) -> lattice2d.BravaisLattice2D:
        model = self.cut.supercell if self.cut is not None else self.tb
        return model.lattice

    def as_jacobi(self) -> core.PeriodicJacobi:
        kernel = self.kernel
        return core.supercell_jacobi(kernel, max(kernel.hop_range, 1))


def resolve_model(spec) -> ModelBundle:
    if isinstance(spec, str):
        spec = {"preset": spec}
    if "path" in spec:
        kernel = core.load_kernel(spec["path"])
        return ModelBundle("1d", kernel=kernel,
                           offsets=tuple([0.0] * kernel.block_dim),
                           label=os.path.basename(str(spec["path"])))
    if "path2d" in spec:
        tb = lattice2d.load_tb2d(spec["path2d"])
        return ModelBundle("2d", tb=tb, label=os.path.basename(str(spec["path2d"])))
    preset = spec.get("preset")
    if preset == "ssh":
        j1 = spec.get("J1", 1.5)
        j2 = spec.get("J2", 0.5)
        d1 = spec.get("d1", 0.25)
        jac = core.ssh_kernel(j1, j2)
        return ModelBundle("1d", kernel=jac.as_kernel(), offsets=(0.0, d1),
                           label="ssh")
    if preset == "wallace":
        return ModelBundle("2d", tb=lattice2d.wallace_preset(), label="wallace")
    if preset == "wallace_armchair":
        tb = lattice2d.wallace_preset()
        return ModelBundle("2d", tb=tb, cut=lattice2d.supercell_cut(tb, -1, 1),
                           label="wallace_armchair")
    if preset == "wallace_cut":
        tb = lattice2d.wallace_preset()
        n, m = int(spec["n"]), int(spec["m"])
        return ModelBundle("2d", tb=tb, cut=lattice2d.supercell_cut(tb, n, m),
                           label=f"wallace_cut_{n}_{m}")
    raise ConfigError(f"unknown model spec {spec!r}")


def resolve_wall(spec, bundle: ModelBundle) -> walls.SoftWallProfile:
    if spec is None:
        spec = {"preset": "linear_ramp", "nu": 1.0}
    if isinstance(spec, str):
        spec = {"preset": spec}
    preset = spec.get("preset")
    if bundle.kind == "2d":
        if preset == "steep":
            raise ConfigError("steep walls apply to 1D models only")
        scalar = walls.wall_preset(spec, offsets=(0.0,))
        return lattice2d.wall_profile_1d(scalar, bundle.lattice)
    if preset == "steep":
        base_spec = spec.get("base", {"preset": "linear_ramp",
                                      "nu": spec.get("nu", 1.0)})
        base = walls.wall_preset(base_spec, offsets=bundle.offsets)
        return walls.steep_wall(base, bundle.as_jacobi(), float(spec["E"]),
                                sigma=spec.get("sigma"))
    return walls.wall_preset(spec, offsets=bundle.offsets)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
        return json.loads(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, col {exc.colno}): "
            f"{exc.msg}"
        ) from exc


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _header(command: str, extra: dict | None = None) -> list[str]:
    lines = [f"softwall {command} generated={datetime.now(timezone.utc).isoformat()}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    return lines


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sweep_params(config) -> tuple[np.ndarray, int]:
    sweep = config.get("sweep", {})
    t_points = int(sweep.get("t_points", 200))
    lo, hi = sweep.get("t_range", [0.0, 1.0])
    if t_points < 1:
        raise ConfigError("sweep.t_points must be positive")
    grid = np.linspace(float(lo), float(hi), t_points)
    return grid, t_points


def _k2_values(config, bundle: ModelBundle) -> np.ndarray:
    sweep = config.get("sweep", {})
    period = float(np.linalg.norm(bundle.lattice.b2))
    if "k2_points" in sweep:
        count = int(sweep["k2_points"])
        return period * np.arange(count) / count
    frac = float(config.get("k2", 0.0))
    return np.array([frac * period])


def cmd_bands(config, out_dir: str, threads: int, seed: int) -> int:
    bundle = resolve_model(config["model"])
    k_count = int(config.get("k_count", 1024))
    if bundle.kind == "1d":
        bands = core.band_structure(bundle.kernel, k_count)
        catalog = core.gap_catalog(bands)
        path = os.path.join(out_dir, "bands.csv")
        with open(path, "w") as fh:
            for line in _header("bands", {"model": bundle.label}):
                fh.write(f"# {line}\n")
            fh.write("k,band_index,eigenvalue\n")
            for i, k in enumerate(bands.k_grid):
                for j in range(bands.n_bands):
                    fh.write(f"{_fmt(k)},{j},{_fmt(bands.curves[i, j])}\n")
        _write_json(os.path.join(out_dir, "gaps.json"), {
            "bands": [[lo, hi] for lo, hi in catalog.bands],
            "gaps": [
                {"lo": g.lo, "hi": g.hi, "bands_below": g.bands_below}
                for g in catalog.gaps
            ],
            "grid_error": catalog.grid_error,
        })
        return 0
    model = bundle.cut.supercell if bundle.cut is not None else bundle.tb
    lat = model.lattice
    grid_n = int(config.get("k_grid", 192))
    path = os.path.join(out_dir, "bands2d.csv")
    min_gap, argmin = np.inf, (0.0, 0.0)
    with open(path, "w") as fh:
        for line in _header("bands", {"model": bundle.label}):
            fh.write(f"# {line}\n")
        fh.write("k1_frac,k2_frac,band_index,eigenvalue\n")
        for i in range(grid_n):
            for j in range(grid_n):
                k = (i / grid_n) * lat.b1 + (j / grid_n) * lat.b2
                vals = np.linalg.eigvalsh(lattice2d.bloch2d(model, k))
                for b, v in enumerate(vals):
                    fh.write(f"{_fmt(i / grid_n)},{_fmt(j / grid_n)},{b},{_fmt(v)}\n")
                gap_here = float(np.min(np.diff(vals))) if len(vals) > 1 else np.inf
                if gap_here < min_gap:
                    min_gap, argmin = gap_here, (i / grid_n, j / grid_n)
    _write_json(os.path.join(out_dir, "gaps2d.json"), {
        "min_band_gap": min_gap,
        "argmin_k_frac": list(argmin),
        "k_grid": grid_n,
    })
    return 0


def cmd_edge_sweep(config, out_dir: str, threads: int, seed: int) -> int:
    bundle = resolve_model(config["model"])
    wall = resolve_wall(config.get("wall"), bundle)
    t_grid, _ = _sweep_params(config)
    half_width = int(config.get("box", {}).get("L", 100))
    k_count = int(config.get("k_count", 1024))
    if bundle.kind == "1d":
        sweep = edge.edge_sweep_t(bundle.kernel, wall, half_width, t_grid,
                                  k_count=k_count, threads=threads)
        sweep.write_csv(os.path.join(out_dir, "edge.csv"),
                        _header("edge-sweep", {"model": bundle.label,
                                               "L": half_width}))
        return 0
    period = float(np.linalg.norm(bundle.lattice.b2))
    for idx, k2 in enumerate(_k2_values(config, bundle)):
        kernel = bundle.reduced_kernel(k2)
        sweep = edge.edge_sweep_t(kernel, wall, half_width, t_grid,
                                  k_count=k_count, threads=threads)
        sweep.write_csv(
            os.path.join(out_dir, f"edge_k2_{idx:04d}.csv"),
            _header("edge-sweep", {
                "model": bundle.label,
                "L": half_width,
                "k2": _fmt(k2),
                "k2_frac": _fmt(k2 / period),
            }),
        )
    return 0


def _flow_reports(config, threads: int) -> list[dict]:
    bundle = resolve_model(config["model"])
    wall = resolve_wall(config.get("wall"), bundle)
    t_grid, t_points = _sweep_params(config)
    if t_points < 2:
        raise ConfigError("flows need sweep.t_points >= 2")
    half_width = int(config.get("box", {}).get("L", 100))
    k_count = int(config.get("k_count", 1024))
    if bundle.kind == "1d":
        kernel = bundle.kernel
    else:
        kernel = bundle.reduced_kernel(_k2_values(config, bundle)[0])
    catalog = core.gap_catalog(core.band_structure(kernel, k_count))
    table = edge.eigenvalue_table(kernel, wall, half_width, t_grid, threads=threads)
    reports = []
    for energy in config.get("energies", [0.0]):
        energy = float(energy)
        n_below = core.count_bands_below(catalog, energy)
        counting = specflow.flow_counting(table, energy)
        partition = specflow.flow_partition(
            table, energy, lipschitz=wall.lipschitz,
            evaluator=lambda t: edge.assemble_edge(kernel, wall, t, half_width).matrix,
        )
        reports.append({
            "E": energy,
            "N_of_E": n_below,
            "flow_counting": counting.flow,
            "flow_partition": partition.flow,
            "pass": bool(counting.flow == partition.flow == -n_below),
            "crossings": [
                {"t_interval": list(span), "signed_count": cnt}
                for span, cnt in counting.crossings
            ],
        })
    return reports


def cmd_flow(config, out_dir: str, threads: int, seed: int) -> int:
    reports = _flow_reports(config, threads)
    _write_json(os.path.join(out_dir, "flows.json"), {"reports": reports})
    return 0


def cmd_ring(config, out_dir: str, threads: int, seed: int) -> int:
    bundle = resolve_model(config["model"])
    if bundle.kind != "1d":
        raise ConfigError("ring checks need a 1D model")
    jac = bundle.as_jacobi()
    ring_cfg = config.get("ring", {})
    energy = float(ring_cfg.get("E", config.get("energies", [0.0])[0]))
    sigma = float(ring_cfg.get("sigma", energy + 4.0 * jac.coupling_norm + 1.0))
    ells = [int(e) for e in ring_cfg.get("ells", range(5, 65))]
    t = float(ring_cfg.get("t", 0.5))
    window = ring_cfg.get("window")
    rows = []
    for cells in ells:
        rep = dislocation.ring_flow_check(jac, sigma, energy, cells)
        rows.append((cells, 0.0, rep["count_t0"], None))
        rows.append((cells, 1.0, rep["count_t1"], None))
    conv = None
    if window is not None:
        conv = dislocation.projector_rank_convergence(
            jac, sigma, (float(window[0]), float(window[1])), t, ells
        )
    path = os.path.join(out_dir, "ring.csv")
    with open(path, "w") as fh:
        extra = {"model": bundle.label, "E": _fmt(energy), "sigma": _fmt(sigma)}
        if conv is not None:
            ref = conv["reference"]
            extra["reference_count_in_window"] = ref["count_in_window"]
            extra["reference_box_half_width"] = ref["box_half_width"]
        for line in _header("ring", extra):
            fh.write(f"# {line}\n")
        fh.write("ell,t,count_below_E,count_in_window\n")
        for cells, t_val, below, inwin in rows:
            fh.write(f"{cells},{_fmt(t_val)},{below},{'' if inwin is None else inwin}\n")
        if conv is not None:
            for row in conv["rows"]:
                fh.write(f"{row['ell']},{_fmt(row['t'])},{row['count_below_E']},"
                         f"{row['count_in_window']}\n")
    return 0


def _default_verify_suite() -> dict:
    return {
        "theorem_flow": {"model": "ssh", "wall": {"preset": "linear_ramp", "nu": 1.0},
                         "energies": [0.0, 2.5], "L": 60, "t_points": 121},
        "density": {"model": "ssh", "wall": {"preset": "linear_ramp", "nu": 0.5},
                    "E": 0.0, "t0s": [0.0, 0.3], "L": 100},
        "ring": {"model": "ssh", "E": 0.0, "ells": [5, 20, 64]},
        "folded_fiber": {"cuts": [[-1, 1], [-1, 2]], "n_k": 25},
    }


def cmd_verify(config, out_dir: str, threads: int, seed: int) -> int:
    spec = config.get("verify", "default")
    if spec == "default":
        spec = _default_verify_suite()
    checks = []

    def run_check(name, func):
        try:
            result = func()
        except SoftwallError as exc:
            checks.append({"check": name, "pass": False,
                           "error": f"{type(exc).__name__}: {exc}"})
        else:
            if isinstance(result, list):
                checks.extend(result)
            else:
                checks.append(result)

    if "theorem_flow" in spec:
        cfg = spec["theorem_flow"]

        def theorem_flow():
            bundle = resolve_model(cfg.get("model", config.get("model", "ssh")))
            wall = resolve_wall(cfg.get("wall", config.get("wall")), bundle)
            kernel = bundle.kernel if bundle.kind == "1d" else \
                bundle.reduced_kernel(float(cfg.get("k2", 0.0))
                                      * float(np.linalg.norm(bundle.lattice.b2)))
            out = []
            for energy in cfg.get("energies", [0.0]):
                rep = specflow.verify_theorem_flow(
                    kernel, wall, float(energy), int(cfg.get("L", 60)),
                    t_points=int(cfg.get("t_points", 121)), threads=threads,
                )
                out.append({"check": f"theorem_flow(E={energy})", **rep})
            return out

        run_check("theorem_flow", theorem_flow)

    if "density" in spec:
        cfg = spec["density"]

        def density():
            bundle = resolve_model(cfg.get("model", config.get("model", "ssh")))
            wall = resolve_wall(cfg.get("wall", config.get("wall")), bundle)
            out = []
            for t0 in cfg.get("t0s", [0.0]):
                rep = specflow.verify_density(
                    bundle.kernel, wall, float(cfg.get("E", 0.0)), float(t0),
                    int(cfg.get("L", 200)),
                    interval_length=cfg.get("interval_length"),
                    n_expected=cfg.get("n_expected"),
                )
                out.append({"check": f"density(t0={t0})", **rep})
            return out

        run_check("density", density)

    if "ring" in spec:
        cfg = spec["ring"]

        def ring():
            bundle = resolve_model(cfg.get("model", config.get("model", "ssh")))
            jac = bundle.as_jacobi()
            energy = float(cfg.get("E", 0.0))
            sigma = float(cfg.get("sigma", energy + 4 * jac.coupling_norm + 1))
            out = []
            for cells in cfg.get("ells", [20]):
                rep = dislocation.ring_flow_check(jac, sigma, energy, int(cells))
                out.append({"check": f"ring(ell={cells})", **rep})
            return out

        run_check("ring", ring)

    if "folded_fiber" in spec:
        cfg = spec["folded_fiber"]

        def folded():
            tb = lattice2d.wallace_preset()
            rng = np.random.default_rng(seed)
            out = []
            for n, m in cfg.get("cuts", [[-1, 1]]):
                cut = lattice2d.supercell_cut(tb, int(n), int(m))
                worst = 0.0
                ok = True
                for _ in range(int(cfg.get("n_k", 25))):
                    rep = lattice2d.folded_fiber_check(tb, cut, rng.uniform(-6, 6, 2))
                    worst = max(worst, rep["max_dev"])
                    ok = ok and rep["pass"]
                out.append({"check": f"folded_fiber({n},{m})", "pass": ok,
                            "max_dev": worst})
            return out

        run_check("folded_fiber", folded)

    overall = all(c.get("pass", False) for c in checks) and bool(checks)
    _write_json(os.path.join(out_dir, "verify.json"),
                {"pass": overall, "checks": checks})
    for check in checks:
        status = "PASS" if check.get("pass") else "FAIL"
        detail = check.get("error", "")
        print(f"{status}  {check['check']}" + (f"  ({detail})" if detail else ""))
    return 0 if overall else 1


COMMANDS = {
    "bands": cmd_bands,
    "edge-sweep": cmd_edge_sweep,
    "flow": cmd_flow,
    "verify": cmd_verify,
    "ring": cmd_ring,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="softwall",
        description="Soft-wall tight-binding spectra, flows, and verifications",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized verification draws")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = args.out or config.get("output", ".")
        os.makedirs(out_dir, exist_ok=True)
        return COMMANDS[args.command](config, out_dir, args.threads, args.seed)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SoftwallError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
