"""Command line driver.

    plate-junction example1 --levels 1..4 --out runs/ex1
    plate-junction example2 --levels 1..5 --solver iterative
    plate-junction selftest

A JSON config file (``--config``) may carry any of the option names below;
flags given on the command line win.
"""

import argparse
import csv
import json
import logging
import math
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import PlateJunctionError, SolveError
from .experiments import (
    EX1_MATERIAL,
    EX1_REFERENCE,
    EX2_MATERIAL,
    EX2_REFERENCE,
    ERROR_NAMES,
    PROBE_X,
    ConvergenceReport,
    ExactSolution,
    MaterialLaw,
    RoofGeometry,
    example1_exact,
    run_convergence,
    run_example2,
)

log = logging.getLogger("plate_junction")

EXPERIMENTS = ("example1", "example2", "selftest")
PLATES = ("S", "St")


class ConfigError(ValueError):
    pass


def parse_levels(text):
    """'a..b', 'a-b', 'a,b,c' or a single integer -> sorted list of levels."""
    if isinstance(text, (list, tuple)):
        levels = [int(v) for v in text]
    else:
        t = str(text).strip()
        try:
            if ".." in t or "-" in t:
                a, b = t.replace("..", "-").split("-")
                levels = list(range(int(a), int(b) + 1))
            else:
                levels = [int(v) for v in t.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse levels {text!r}") from None
    if not levels or min(levels) < 1:
        raise ConfigError(f"levels must be >= 1, got {text!r}")
    return sorted(set(levels))


@dataclass
class RunConfig:
    experiment: str = "example1"
    levels: list = field(default_factory=lambda: [1, 2, 3])
    solver: str = "direct"
    out: str = "out"
    theta: float = None
    E: float = None
    nu: float = None
    e: float = None
    n_subdiv: int = None
    assembly_order: int = 8
    error_order: int = 12
    constraint_mode: str = "eliminate"
    infsup: bool = False

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        self.levels = parse_levels(self.levels)
        if self.solver not in ("direct", "iterative"):
            raise ConfigError(f"solver must be 'direct' or 'iterative', got {self.solver!r}")
        if self.theta is not None and not 0.0 < self.theta < math.pi:
            raise ConfigError(f"theta must lie in (0, pi), got {self.theta}")
        if self.constraint_mode != "eliminate":
            raise ConfigError("only constraint_mode 'eliminate' is implemented")
        if self.assembly_order < 8:
            raise ConfigError("assembly_order must be at least 8")
        if self.error_order < 8:
            raise ConfigError("error_order must be at least 8")
        return self

    def material(self, default):
        return MaterialLaw(
            E=default.E if self.E is None else self.E,
            nu=default.nu if self.nu is None else self.nu,
            e=default.e if self.e is None else self.e,
        )


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_parser():
    p = argparse.ArgumentParser(prog="plate-junction", description="Mixed FEM for two rigidly joined plates.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--levels", help="refinement levels, e.g. 1..4")
    p.add_argument("--theta", type=float, help="junction angle in radians")
    p.add_argument("--solver", choices=("direct", "iterative"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--n-subdiv", type=int, dest="n_subdiv", help="grid cells per unit on level 1")
    p.add_argument("--E", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--e", type=float, help="plate thickness")
    p.add_argument("--infsup", action="store_true", default=None, help="measure beta_h on small levels")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def make_config(args):
    data = load_config(args.config) if args.config else {}
    for key in ("experiment", "levels", "theta", "solver", "out", "n_subdiv", "E", "nu", "e", "infsup"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if "experiment" not in data:
        raise ConfigError("no experiment given")
    return RunConfig(**data).validate()


# ---------------------------------------------------------------- output


def _fmt(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return f"{v:.6e}"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def example1_tables(report: ConvergenceReport):
    """CSV rows and a markdown table with the reference orders alongside."""
    header = ["level", "n_triangles", "n_unknowns"]
    for pl in PLATES:
        for name in ERROR_NAMES:
            header += [f"{pl}_{name}", f"{pl}_{name}_order"]
    rows = []
    orders = {(p, n): report.orders(p, n) for p in range(2) for n in ERROR_NAMES}
    for i, r in enumerate(report.results):
        row = [str(r.level), str(r.n_triangles), str(r.n_unknowns)]
        for p in range(2):
            for name in ERROR_NAMES:
                row += [_fmt(r.errors[p][name]), _fmt(orders[(p, name)][i])]
        rows.append(row)

    md = ["# Example 1 convergence", ""]
    md.append("The ref columns hold literature orders for the same manufactured solution.")
    md.append("Their level-1 mesh differs from ours, so orders are comparable and raw errors are not.")
    for p, pl in enumerate(PLATES):
        md += ["", f"## plate {pl}", ""]
        cols = []
        for name in ERROR_NAMES:
            cols += [name, "order", "ref order"]
        md.append("| level | " + " | ".join(cols) + " |")
        md.append("|" + "---|" * (1 + len(cols)))
        for i, r in enumerate(report.results):
            cells = []
            for name in ERROR_NAMES:
                ref = EX1_REFERENCE[p][name]
                ref_order = ref[r.level - 1][1] if r.level <= len(ref) else None
                o = orders[(p, name)][i]
                cells += [
                    f"{r.errors[p][name]:.6e}",
                    "-" if not math.isfinite(o) else f"{o:.2f}",
                    "-" if ref_order is None else f"{ref_order:.2f}",
                ]
            md.append(f"| {r.level} | " + " | ".join(cells) + " |")
    return header, rows, "\n".join(md) + "\n"


def example2_tables(results):
    names = list(PROBE_X)
    header = ["level", "n_triangles", "n_unknowns"] + [f"Z_{k}" for k in names] + ["reaction_Z"]
    header += [f"ref_Z_{k}" for k in names]
    rows, md = [], ["# Example 2 displacements", ""]
    md.append(f"Z displacement (global axis) at the probes. Reference converged value {EX2_REFERENCE['converged']:.4e}.")
    md.append("")
    md.append("| level | " + " | ".join(f"Z_{k}" for k in names) + " | reaction | " + " | ".join(f"ref {k}" for k in names) + " |")
    md.append("|" + "---|" * (2 + 2 * len(names)))
    for r in results:
        ref = EX2_REFERENCE["levels"].get(r.level, (None,) * len(names))
        z = [r.probes[k] for k in names]
        rows.append([str(r.level), str(r.n_triangles), str(r.n_unknowns)] + [_fmt(v) for v in z] + [_fmt(r.diagnostics["reaction_Z"])] + [_fmt(v) for v in ref])
        md.append(
            f"| {r.level} | "
            + " | ".join(f"{v:.6e}" for v in z)
            + f" | {r.diagnostics['reaction_Z']:.6f} | "
            + " | ".join("-" if v is None else f"{v:.5e}" for v in ref)
            + " |"
        )
    return header, rows, "\n".join(md) + "\n"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _level_diagnostics(results):
    keep = ("solver", "n_reduced", "n_masters", "relative_residual", "full_relative_residual", "constraint_residual", "reaction_Z", "beta_h", "solve_seconds", "total_seconds")
    return [{"level": r.level, **{k: r.diagnostics[k] for k in keep if k in r.diagnostics}} for r in results]


# ---------------------------------------------------------------- experiments


def _run_example1(cfg, out):
    exact = example1_exact(cfg.material(EX1_MATERIAL))
    if cfg.theta is not None:
        exact = ExactSolution(exact.plates, cfg.theta)
    report = run_convergence(
        cfg.levels,
        solver=cfg.solver,
        n_subdiv=cfg.n_subdiv or 2,
        exact=exact,
        orders=(cfg.assembly_order, cfg.error_order),
        infsup=cfg.infsup,
        callback=lambda r: log.info("level %d done in %.1f s", r.level, r.diagnostics["total_seconds"]),
    )
    header, rows, md = example1_tables(report)
    return header, rows, md, _level_diagnostics(report.results)


def _run_example2(cfg, out):
    geom = RoofGeometry() if cfg.theta is None else RoofGeometry(alpha=0.5 * (math.pi - cfg.theta))
    results = run_example2(
        cfg.levels,
        solver=cfg.solver,
        n_subdiv=cfg.n_subdiv or 3,
        geom=geom,
        material=cfg.material(EX2_MATERIAL),
        orders=(cfg.assembly_order, cfg.error_order),
        infsup=cfg.infsup,
        callback=lambda r: log.info("level %d done in %.1f s", r.level, r.diagnostics["total_seconds"]),
    )
    header, rows, md = example2_tables(results)
    return header, rows, md, _level_diagnostics(results)


def _run_selftest(cfg, out):
    from .selftest import run_all

    checks = run_all()
    header = ["check", "value", "tolerance", "passed"]
    rows, md = [], ["# Self-test", "", "| check | value | tolerance | passed |", "|---|---|---|---|"]
    diag = []
    for name, (value, tol) in checks.items():
        ok = value <= tol
        rows.append([name, _fmt(value), _fmt(tol), str(ok).lower()])
        md.append(f"| {name} | {value:.3e} | {tol:.1e} | {'yes' if ok else 'NO'} |")
        diag.append({"check": name, "value": value, "tolerance": tol, "passed": ok})
    return header, rows, "\n".join(md) + "\n", diag


RUNNERS = {"example1": _run_example1, "example2": _run_example2, "selftest": _run_selftest}


def run(cfg: RunConfig):
    """Run one experiment and write convergence.csv / .md and diagnostics.json.

    Returns the process exit status.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": asdict(cfg), "python": platform.python_version(), "numpy": np.__version__}
    try:
        header, rows, md, diag = RUNNERS[cfg.experiment](cfg, out)
    except SolveError as exc:
        write_json(out / "diagnostics.json", {**meta, "status": "solver failure", "error": str(exc)})
        log.error("solver failure: %s", exc)
        return 3
    except PlateJunctionError as exc:
        write_json(out / "diagnostics.json", {**meta, "status": "error", "error": str(exc)})
        log.error("%s", exc)
        return 2
    _write_csv(out / "convergence.csv", header, rows)
    (out / "convergence.md").write_text(md)
    failed = cfg.experiment == "selftest" and not all(d["passed"] for d in diag)
    write_json(out / "diagnostics.json", {**meta, "status": "failed checks" if failed else "ok", "levels": diag})
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"plate-junction: {exc}", file=sys.stderr)
        return 2
    status = run(cfg)
    print(Path(cfg.out) / "convergence.md")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
