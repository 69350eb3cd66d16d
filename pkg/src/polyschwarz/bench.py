"""Benchmark runner: assemble, precondition, solve, and record one experiment.

Single runs write ``<prefix>.residuals.csv`` (relative residual per
iteration) and ``<prefix>.summary.json`` (validated against the schema
shipped in ``schemas/``).  Sweeps aggregate per-run rows plus a scalability
table that groups runs sharing (element, H/h, overlap layers) and lists the
condition estimate across mesh sizes.

The module doubles as the ``polyschwarz-bench`` command-line tool.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import importlib.resources
import json
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from .assembly import assemble_c0ip_edges, assemble_load, assemble_stiffness, build_dofmap, interpolate
from .coarse import build_coarse_space
from .elements import FAMILIES, FAMILY_M, build_element
from .geometry import build_decomposition, build_mesh
from .krylov import PcgReport, pcg
from .manufactured import manufactured_solution
from .schwarz import LEVELS, AdditiveSchwarz, build_local_spaces

__all__ = ["ConfigError", "ExperimentConfig", "RunResult", "run", "run_matrix", "main"]

DEFAULT_ETA = 5.0
RHS_CHOICES = ("manufactured-m2", "manufactured-m3", "ones")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the constraint."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: discretization, decomposition, solver settings."""

    element: str
    h_exp: int
    H_exp: int
    overlap_layers: int = 1
    eta: float | None = None
    precond: str = "two-level"
    tol: float = 1e-8
    max_iters: int = 2000
    rhs: str | None = None
    output: str | None = None
    check_error: bool = False

    @property
    def m(self) -> int:
        return FAMILY_M[self.element]

    @property
    def h(self) -> float:
        return 2.0**-self.h_exp

    @property
    def H(self) -> float:
        return 2.0**-self.H_exp

    @property
    def delta(self) -> float:
        return self.overlap_layers * self.h

    def resolved_rhs(self) -> str:
        return self.rhs or f"manufactured-m{self.m}"

    def resolved_eta(self) -> float | None:
        if self.element != "c0ip":
            return None
        return DEFAULT_ETA if self.eta is None else self.eta

    def resolved_output(self) -> str:
        if self.output:
            return self.output
        return (
            f"{self.element}_h{self.h_exp}_H{self.H_exp}"
            f"_l{self.overlap_layers}_{self.precond}"
        )

    def validate(self) -> "ExperimentConfig":
        if self.element not in FAMILIES:
            raise ConfigError(f"element must be one of {FAMILIES}, got {self.element!r}")
        if self.precond not in LEVELS:
            raise ConfigError(f"precond must be one of {LEVELS}, got {self.precond!r}")
        if not (isinstance(self.h_exp, int) and isinstance(self.H_exp, int)):
            raise ConfigError("h_exp and H_exp must be integers")
        if self.H_exp < 1:
            raise ConfigError(f"H_exp must be >= 1 (H < 1), got {self.H_exp}")
        if self.h_exp <= self.H_exp:
            raise ConfigError(
                f"h must divide H strictly: need h_exp > H_exp, got "
                f"h_exp={self.h_exp}, H_exp={self.H_exp}"
            )
        ratio = 2 ** (self.h_exp - self.H_exp)
        if not 1 <= self.overlap_layers < ratio:
            raise ConfigError(
                f"overlap must satisfy overlap_layers*h < H: need "
                f"1 <= overlap_layers < {ratio}, got {self.overlap_layers}"
            )
        if self.eta is not None and self.element != "c0ip":
            raise ConfigError(f"eta applies to c0ip only, not {self.element!r}")
        if self.eta is not None and self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        rhs = self.resolved_rhs()
        if rhs not in RHS_CHOICES:
            raise ConfigError(f"rhs must be one of {RHS_CHOICES}, got {rhs!r}")
        if rhs == "manufactured-m2" and self.m != 2:
            raise ConfigError(f"rhs manufactured-m2 requires an m=2 element, got {self.element!r}")
        if rhs == "manufactured-m3" and self.m != 3:
            raise ConfigError(f"rhs manufactured-m3 requires the m=3 element, got {self.element!r}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.check_error and rhs == "ones":
            raise ConfigError("check_error needs a manufactured rhs with a known solution")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunResult:
    config: ExperimentConfig
    summary: dict
    report: PcgReport
    residuals_path: Path
    summary_path: Path


def load_schema() -> dict:
    ref = importlib.resources.files("polyschwarz") / "schemas" / "summary.schema.json"
    return json.loads(ref.read_text())


def _build_system(config: ExperimentConfig):
    mesh = build_mesh(2**config.h_exp)
    elem = build_element(config.element)
    dofmap = build_dofmap(mesh, config.element)
    A = assemble_stiffness(mesh, elem, dofmap)
    if config.element == "c0ip":
        A = (A + assemble_c0ip_edges(mesh, elem, dofmap, config.resolved_eta())).tocsr()
    rhs = config.resolved_rhs()
    if rhs == "ones":
        f = lambda x, y: np.ones_like(np.asarray(x, dtype=float))
        solution = None
    else:
        solution = manufactured_solution(config.m)
        f = solution.rhs
    b = assemble_load(mesh, elem, dofmap, f)
    return mesh, elem, dofmap, A, b, solution


def _build_preconditioner(config: ExperimentConfig, mesh, dofmap, A):
    """Returns (preconditioner, n_subdomains, coarse_dim, setup_seconds)."""
    t0 = time.perf_counter()
    if config.precond == "none":
        M = AdditiveSchwarz("none", dofmap.free_count)
        return M, 0, 0, time.perf_counter() - t0
    coarse_mesh = build_mesh(2**config.H_exp)
    decomp = build_decomposition(coarse_mesh, mesh, config.overlap_layers)
    locals_ = build_local_spaces(decomp, dofmap, A)
    if config.precond == "one-level":
        M = AdditiveSchwarz("one-level", dofmap.free_count, tuple(locals_))
        return M, decomp.n_subdomains, 0, time.perf_counter() - t0
    coarse = build_coarse_space(coarse_mesh, config.m, dofmap, A)
    M = AdditiveSchwarz("two-level", dofmap.free_count, tuple(locals_), coarse)
    return M, decomp.n_subdomains, coarse.dim, time.perf_counter() - t0


def run(config: ExperimentConfig) -> RunResult:
    """Execute one experiment and write its residual history and summary."""
    config.validate()
    mesh, elem, dofmap, A, b, solution = _build_system(config)
    M, n_sub, coarse_dim, setup_seconds = _build_preconditioner(config, mesh, dofmap, A)

    t0 = time.perf_counter()
    report = pcg(A, M, b, tol=config.tol, max_iters=config.max_iters)
    solve_seconds = time.perf_counter() - t0

    summary = {
        "element": config.element,
        "m": config.m,
        "h": config.h,
        "H": config.H,
        "delta": config.delta,
        "precond": config.precond,
        "dofs": int(dofmap.free_count),
        "subdomains": n_sub,
        "coarse_dim": coarse_dim,
        "iterations": report.iterations,
        "converged": bool(report.converged),
        "kappa_estimate": float(report.kappa_estimate),
        "setup_seconds": setup_seconds,
        "solve_seconds": solve_seconds,
    }
    if config.element == "c0ip":
        summary["eta"] = config.resolved_eta()
    if config.check_error:
        e = report.solution - interpolate(dofmap, solution)
        summary["energy_error"] = float(np.sqrt(e @ (A @ e)))
    jsonschema.validate(summary, load_schema())

    prefix = Path(config.resolved_output())
    prefix.parent.mkdir(parents=True, exist_ok=True)
    residuals_path = prefix.with_name(prefix.name + ".residuals.csv")
    with open(residuals_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,relres\n")
        for i, rel in enumerate(report.relative_residuals):
            fh.write(f"{i},{rel:.16e}\n")
    summary_path = prefix.with_name(prefix.name + ".summary.json")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return RunResult(config, summary, report, residuals_path, summary_path)


def run_matrix(configs: list[ExperimentConfig], workers: int = 1) -> dict:
    """Run a sweep; failures are recorded per row instead of aborting.

    All configs must share one output directory, where the aggregated table
    is written as ``matrix_summary.json``.  Returns the table:
    ``{"rows": [...], "scalability": [...], "failed": int}``.
    """
    if not configs:
        return {"rows": [], "scalability": [], "failed": 0}

    out_dirs = {str(Path(c.resolved_output()).parent) for c in configs}
    if len(out_dirs) > 1:
        raise ConfigError(f"sweep configs must share an output directory, got {sorted(out_dirs)}")

    def one(config: ExperimentConfig) -> dict:
        try:
            result = run(config)
            return {"output": config.resolved_output(), "status": "ok", "summary": result.summary}
        except Exception as exc:  # error isolation: record, keep sweeping
            return {"output": config.resolved_output(), "status": "failed", "error": f"{type(exc).__name__}: {exc}"}

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, configs))
    else:
        rows = [one(c) for c in configs]

    groups: dict[tuple, list] = {}
    for config, row in zip(configs, rows):
        if row["status"] != "ok":
            continue
        key = (config.element, 2 ** (config.h_exp - config.H_exp), config.overlap_layers)
        groups.setdefault(key, []).append(
            {
                "h": config.h,
                "precond": config.precond,
                "kappa_estimate": row["summary"]["kappa_estimate"],
                "iterations": row["summary"]["iterations"],
            }
        )
    scalability = [
        {
            "element": element,
            "cells_per_subdomain": ratio,
            "overlap_layers": layers,
            "runs": sorted(runs, key=lambda r: -r["h"]),
        }
        for (element, ratio, layers), runs in sorted(groups.items())
    ]
    table = {"rows": rows, "scalability": scalability,
             "failed": sum(r["status"] != "ok" for r in rows)}

    out_dir = Path(out_dirs.pop())
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "matrix_summary.json", "w", encoding="utf-8") as fh:
        json.dump(table, fh, indent=2)
        fh.write("\n")
    return table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyschwarz-bench",
        description="Preconditioned CG benchmarks for fourth/sixth-order "
        "discretizations with overlapping Schwarz preconditioners.",
    )
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its fields")
    parser.add_argument("--sweep", type=Path, help="JSON file with a list of run configs")
    parser.add_argument("--element", choices=FAMILIES)
    parser.add_argument("--h-exp", type=int, dest="h_exp", help="fine mesh size h = 2^-a")
    parser.add_argument("--H-exp", type=int, dest="H_exp", help="coarse mesh size H = 2^-b")
    parser.add_argument("--overlap-layers", type=int, dest="overlap_layers",
                        help="overlap delta in fine-cell layers")
    parser.add_argument("--eta", type=float, help="interior penalty parameter (c0ip)")
    parser.add_argument("--precond", choices=LEVELS)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iters", type=int, dest="max_iters")
    parser.add_argument("--rhs", choices=RHS_CHOICES)
    parser.add_argument("--output", help="output path prefix")
    parser.add_argument("--check-error", action="store_true", dest="check_error",
                        default=None, help="report the energy-norm error vs the exact solution's interpolant")
    parser.add_argument("--threads", type=int, default=1, help="concurrent runs in a sweep")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        data.update(json.loads(Path(args.config).read_text()))
    for key in ("element", "h_exp", "H_exp", "overlap_layers", "eta", "precond",
                "tol", "max_iters", "rhs", "output", "check_error"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    for required in ("element", "h_exp", "H_exp"):
        if required not in data:
            raise ConfigError(f"missing required setting {required!r} (flag or config file)")
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.sweep is not None:
            raw = json.loads(Path(args.sweep).read_text())
            configs = [ExperimentConfig.from_dict(d).validate() for d in raw]
            table = run_matrix(configs, workers=max(1, args.threads))
            for row in table["rows"]:
                status = row["status"]
                tail = (
                    f"iters={row['summary']['iterations']} kappa={row['summary']['kappa_estimate']:.3g}"
                    if status == "ok"
                    else row["error"]
                )
                print(f"{row['output']}: {status} {tail}")
            return 1 if table["failed"] else 0
        result = run(_config_from_args(args))
        s = result.summary
        print(
            f"{s['element']} h={s['h']:g} H={s['H']:g} delta={s['delta']:g} "
            f"{s['precond']}: iters={s['iterations']} converged={s['converged']} "
            f"kappa~{s['kappa_estimate']:.4g}"
        )
        return 0 if result.report.converged else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
