"""Command-line entry point.

Subcommands:

* ``solve --config FILE``  -- run one experiment from a JSON config, write
  ``<name>.report.json``, ``<name>.points.csv`` and an error-map figure.
* ``bench --preset NAME``  -- regenerate one benchmark table (console
  summary plus per-run artifacts and a trend figure).
* ``presets``              -- list the available presets.

Exit codes: 0 success, 1 configuration error, 2 solver failure.  The
``LEVI_THREADS`` environment variable caps the linear-algebra thread pool
(read at package import).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bench
from .linalg import SingularSystemError
from .problems import available_problems

_KNOWN_KEYS = {
    "problem",
    "method",
    "N",
    "k1",
    "boundary_n",
    "internal_nodes",
    "sphere_n",
    "eval_grid",
    "name",
}

_METHOD_DIM = {"ads": 2, "drm": 2, "drm3d": 3}
_PROBLEM_DIM = {"heart": 2, "ellipse": 2, "pinched_ball": 3}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated experiment configuration with defaults filled in."""

    problem: str
    method: str
    params: dict = field(default_factory=dict)
    name: str = ""

    def as_dict(self):
        return {"problem": self.problem, "method": self.method, **self.params}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON experiment configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    problem = raw.get("problem")
    if problem not in available_problems():
        raise ConfigError(
            f"unknown problem {problem!r}; registered: {available_problems()}"
        )
    method = raw.get("method")
    if method not in _METHOD_DIM:
        raise ConfigError(f"method must be one of {sorted(_METHOD_DIM)}")
    pdim = _PROBLEM_DIM.get(problem, 2)
    if pdim != _METHOD_DIM[method]:
        raise ConfigError(
            f"dimension mismatch: problem {problem!r} is {pdim}D but method "
            f"{method!r} expects {_METHOD_DIM[method]}D"
        )

    params: dict = {}
    if method == "ads":
        params["N"] = int(raw.get("N", 10))
        params["k1"] = int(raw.get("k1", 3))
        if params["N"] < 2 or params["k1"] < 0:
            raise ConfigError("ads resolution must satisfy N >= 2, k1 >= 0")
        bad = sorted(
            k for k in ("boundary_n", "internal_nodes", "sphere_n", "eval_grid") if k in raw
        )
        if bad:
            raise ConfigError(f"keys not valid for method 'ads': {', '.join(bad)}")
    elif method == "drm":
        params["boundary_n"] = int(raw.get("boundary_n", 256))
        params["internal_nodes"] = raw.get("internal_nodes", 200)
        if params["boundary_n"] < 1:
            raise ConfigError("boundary_n must be positive")
        bad = sorted(k for k in ("N", "k1", "sphere_n", "eval_grid") if k in raw)
        if bad:
            raise ConfigError(f"keys not valid for method 'drm': {', '.join(bad)}")
    else:
        params["sphere_n"] = int(raw.get("sphere_n", 16))
        params["internal_nodes"] = raw.get("internal_nodes", 136)
        if "eval_grid" in raw:
            params["eval_grid"] = int(raw["eval_grid"])
        if params["sphere_n"] < 2:
            raise ConfigError("sphere_n must be >= 2")
        bad = sorted(k for k in ("N", "k1", "boundary_n") if k in raw)
        if bad:
            raise ConfigError(f"keys not valid for method 'drm3d': {', '.join(bad)}")
    nodes = params.get("internal_nodes")
    if isinstance(nodes, str) and not nodes.startswith("file:"):
        raise ConfigError("internal_nodes must be an integer or 'file:<path>'")
    if not isinstance(nodes, str) and nodes is not None and int(nodes) < 1:
        raise ConfigError("internal_nodes must be positive")

    name = raw.get("name") or f"{problem}_{method}"
    return RunConfig(problem=problem, method=method, params=params, name=str(name))


def _write_outputs(report, table, name, outdir: Path, figures: bool):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{name}.report.json").write_text(bench.report_to_json(report))
    (outdir / f"{name}.points.csv").write_text(bench.points_to_csv(table))
    if figures:
        from .figures import render_error_map

        render_error_map(
            table,
            f"{report.problem} / {report.method}",
            outdir / f"{name}.error_map.png",
        )


def _summary_line(report):
    parts = [f"{report.problem:12s} {report.method:5s}"]
    cfg = report.config
    if report.method == "ads":
        parts.append(f"N={cfg.get('N')} k1={cfg.get('k1')}")
        parts.append(f"Err_A={report.err_avg:.4e}")
        for layer in (2, 7, 12, 17):
            if layer in report.err_local:
                parts.append(f"L{layer}={report.err_local[layer]:.3e}")
    else:
        if report.method == "drm3d":
            parts.append(f"N={cfg.get('sphere_n')}")
        parts.append(f"M={cfg.get('internal_nodes')}")
        parts.append(f"Err_m={report.err_mean_abs:.4e}")
        parts.append(f"Err_s={report.err_rms_rel:.4e}")
    parts.append(f"n={report.node_counts.get('unknowns')}")
    parts.append(f"t={report.wall_time:.2f}s")
    return "  ".join(parts)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="levisolve",
        description="Integral-equation solver for -div(sigma grad u) = F with "
        "Dirichlet data on star-shaped domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one experiment from a JSON config")
    p_solve.add_argument("--config", required=True, help="path to the JSON config file")
    p_solve.add_argument("--output-dir", default=".", help="directory for output files")
    p_solve.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p_bench = sub.add_parser("bench", help="regenerate one benchmark table")
    p_bench.add_argument("--preset", required=True, help="preset name (see 'presets')")
    p_bench.add_argument("--output-dir", default=".", help="directory for output files")
    p_bench.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_bench.add_argument(
        "--jobs", type=int, default=1, help="run independent configurations concurrently"
    )

    sub.add_parser("presets", help="list available benchmark presets")

    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in sorted(bench.PRESETS):
            runs = bench.PRESETS[name]
            print(f"{name:10s} {len(runs)} run(s): {runs[0]['problem']} / {runs[0]['method']}")
        return 0

    if args.command == "solve":
        try:
            cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        try:
            report, table = bench.run_experiment(cfg)
        except SingularSystemError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return 2
        _write_outputs(report, table, cfg.name, Path(args.output_dir), not args.no_figures)
        print(_summary_line(report))
        return 0

    if args.command == "bench":
        if args.preset not in bench.PRESETS:
            print(
                f"error: unknown preset {args.preset!r}; valid presets: "
                f"{', '.join(sorted(bench.PRESETS))}",
                file=sys.stderr,
            )
            return 1
        outdir = Path(args.output_dir)
        reports = []
        try:
            for i, (report, table) in enumerate(bench.run_preset(args.preset, jobs=args.jobs)):
                reports.append(report)
                _write_outputs(
                    report, table, f"{args.preset}_{i}", outdir, not args.no_figures
                )
                print(_summary_line(report))
        except SingularSystemError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return 2
        if not args.no_figures and reports:
            from .figures import render_preset_trend

            render_preset_trend(reports, args.preset, outdir / f"{args.preset}.trend.png")
        return 0

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
