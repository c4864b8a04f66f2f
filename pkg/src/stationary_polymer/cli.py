"""Command-line front end.

Exit status: 0 when every requested suite passes, 1 when a suite fails, 2 on
usage errors. Settings are resolved as defaults < config file < environment
(``POLYMER_OUT_DIR``, ``POLYMER_THREADS``) < command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ensemble import (Check, EnsembleSummary, RunConfig, fit_exponents, run_ensemble, verify_burke,
                       verify_comparison, verify_convexity, verify_cumulant_formula, verify_gibbs_bounds,
                       verify_ibp, verify_mean, verify_quenched_cumulant_means, verify_variance_identity,
                       _jsonable)

COMMANDS = ("simulate", "verify-burke", "verify-mean", "verify-variance", "verify-ibp", "verify-cumulants",
            "verify-comparison", "exponents", "all")

# default pass bands for the exponent fits; the limits are pre-asymptotic
EXPONENT_BANDS = {
    "var_log_z": (0.55, 0.80),
    "annealed_abs_s0": (0.50, 0.85),
    "central_abs_4": (None, 1.55),
}

SUMMARY_FIELDS = ("config", "config_hash", "t", "tau", "t_left", "dt", "nodes", "samples", "degenerate",
                  "cumulants", "ladder", "checks")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stationary-polymer",
                                description="Simulate the stationary semi-discrete polymer and check its identities.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value file supplying any flag")
    p.add_argument("--theta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--n-list", type=_int_list)
    p.add_argument("--t", type=float)
    p.add_argument("--characteristic", action="store_true", default=None)
    p.add_argument("--A", type=float)
    p.add_argument("--t-offset", type=float, help="shift of the characteristic horizon")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-left", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--kmax", type=int)
    p.add_argument("--k", type=int, help="cumulant order for verify-cumulants (2, 3 or 4)")
    p.add_argument("--theta-list", type=_float_list)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--rule", choices=("trapezoid", "rectangle"))
    p.add_argument("--ladder-samples", type=int)
    p.add_argument("--no-burke-columns", action="store_true", default=None)
    p.add_argument("--out-dir")
    p.add_argument("--format", choices=("csv", "json"))
    return p


_CASTS = {
    "theta": float, "n": int, "n_list": _int_list, "t": float, "A": float, "t_offset": float, "dt": float,
    "t_left": float, "samples": int, "seed": int, "tau": float, "kmax": int, "k": int,
    "theta_list": _float_list, "bootstrap": int, "threads": int, "rule": str, "ladder_samples": int,
    "out_dir": str, "format": str,
    "characteristic": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "no_burke_columns": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
}

_DEFAULTS = {"theta": 1.0, "n": 8, "A": 2.0, "t_offset": 0.0, "dt": 0.01, "samples": 2000, "seed": 7, "kmax": 6,
             "bootstrap": 1000, "threads": 1, "rule": "trapezoid", "ladder_samples": 200, "out_dir": "out",
             "format": "csv", "k": None, "characteristic": None, "no_burke_columns": False}


def resolve_settings(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    settings = dict(_DEFAULTS)
    if args.config:
        try:
            file_values = read_config_file(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        for key, value in file_values.items():
            if key not in _CASTS:
                raise UsageError(f"unknown config key {key!r}")
            try:
                settings[key] = _CASTS[key](value)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {value!r}") from exc
    if environ.get("POLYMER_OUT_DIR"):
        settings["out_dir"] = environ["POLYMER_OUT_DIR"]
    if environ.get("POLYMER_THREADS"):
        settings["threads"] = int(environ["POLYMER_THREADS"])
    for key in _CASTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def config_from_settings(settings: dict, n: int | None = None) -> RunConfig:
    if settings.get("t") is not None and settings.get("characteristic"):
        raise UsageError("--t and --characteristic are mutually exclusive")
    try:
        cfg = RunConfig(
            theta=settings["theta"], n=settings["n"] if n is None else n, t=settings.get("t"),
            A=settings["A"], t_offset=settings["t_offset"], dt=settings["dt"], t_left=settings.get("t_left"),
            samples=settings["samples"], seed=settings["seed"], tau=settings.get("tau"), kmax=settings["kmax"],
            bootstrap=settings["bootstrap"], threads=settings["threads"],
            theta_list=tuple(settings.get("theta_list") or ()), rule=settings["rule"],
            ladder_samples=settings["ladder_samples"],
        )
        cfg.truncation(cfg.grid())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# output files


def sample_columns(summary: EnsembleSummary, burke_columns: bool = True) -> tuple[list[str], np.ndarray]:
    """Header and row matrix of the per-sample table (stable column order)."""
    c = summary.columns
    cfg = summary.config
    k = cfg.kmax
    names: list[str] = ["sample_index", "log_z"]
    blocks = [c["sample_index"][:, None].astype(float), c["log_z"][:, None]]
    if burke_columns and cfg.n >= 1:
        names += [f"r_{j}" for j in range(1, cfg.n + 1)]
        blocks.append(c["burke"])
    scalar = [("E_s0", "mean_s0"), ("E_s0_plus", "mean_plus"), ("E_s0_minus", "mean_minus"),
              ("E_abs_s0", "mean_abs"), ("var_s0", "var_s0"), ("var_s0_plus", "var_plus"),
              ("var_s0_minus", "var_minus")]
    for label, key in scalar:
        names.append(label)
        blocks.append(c[key][:, None])
    for label, key in (("kappa_s0", "cumulants_s0"), ("kappa_plus", "cumulants_plus"),
                       ("kappa_trunc", "cumulants_trunc")):
        names += [f"{label}_{j}" for j in range(1, k + 1)]
        blocks.append(c[key])
    names += ["B0_t", "B0_tau"]
    blocks += [c["b0_t"][:, None], c["b0_tau"][:, None]]
    names += [f"H_t_{b}" for b in range(k + 1)] + [f"H_tau_{b}" for b in range(k + 1)]
    blocks += [c["hermite_t"], c["hermite_tau"]]
    m = len(cfg.theta_list)
    names += [f"log_z_theta_{lam:g}" for lam in cfg.theta_list]
    blocks.append(c["extra_log_z"][:, :m])
    names.append("fb_gap")
    blocks.append(c["fb_gap"][:, None])
    return names, np.hstack([np.asarray(b, dtype=float).reshape(len(c["log_z"]), -1) for b in blocks])


def _cell(name: str, v: float) -> str:
    if name == "sample_index":
        return str(int(v))
    return repr(float(v))


def write_samples(summary: EnsembleSummary, path: Path, fmt: str = "csv", burke_columns: bool = True) -> dict:
    names, rows = sample_columns(summary, burke_columns)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in rows:
                w.writerow([_cell(nm, v) for nm, v in zip(names, row)])
    else:
        data = [{nm: (int(v) if nm == "sample_index" else _jsonable(float(v))) for nm, v in zip(names, row)}
                for row in rows]
        path.write_text(json.dumps({"columns": names, "rows": data}, indent=1) + "\n")
    return {"rows": int(rows.shape[0]), "fields": len(names)}


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_manifest(out_dir: Path, settings: dict, command: str, files: dict, suites: dict, wall: float,
                   extra: dict) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in settings.items()},
        "files": files,
        "suites": suites,
        "versions": {"stationary_polymer": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time_s": wall,
    }
    manifest.update(extra)
    _dump(manifest, out_dir / "manifest.json")


# ---------------------------------------------------------------------------
# command dispatch


def _suite_checks(command: str, summary: EnsembleSummary, k: int | None) -> list[Check]:
    if command == "verify-mean":
        return [verify_mean(summary)]
    if command == "verify-burke":
        return [verify_burke(summary)]
    if command == "verify-variance":
        return [verify_variance_identity(summary)]
    if command == "verify-ibp":
        return list(verify_ibp(summary).values())
    if command == "verify-cumulants":
        return [verify_cumulant_formula(summary, k)]
    if command == "verify-comparison":
        return list(verify_comparison(summary).values())
    if command == "all":
        checks = [verify_mean(summary), verify_burke(summary)]
        if summary.config.n >= 1:
            checks.append(verify_variance_identity(summary))
            checks += list(verify_ibp(summary).values())
            checks += [verify_cumulant_formula(summary, kk) for kk in (2, 3, 4)]
            checks += list(verify_quenched_cumulant_means(summary).values())
            checks += [verify_gibbs_bounds(summary), verify_convexity(summary)]
            checks += list(verify_comparison(summary).values())
        return checks
    return []


def _run_exponents(settings: dict, out_dir: Path) -> tuple[dict, dict, dict, bool]:
    n_list = settings.get("n_list")
    if not n_list or len(n_list) < 4:
        raise UsageError("exponents needs --n-list with at least 4 values")
    if settings.get("t") is not None:
        raise UsageError("exponents uses the characteristic horizon; drop --t")
    summaries = []
    files = {}
    for n in n_list:
        cfg = config_from_settings({**settings, "ladder_samples": 0}, n=n)
        s = run_ensemble(cfg)
        summaries.append(s)
        name = f"samples_n{n}.{settings['format']}"
        files[name] = write_samples(s, out_dir / name, settings["format"], not settings["no_burke_columns"])
    fits = fit_exponents(summaries)
    passes = {}
    for name, (lo, hi) in EXPONENT_BANDS.items():
        slope = fits[name].slope
        passes[name] = bool((lo is None or slope >= lo) and (hi is None or slope <= hi))
    for p in (1, 2, 3, 4):
        key = f"annealed_abs_s0_pow{p}"
        if key in fits:
            passes[f"a_priori_pow{p}"] = bool(fits[key].slope <= p + 0.1)
    summary = {
        "n_list": n_list,
        "t": {str(s.config.n): s.t for s in summaries},
        "fits": {k: f.to_dict() for k, f in fits.items()},
        "bands": {k: list(v) for k, v in EXPONENT_BANDS.items()},
        "pass": passes,
    }
    return summary, files, {"exponents": all(passes.values())}, all(passes.values())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.time()
    try:
        settings = resolve_settings(args)
        if args.command == "verify-cumulants" and settings.get("k") not in (2, 3, 4):
            raise UsageError("verify-cumulants needs --k 2, 3 or 4")
        if args.command != "exponents" and settings.get("n_list"):
            raise UsageError("--n-list is only valid with the exponents command")
        if args.command in ("verify-comparison", "all") and not settings.get("theta_list"):
            settings["theta_list"] = [settings["theta"], round(1.2 * settings["theta"], 12)]
        out_dir = Path(settings["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "exponents":
            summary_obj, files, suites, ok = _run_exponents(settings, out_dir)
            _dump(summary_obj, out_dir / "summary.json")
            files["summary.json"] = {"fields": len(summary_obj)}
            write_manifest(out_dir, settings, args.command, files, suites, time.time() - start, {})
            for name, fit in summary_obj["fits"].items():
                print(f"{name}: slope={fit['slope']:.4f} +/- {fit['slope_se']:.4f} (R2={fit['r2']:.3f})")
            for name, flag in summary_obj["pass"].items():
                print(f"[{'PASS' if flag else 'FAIL'}] {name}")
            return 0 if ok else 1

        cfg = config_from_settings(settings)
        summary = run_ensemble(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    checks = _suite_checks(args.command, summary, settings.get("k"))
    sample_name = f"samples.{settings['format']}"
    files = {sample_name: write_samples(summary, out_dir / sample_name, settings["format"],
                                        not settings["no_burke_columns"])}
    summary_dict = summary.to_dict()
    _dump(summary_dict, out_dir / "summary.json")
    files["summary.json"] = {"fields": len(summary_dict)}
    suites = {c.name: (None if c.skipped else c.passed) for c in checks}
    write_manifest(out_dir, settings, args.command, files, suites, time.time() - start,
                   {"t": summary.t, "tau": summary.tau,
                    "grid": {"t_left": summary.grid.t_left, "t_right": summary.grid.t_right,
                             "dt": summary.grid.step, "nodes": summary.grid.size}})
    failed = [c for c in checks if not c.passed and not c.skipped]
    for c in checks:
        print(c.line())
    if failed:
        print("failing residuals:", file=sys.stderr)
        for c in failed:
            lo, hi = c.ci
            print(f"  {c.name}: residual={c.residual:.6g} ci=[{lo:.6g}, {hi:.6g}]", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
