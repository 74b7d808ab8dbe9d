"""Command-line entry point: ``grade {simulate,fit,eval,experiment}``.

Every command reads a JSON config (``--config``), applies the command-line
overrides, validates everything up front and writes its artifacts into
``--out`` together with the fully resolved config (``config.json``).  Output
files contain no timestamps, so reruns with the same config are
byte-identical.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
4 at least one uncertified node fit.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec
from .dynamics import (
    AdditiveSystem,
    LinearOscillatorPairs,
    LotkaVolterraPairs,
    TimeSeriesDataset,
    appendix_c_system,
    generate_multi_experiment,
    lv_inits,
    oscillator_inits,
    read_edge_list,
    write_edge_list,
)
from .errors import GradeError, SchemaError
from .network import (
    GradeConfig,
    NetworkEstimate,
    RecoveryReport,
    average_reports,
    derivative_baseline_fit,
    evaluate_recovery,
    grade_fit,
    lv_robustness_experiment,
    _map,
)
from .smoother import LocalPolyConfig, smooth_dataset

SCHEMA_VERSION = 1
log = logging.getLogger("grade")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNCERTIFIED = 4


class ConfigError(GradeError, ValueError):
    """Bad configuration: unknown keys, invalid values or unusable paths."""


class Uncertified(GradeError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

FIT_DEFAULTS = {
    "method": "grade",
    "select": "bic",
    "basis": "monomial3",
    "basis_candidates": [],
    "smoother": {"degree": 3, "kernel": "epanechnikov", "bandwidth": None},
    "quad_step": 0.01,
    "n_lambda": 50,
    "lambda_ratio": 1e-3,
    "ridge": 0.0,
    "penalty_gram": "profiled",
    "tol": 1e-8,
    "max_iter": 10000,
}

DEFAULTS = {
    "simulate": {
        "preset": "appendixC", "sigma": 1.0, "n": 200, "R": 1, "seed": 0, "step": 0.001,
        "v": 1.0, "system": None, "inits": None,
    },
    "fit": dict(FIT_DEFAULTS, data=None, truth=None),
    "eval": {"estimate": None, "truth": None, "replicates": None, "p": None},
    "experiment": {
        "preset": "fig1", "reps": 20, "seed": 0, "n": 200, "sigma": None, "step": 0.001,
        "v_grid": [0.0, 0.25, 0.5, 1.0], "R": 2, "mc_reps": 200, "target": 20,
        "fit": {},
    },
}

SIM_PRESETS = ("appendixC", "oscillators", "lv")
EXPERIMENT_PRESETS = ("fig1", "fig2", "fig3")
# basis used by each experiment unless config.fit.basis says otherwise
EXPERIMENT_BASIS = {"fig1": "monomial3", "fig2": "linear", "fig3": "spline2"}
PATH_KEYS = {"fit": ("data", "truth"), "eval": ("estimate", "truth", "replicates")}


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    out = dict(defaults)
    for key, value in given.items():
        if isinstance(defaults.get(key), dict) and key != "fit":
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{key} must be an object")
            out[key] = _merge(defaults[key], value, f"{where}.{key}")
        else:
            out[key] = value
    return out


def resolve_config(command: str, args) -> dict:
    """Defaults, then the config file, then command-line overrides."""
    given = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                given = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: line {exc.lineno}: {exc.msg}") from None
        if not isinstance(given, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(args.config).resolve().parent
        for key in PATH_KEYS.get(command, ()):
            if isinstance(given.get(key), str):
                given[key] = str((base / given[key]).resolve())
    cfg = _merge(DEFAULTS[command], given, "config")
    if command == "experiment":
        defaults = dict(FIT_DEFAULTS, basis=EXPERIMENT_BASIS.get(cfg["preset"], "monomial3"))
        if not isinstance(cfg["fit"], dict):
            raise ConfigError("config.fit must be an object")
        cfg["fit"] = _merge(defaults, cfg["fit"], "config.fit")
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        cfg["method"] = args.method
    if getattr(args, "select", None) is not None:
        if command == "experiment":
            cfg["fit"]["select"] = args.select
        else:
            cfg["select"] = args.select
    for key in ("data", "truth", "estimate", "replicates"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = str(Path(value).resolve())
    cfg["threads"] = args.threads
    cfg["command"] = command
    cfg["tool_version"] = __version__
    cfg["schema_version"] = SCHEMA_VERSION
    return cfg


def grade_config(cfg: dict, threads: int) -> GradeConfig:
    """Build a :class:`GradeConfig` from the fit section of a resolved config."""
    try:
        sm = cfg["smoother"]
        smoother = LocalPolyConfig(
            degree=int(sm["degree"]), kernel=sm["kernel"],
            bandwidth=None if sm["bandwidth"] in (None, "gcv") else float(sm["bandwidth"]),
        )
        return GradeConfig(
            smoother=smoother,
            basis=BasisSpec.parse(cfg["basis"]),
            quad_step=float(cfg["quad_step"]),
            n_lambda=int(cfg["n_lambda"]),
            lambda_ratio=float(cfg["lambda_ratio"]),
            ridge=float(cfg["ridge"]),
            selection=str(cfg["select"]),
            basis_candidates=tuple(BasisSpec.parse(b) for b in cfg["basis_candidates"]),
            tol=float(cfg["tol"]),
            max_iter=int(cfg["max_iter"]),
            threads=threads,
            penalty_gram=cfg["penalty_gram"],
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid fit settings: {exc}") from None


def _check_out(out) -> Path:
    if out is None:
        raise ConfigError("--out is required")
    path = Path(out)
    if path.exists() and not path.is_dir():
        raise ConfigError(f"--out {out} exists and is not a directory")
    parent = path.resolve().parent
    if not parent.is_dir():
        raise ConfigError(f"parent of --out does not exist: {parent}")
    return path


def _check_file(value, key) -> Path:
    if value is None:
        raise ConfigError(f"'{key}' is required")
    path = Path(value)
    if not path.is_file():
        raise ConfigError(f"{key}: no such file {value}")
    return path


# ---------------------------------------------------------------------------
# writers (single writer per file, no timestamps)
# ---------------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_config(out: Path, cfg: dict) -> None:
    # the thread count only schedules work; results do not depend on it, so
    # it stays out of the artifacts to keep them byte-identical across runs
    _write_json(out / "config.json", {k: v for k, v in cfg.items() if k != "threads"})


def _write_dataset(out: Path, data: TimeSeriesDataset) -> None:
    data.to_csv(out / "dataset.csv")
    if data.truth is not None:
        write_edge_list(out / "truth.csv", data.truth)
    _write_json(out / "metadata.json", dict(data.metadata, schema_version=SCHEMA_VERSION,
                                            p=data.p, horizon=data.horizon))


def network_document(est: NetworkEstimate) -> dict:
    """JSON form of an estimate: enough to rebuild recovery curves and ROC."""
    return {
        "schema_version": SCHEMA_VERSION,
        "method": est.method,
        "p": est.p,
        "lambdas": est.lambdas,
        "selected_lambda": est.selected_lambda,
        "adjacency": est.adjacency.astype(int),
        "strength": est.strength,
        "dense_strength": est.dense_strength,
        "path_edges": [np.argwhere(A).tolist() for A in est.path_edges]
        if est.path_edges is not None else None,
        "certified": est.certified,
        "smooth_fingerprints": list(est.smooth_fingerprints),
        "metadata": {k: v for k, v in est.metadata.items() if k != "config"},
    }


def load_network(path) -> NetworkEstimate:
    """Rebuild a :class:`NetworkEstimate` from ``network.json``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        p = int(doc["p"])
        adjacency = np.asarray(doc["adjacency"], dtype=bool).reshape(p, p)
        path_edges = None
        if doc.get("path_edges") is not None:
            path_edges = np.zeros((len(doc["path_edges"]), p, p), dtype=bool)
            for g, edges in enumerate(doc["path_edges"]):
                for k, j in edges:
                    path_edges[g, k, j] = True
        return NetworkEstimate(
            adjacency=adjacency,
            strength=np.asarray(doc["strength"], dtype=float).reshape(p, p),
            dense_strength=np.asarray(doc["dense_strength"], dtype=float).reshape(p, p),
            lambdas=np.asarray(doc["lambdas"], dtype=float),
            selected_lambda=np.asarray(doc["selected_lambda"], dtype=float),
            method=str(doc["method"]),
            path_edges=path_edges,
            certified=bool(doc["certified"]),
        )
    except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: not a network document ({exc})") from None


def _estimate_from_edges(path, p) -> NetworkEstimate:
    A, S = read_edge_list(path, p, with_strength=True)
    return NetworkEstimate(
        adjacency=A, strength=S, dense_strength=S, lambdas=np.zeros(0),
        selected_lambda=np.zeros(A.shape[0]), method="edge-list",
    )


def write_estimate(out: Path, est: NetworkEstimate, prefix: str = "") -> dict:
    """Edge list, network document, per-node paths and KKT summary."""
    est.to_csv(out / f"{prefix}edges.csv")
    _write_json(out / f"{prefix}network.json", network_document(est))
    paths = {
        "schema_version": SCHEMA_VERSION,
        "method": est.method,
        "nodes": [dict(pa.to_dict(), node=j + 1) for j, pa in enumerate(est.paths or [])],
    }
    _write_json(out / f"{prefix}paths.json", paths)
    failures = []
    for j, pa in enumerate(est.paths or []):
        for g, fit in enumerate(pa.fits):
            if fit.kkt is not None and not fit.kkt.certified:
                failures.append({"node": j + 1, "lambda_index": g, "lambda": fit.lam,
                                 "converged": fit.converged, "kkt": fit.kkt.to_dict()})
    summary = {"schema_version": SCHEMA_VERSION, "method": est.method,
               "certified": not failures, "n_failures": len(failures)}
    _write_json(out / f"{prefix}kkt.json", summary)
    if failures:
        _write_json(out / f"{prefix}failures.json",
                    {"schema_version": SCHEMA_VERSION, "failures": failures})
    return summary


def write_report(out: Path, report: RecoveryReport, prefix: str = "") -> None:
    report.to_csv(out / f"{prefix}curve.csv")
    _write_json(out / f"{prefix}report.json", report.to_dict())


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def simulate_dataset(cfg: dict) -> TimeSeriesDataset:
    """Dataset for a ``simulate`` config (named preset or explicit system)."""
    seed, n, sigma, step = int(cfg["seed"]), int(cfg["n"]), float(cfg["sigma"]), float(cfg["step"])
    R = int(cfg["R"])
    if n < 2 or sigma < 0 or R < 1 or step <= 0:
        raise ConfigError("need n >= 2, sigma >= 0, R >= 1 and step > 0")
    rng = np.random.default_rng([seed, 1])
    if cfg["system"] is not None:
        system = _explicit_system(cfg["system"])
        if cfg["inits"] is None:
            raise ConfigError("an explicit system needs 'inits'")
        inits = np.asarray(cfg["inits"], dtype=float).reshape(-1, system.p)
    elif cfg["preset"] == "appendixC":
        system, init = appendix_c_system(seed)
        inits = np.repeat(init[None], R, axis=0)
    elif cfg["preset"] == "oscillators":
        system = LinearOscillatorPairs()
        inits = np.stack([oscillator_inits(rng) for _ in range(R)])
    elif cfg["preset"] == "lv":
        system = LotkaVolterraPairs(float(cfg["v"]))
        inits = lv_inits(system, R, rng, step)
    else:
        raise ConfigError(f"unknown preset {cfg['preset']!r}; choose from {', '.join(SIM_PRESETS)}")
    data = generate_multi_experiment(system, inits, n, sigma, seed, step)
    data.metadata["preset"] = cfg["preset"] if cfg["system"] is None else "explicit"
    return data


def _explicit_system(spec: dict) -> AdditiveSystem:
    allowed = {"drift", "coef", "basis", "horizon"}
    if not isinstance(spec, dict) or set(spec) - allowed:
        raise ConfigError(f"system must be an object with keys {sorted(allowed)}")
    try:
        basis = BasisSpec.parse(spec.get("basis", "monomial3")).fit()
        return AdditiveSystem(np.asarray(spec["drift"], dtype=float),
                              np.asarray(spec["coef"], dtype=float), basis,
                              horizon=float(spec.get("horizon", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system: {exc}") from None


def cmd_simulate(cfg: dict, out: Path) -> int:
    if cfg["system"] is None and cfg["preset"] not in SIM_PRESETS:
        raise ConfigError(f"unknown preset {cfg['preset']!r}; choose from {', '.join(SIM_PRESETS)}")
    data = simulate_dataset(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _write_dataset(out, data)
    _write_config(out, cfg)
    log.info("wrote %d x %d x %d dataset to %s", data.R, data.n, data.p, out)
    return 0


def _fit(data: TimeSeriesDataset, cfg: dict, threads: int, smooths=None) -> NetworkEstimate:
    config = grade_config(cfg, threads)
    method = cfg["method"]
    if method == "grade":
        return grade_fit(data, config, smooths)
    if method == "baseline":
        return derivative_baseline_fit(data, config, smooths)
    raise ConfigError(f"unknown method {method!r}; use grade or baseline")


def cmd_fit(cfg: dict, out: Path) -> int:
    if cfg["method"] not in ("grade", "baseline"):
        raise ConfigError(f"unknown method {cfg['method']!r}; use grade or baseline")
    grade_config(cfg, cfg["threads"])
    data_path = _check_file(cfg["data"], "data")
    truth_path = _check_file(cfg["truth"], "truth") if cfg["truth"] is not None else None
    data = TimeSeriesDataset.from_csv(data_path, truth_path)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(out, cfg)
    est = _fit(data, cfg, cfg["threads"])
    summary = write_estimate(out, est)
    if data.truth is not None:
        write_report(out, evaluate_recovery(est, data.truth))
    if not summary["certified"]:
        raise Uncertified(f"{summary['n_failures']} node fit(s) failed KKT certification; "
                          f"see {out / 'failures.json'}")
    return 0


def _load_estimate(path: Path, p) -> NetworkEstimate:
    if path.suffix == ".json":
        return load_network(path)
    return _estimate_from_edges(path, p)


def cmd_eval(cfg: dict, out: Path) -> int:
    p = None if cfg["p"] is None else int(cfg["p"])
    if cfg["replicates"] is not None:
        root = Path(cfg["replicates"])
        if not root.is_dir():
            raise ConfigError(f"replicates: no such directory {root}")
        runs = sorted(d for d in root.iterdir() if d.is_dir())
        if not runs:
            raise ConfigError(f"replicates: {root} has no run directories")
        reports = []
        for run in runs:
            est = load_network(_check_file(run / "network.json", "network.json"))
            truth_file = run / "truth.csv" if (run / "truth.csv").is_file() else cfg["truth"]
            truth = read_edge_list(_check_file(truth_file, "truth"), est.p)
            reports.append(evaluate_recovery(est, truth))
        lengths = {len(r.total_edges) for r in reports}
        if len(lengths) != 1:
            raise SchemaError("replicate curves have different lambda grids")
        out.mkdir(parents=True, exist_ok=True)
        _write_config(out, cfg)
        write_report(out, average_reports(reports))
        return 0
    est_path = _check_file(cfg["estimate"], "estimate")
    truth_path = _check_file(cfg["truth"], "truth")
    est = _load_estimate(est_path, p)
    truth = read_edge_list(truth_path, p if p is not None else (est.p or None))
    if truth.shape != est.adjacency.shape:
        size = max(truth.shape[0], est.adjacency.shape[0])
        if p is None and est_path.suffix != ".json":
            # plain edge lists do not carry p; pad both to the larger index
            truth = _pad(truth, size)
            est = _estimate_from_edges(est_path, size)
        else:
            raise SchemaError(f"truth has {truth.shape[0]} variables, estimate has {est.p}")
    out.mkdir(parents=True, exist_ok=True)
    _write_config(out, cfg)
    write_report(out, evaluate_recovery(est, truth))
    return 0


def _pad(A, size):
    B = np.zeros((size, size), dtype=bool)
    B[: A.shape[0], : A.shape[1]] = A
    return B


# -- experiments --------------------------------------------------------------

def _replicate_seeds(seed: int, reps: int) -> list[int]:
    return [seed + r for r in range(reps)]


def _fig_replicate(preset, cfg, rep_seed, fit_cfg):
    """One replicate of fig1/fig2: dataset plus one estimate per method."""
    n, step = int(cfg["n"]), float(cfg["step"])
    if preset == "fig1":
        sigma = 1.0 if cfg["sigma"] is None else float(cfg["sigma"])
        system, init = appendix_c_system(rep_seed)
        data = generate_multi_experiment(system, init[None], n, sigma, rep_seed, step)
        methods = ("grade", "baseline")
    else:
        sigma = 0.1 if cfg["sigma"] is None else float(cfg["sigma"])
        rng = np.random.default_rng([rep_seed, 1])
        data = generate_multi_experiment(LinearOscillatorPairs(), oscillator_inits(rng)[None], n,
                                         sigma, rep_seed, step)
        methods = ("grade",)
    smooths = smooth_dataset(data, grade_config(fit_cfg, 1).smoother)
    estimates = {m: _fit(data, dict(fit_cfg, method=m), 1, smooths) for m in methods}
    return data, estimates


def cmd_experiment(cfg: dict, out: Path) -> int:
    preset = cfg["preset"]
    if preset not in EXPERIMENT_PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(EXPERIMENT_PRESETS)}")
    reps, seed, threads = int(cfg["reps"]), int(cfg["seed"]), int(cfg["threads"])
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    fit_cfg = dict(cfg["fit"])
    grade_config(fit_cfg, 1)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(out, cfg)
    if preset == "fig3":
        return _experiment_lv(cfg, out, fit_cfg, threads)
    seeds = _replicate_seeds(seed, reps)
    results = _map(lambda s: _fig_replicate(preset, cfg, s, fit_cfg), seeds, threads)
    reports: dict[str, list] = {}
    manifest = []
    for s, (data, estimates) in zip(seeds, results):
        rep_dir = out / f"seed_{s}"
        rep_dir.mkdir(exist_ok=True)
        _write_dataset(rep_dir, data)
        entry = {"seed": s}
        for method, est in estimates.items():
            summary = write_estimate(rep_dir, est, prefix=f"{method}_")
            report = evaluate_recovery(est, data.truth)
            write_report(rep_dir, report, prefix=f"{method}_")
            reports.setdefault(method, []).append(report)
            entry[method] = {"certified": summary["certified"], "auc": report.auc}
        manifest.append(entry)
    for method, reps_ in reports.items():
        avg = average_reports(reps_)
        write_report(out, avg, prefix=f"{preset}_{method}_")
    _write_json(out / "manifest.json", {"schema_version": SCHEMA_VERSION, "preset": preset,
                                        "replicates": manifest})
    if not all(e[m]["certified"] for e in manifest for m in reports):
        raise Uncertified("some replicate fits failed KKT certification; see manifest.json")
    return 0


def _experiment_lv(cfg, out, fit_cfg, threads):
    config = grade_config(fit_cfg, 1)
    rows = lv_robustness_experiment(
        [float(v) for v in cfg["v_grid"]], R=int(cfg["R"]), seed=int(cfg["seed"]),
        reps=int(cfg["reps"]), n=int(cfg["n"]), config=config, mc_reps=int(cfg["mc_reps"]),
        target=int(cfg["target"]), step=float(cfg["step"]), threads=threads,
    )
    with open(out / "fig3.csv", "w") as fh:
        fh.write("v,self_recovered,nonself_recovered,D1,D2\n")
        for row in rows:
            fh.write(",".join(repr(float(row[k])) for k in
                              ("v", "self_recovered", "nonself_recovered", "D1", "D2")) + "\n")
    _write_json(out / "manifest.json", {"schema_version": SCHEMA_VERSION, "preset": "fig3",
                                        "rows": rows})
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grade", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=1)
        if name == "fit":
            sp.add_argument("--method", choices=("grade", "baseline"))
            sp.add_argument("--data", help="dataset CSV (overrides config)")
            sp.add_argument("--truth", help="ground-truth edge CSV (optional)")
        if name in ("fit", "experiment"):
            sp.add_argument("--select", help="bic, lambda=<v> or edges=<k>")
        if name == "eval":
            sp.add_argument("--estimate", help="network.json or edge CSV")
            sp.add_argument("--truth", help="ground-truth edge CSV")
            sp.add_argument("--replicates", help="directory of run directories")
    return parser


def _setup_logging():
    level = os.environ.get("GRADE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        out = _check_out(args.out)
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, SchemaError) as exc:
        print(f"grade: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Uncertified as exc:
        print(f"grade: {exc}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (GradeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"grade: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"grade: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
