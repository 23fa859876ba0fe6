"""Seeded Monte-Carlo experiments and CSV output.

A configuration is a YAML mapping (see ``configs/`` and the README). Each
scenario sweeps one grid; every (grid point, trial) pair draws its own
instance from a generator seeded by ``(seed, grid index, trial)`` and runs
all configured solvers on that same instance.

Outputs are written next to each other:

* ``<out>``              one row per (grid point, solver, trial)
* ``<stem>.summary.csv`` one row per (grid point, solver) with aggregates
* ``<stem>.timing.csv``  wall-clock time per row (kept apart so the two
  files above are byte-for-byte reproducible)
"""
from __future__ import annotations

import copy
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import noise as noise_mod
from .baseline import hio
from .crb import crb_gaussian, crb_laplacian, fim_laplacian_complex
from .linop import make_dense, make_fourier2d, make_masked_dft
from .metrics import aligned_error, aligned_error_2d, mse_db, success_rate, to_db
from .solver import SolverConfig, solve, spectral_init, staged_p_init

SCENARIOS = {
    "snr_sweep": "snr_db",
    "outlier_sweep": "outlier_fraction",
    "sample_complexity_sweep": "ratio",
    "p_sweep": "p",
    "fourier2d_pipeline": "snr_db",
    "crb_table": "snr_db",
}
GRID_KEYS = {"snr_db": "snr_db", "outlier_fraction": "outlier_fraction", "ratio": "ratios", "p": "p_values"}

SIGNAL_KINDS = ("exponential", "complex_gaussian", "real_gaussian_image")
OPERATOR_KINDS = ("masked_dft", "gaussian", "fourier2d")
NOISE_KINDS = ("none", "laplacian", "alpha_stable", "gmm", "gaussian", "sparse")
SOLVER_KINDS = ("irls", "gd", "gd_accel", "gd_block", "gs")

DEFAULTS = {
    "scenario": "snr_sweep",
    "seed": 0,
    "trials": 100,
    "signal": {"kind": "exponential", "n": 16},
    "operator": {"kind": "masked_dft", "masks": 8},
    "noise": {"kind": "gmm", "weights": [0.9, 0.1], "variances": [0.1, 100.0]},
    "snr_db": 20.0,
    "snr_reference": "measurements",
    "init": "spectral",
    "stage_iters": 100,
    "success_threshold": 1e-4,
    "crb": None,
    "solvers": [
        {"name": "altirls", "variant": "irls", "p": 1.3},
        {"name": "altgd", "variant": "gd_accel", "p": 1.3},
        {"name": "gs", "variant": "gs"},
    ],
    "pipeline": {"hio_iters": 5000, "refine_iters": 5000, "beta": 0.9},
}

RESULT_COLUMNS = (
    "scenario", "grid_name", "grid_value", "solver", "trial", "aligned_error",
    "error_db", "iterations", "termination", "crb_laplacian", "crb_gaussian",
)
SUMMARY_COLUMNS = (
    "scenario", "grid_name", "grid_value", "solver", "trials", "mse_db", "mean_db",
    "median_db", "success_rate", "crb_laplacian", "crb_gaussian",
)
TIMING_COLUMNS = ("grid_value", "solver", "trial", "wall_time")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ResultRow:
    scenario: str
    grid_name: str
    grid_value: float
    solver: str
    trial: int
    aligned_error: float
    error_db: float
    iterations: int
    termination: str
    crb_laplacian: float = math.nan
    crb_gaussian: float = math.nan
    wall_time: float = 0.0


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "noise":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def set_override(config, assignment):
    """Apply ``dotted.key=value``; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    value = yaml.safe_load(raw)
    node = config
    parts = key.strip().split(".")
    for part in parts[:-1]:
        if part.isdigit() and isinstance(node, list):
            node = node[int(part)]
            continue
        node = node.setdefault(part, {})
        if not isinstance(node, (dict, list)):
            raise ConfigError(f"cannot descend into {part!r} in override {assignment!r}")
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return config


def load_config(path=None, overrides=(), **shortcuts):
    """Read a YAML config, apply ``--set`` overrides and shortcut flags, validate."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping at the top level")
    for item in overrides:
        set_override(raw, item)
    for key, val in shortcuts.items():
        if val is not None:
            raw[key] = val
    return validate_config(raw)


def _as_list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def validate_config(raw):
    """Fill defaults and check every field, raising :class:`ConfigError`."""
    cfg = _merge(DEFAULTS, raw)
    scenario = cfg["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
    if int(cfg["trials"]) != cfg["trials"] or cfg["trials"] < 1:
        raise ConfigError("trials must be a positive integer")
    if int(cfg["seed"]) != cfg["seed"] or cfg["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")

    sig = cfg["signal"]
    if sig.get("kind") not in SIGNAL_KINDS:
        raise ConfigError(f"unknown signal kind {sig.get('kind')!r}; expected one of {SIGNAL_KINDS}")
    opc = cfg["operator"]
    if opc.get("kind") not in OPERATOR_KINDS:
        raise ConfigError(f"unknown operator kind {opc.get('kind')!r}; expected one of {OPERATOR_KINDS}")
    if (opc["kind"] == "fourier2d") != (sig["kind"] == "real_gaussian_image"):
        raise ConfigError("fourier2d operators pair with real_gaussian_image signals")
    if scenario == "fourier2d_pipeline" and opc["kind"] != "fourier2d":
        raise ConfigError("fourier2d_pipeline needs a fourier2d operator")
    nz = cfg["noise"]
    if nz.get("kind") not in NOISE_KINDS:
        raise ConfigError(f"unknown noise kind {nz.get('kind')!r}; expected one of {NOISE_KINDS}")
    if cfg["snr_reference"] not in ("measurements", "signal"):
        raise ConfigError("snr_reference must be 'measurements' or 'signal'")
    if cfg["init"] not in ("spectral", "staged"):
        raise ConfigError("init must be 'spectral' or 'staged'")
    if int(cfg["stage_iters"]) != cfg["stage_iters"] or cfg["stage_iters"] < 1:
        raise ConfigError("stage_iters must be a positive integer")

    grid_name = SCENARIOS[scenario]
    grid = _as_list(cfg[GRID_KEYS[grid_name]]) if GRID_KEYS[grid_name] in cfg else []
    if not grid:
        raise ConfigError(f"scenario {scenario} needs a nonempty {GRID_KEYS[grid_name]!r} grid")
    try:
        grid = [float(g) for g in grid]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid {GRID_KEYS[grid_name]!r} must be numeric") from exc
    cfg["grid_name"], cfg["grid"] = grid_name, grid
    if grid_name == "outlier_fraction" and nz["kind"] not in ("gmm", "sparse"):
        raise ConfigError("outlier_sweep needs gmm or sparse noise")
    if grid_name == "ratio" and opc["kind"] == "fourier2d":
        raise ConfigError("sample_complexity_sweep needs masked_dft or gaussian operators")

    solvers = cfg["solvers"] if scenario != "crb_table" else []
    if scenario != "crb_table" and not solvers:
        raise ConfigError("at least one solver is required")
    names = set()
    for spec in solvers:
        if "variant" not in spec:
            raise ConfigError(f"solver {spec!r} lacks a variant")
        if spec["variant"] not in SOLVER_KINDS:
            raise ConfigError(f"unknown solver variant {spec['variant']!r}; expected one of {SOLVER_KINDS}")
        spec.setdefault("name", spec["variant"])
        if spec["name"] in names or spec["name"] == "hio":
            raise ConfigError(f"duplicate or reserved solver name {spec['name']!r}")
        names.add(spec["name"])
        try:
            _solver_config(spec, grid[0] if grid_name == "p" else None)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver {spec['name']!r}: {exc}") from exc
    cfg["solvers"] = solvers
    # fail now, not mid-run, on bad signal/operator/noise parameters
    try:
        rng = np.random.default_rng(0)
        _build_instance(cfg, grid[0], rng)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid instance parameters: {exc}") from exc
    return cfg


def _solver_config(spec, p_override=None):
    params = {k: v for k, v in spec.items() if k not in ("name", "variant")}
    if spec["variant"] == "gs":
        params.update(p=2.0, eps=0.0)
        variant = "irls"
    else:
        variant = spec["variant"]
        if p_override is not None:
            params["p"] = p_override
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(params) - known
    if unknown:
        raise ValueError(f"unknown solver settings {sorted(unknown)}")
    return SolverConfig(variant=variant, **params)


def _noise_model(nz, fraction=None):
    kind = nz["kind"]
    if kind == "laplacian":
        return noise_mod.Laplacian(float(nz.get("sigma", 1.0)))
    if kind == "alpha_stable":
        return noise_mod.AlphaStable(
            float(nz.get("alpha", 0.8)), float(nz.get("beta", 0.0)),
            float(nz.get("gamma", 2.0)), float(nz.get("mu", 0.0)),
        )
    if kind == "gaussian":
        return noise_mod.GaussianMixture((1.0, 0.0), (float(nz.get("variance", 1.0)), 0.0))
    if kind == "gmm":
        weights = tuple(float(w) for w in nz.get("weights", (0.9, 0.1)))
        if fraction is not None:
            weights = (1.0 - fraction, fraction)
        return noise_mod.GaussianMixture(weights, tuple(float(v) for v in nz.get("variances", (0.1, 100.0))))
    return None


def _build_instance(cfg, grid_value, rng):
    """Draw (signal, operator, measurements, noise) for one trial."""
    sig, opc, nz = cfg["signal"], cfg["operator"], cfg["noise"]
    gname = cfg["grid_name"]
    if sig["kind"] == "real_gaussian_image":
        rows, cols = int(sig.get("rows", 16)), int(sig.get("cols", 16))
        n = rows * cols
    else:
        n = int(sig.get("n", 16))
    if n < 1:
        raise ConfigError("signal length must be positive")

    if sig["kind"] == "exponential":
        t = np.arange(1, n + 1)
        x = np.exp(1j * float(sig.get("omega", 0.16 * math.pi)) * t)
    elif sig["kind"] == "complex_gaussian":
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    else:
        x = rng.standard_normal(n).astype(complex)

    ratio = grid_value if gname == "ratio" else None
    if opc["kind"] == "masked_dft":
        k = int(ratio) if ratio is not None else int(opc.get("masks", 8))
        if ratio is not None and k != ratio:
            raise ConfigError("masked_dft sample-complexity ratios must be integers")
        op = make_masked_dft(n, k, rng)
    elif opc["kind"] == "gaussian":
        m = int(round(ratio * n)) if ratio is not None else int(opc.get("m", 8 * n))
        a = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / math.sqrt(2)
        op = make_dense(a)
    else:
        op = make_fourier2d(rows, cols, int(opc.get("factor", 2)))

    clean = op.forward(x)
    fraction = grid_value if gname == "outlier_fraction" else nz.get("fraction")
    if nz["kind"] == "none":
        n_vec = np.zeros(op.m)
    elif nz["kind"] == "sparse":
        n_vec = noise_mod.sparse_outliers(float(fraction if fraction is not None else 0.1),
                                          float(nz.get("variance", 100.0)), op.m, rng)
    else:
        model = _noise_model(nz, fraction if gname == "outlier_fraction" else None)
        n_vec = model.sample(op.m, rng)
    snr = grid_value if gname == "snr_db" else cfg.get("snr_db")
    if isinstance(snr, list):
        snr = snr[0]
    if snr is not None and nz["kind"] != "none":
        ref = clean if cfg["snr_reference"] == "measurements" else x
        n_vec = noise_mod.scale_to_snr(n_vec, ref, float(snr))
    y = np.abs(clean) + n_vec
    return x, op, y, n_vec


def _wants_crb(cfg):
    if cfg["scenario"] == "crb_table":
        return True
    if cfg["crb"] is not None:
        return bool(cfg["crb"])
    return cfg["noise"]["kind"] in ("laplacian", "gaussian") and cfg["operator"]["kind"] != "fourier2d"


def _crb_pair(op, x, n_vec):
    sigma2 = float(np.sum(n_vec**2) / op.m)
    if sigma2 <= 0:
        return math.nan, math.nan
    lap = crb_laplacian(fim_laplacian_complex(op, x, sigma2))
    return lap.bound_total, crb_gaussian(lap).bound_total


def trial_rngs(seed, grid_index, trial):
    """Independent generators for data and for solver randomness."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(grid_index), int(trial)))
    data_ss, algo_ss = ss.spawn(2)
    return np.random.default_rng(data_ss), np.random.default_rng(algo_ss)


def run_trial(cfg, grid_index, trial):
    """All solver rows for one (grid point, trial) instance."""
    grid_value = cfg["grid"][grid_index]
    data_rng, algo_rng = trial_rngs(cfg["seed"], grid_index, trial)
    x, op, y, n_vec = _build_instance(cfg, grid_value, data_rng)
    crb_l, crb_g = _crb_pair(op, x, n_vec) if _wants_crb(cfg) else (math.nan, math.nan)
    base = dict(scenario=cfg["scenario"], grid_name=cfg["grid_name"], grid_value=grid_value,
                trial=trial, crb_laplacian=crb_l, crb_gaussian=crb_g)
    if cfg["scenario"] == "crb_table":
        return [ResultRow(solver="crb", aligned_error=math.nan, error_db=math.nan,
                          iterations=0, termination="", **base)]

    p_override = grid_value if cfg["grid_name"] == "p" else None
    rows = []
    if cfg["scenario"] == "fourier2d_pipeline":
        shape = op.signal_shape
        pipe = cfg["pipeline"]
        hio_iters, refine = int(pipe["hio_iters"]), int(pipe["refine_iters"])
        hio_seed = int(algo_rng.integers(2**32))
        t0 = time.monotonic()
        x_init = hio(y, op, beta=float(pipe["beta"]), iters=hio_iters, rng=hio_seed)
        t_init = time.monotonic() - t0
        # the HIO-only reference runs the same total budget from the same start
        t0 = time.monotonic()
        x_hio = hio(y, op, beta=float(pipe["beta"]), iters=hio_iters + refine, rng=hio_seed)
        err = aligned_error_2d(x_hio, x, shape)
        rows.append(ResultRow(solver="hio", aligned_error=err, error_db=float(to_db(err)),
                              iterations=hio_iters + refine, termination="max_iters",
                              wall_time=time.monotonic() - t0, **base))
        for spec in cfg["solvers"]:
            sc = _solver_config({"max_iters": refine, "rel_tol": -1.0, **spec}, p_override)
            t0 = time.monotonic()
            x_hat, tr = solve(y, op, x_init, sc)
            err = aligned_error_2d(x_hat, x, shape)
            rows.append(ResultRow(solver=spec["name"], aligned_error=err, error_db=float(to_db(err)),
                                  iterations=tr.n_iter, termination=tr.reason,
                                  wall_time=t_init + time.monotonic() - t0, **base))
        return rows

    x0 = spectral_init(y, op, algo_rng)
    for spec in cfg["solvers"]:
        sc = _solver_config(spec, p_override)
        if sc.variant == "gd_block" and sc.schedule == "random":
            sc = replace(sc, seed=int(algo_rng.integers(2**32)))
        t0 = time.monotonic()
        start = x0
        if cfg["init"] == "staged" and sc.p < 1:
            start = staged_p_init(y, op, sc.p, config=sc, iters=int(cfg["stage_iters"]), x0=x0)
        x_hat, tr = solve(y, op, start, sc)
        err = aligned_error(x_hat, x)
        rows.append(ResultRow(solver=spec["name"], aligned_error=err, error_db=float(to_db(err)),
                              iterations=tr.n_iter, termination=tr.reason,
                              wall_time=time.monotonic() - t0, **base))
    return rows


def _run_task(args):
    cfg, gi, trial = args
    return run_trial(cfg, gi, trial)


def _solver_order(cfg):
    names = ["hio"] if cfg["scenario"] == "fourier2d_pipeline" else []
    names += [s["name"] for s in cfg["solvers"]]
    return names if cfg["scenario"] != "crb_table" else ["crb"]


def run_experiment(cfg, jobs=1):
    """Run every (grid point, trial) of a validated config.

    Rows come back sorted by (grid index, solver order, trial) regardless of
    how the work was scheduled.
    """
    if "grid" not in cfg:
        cfg = validate_config(cfg)
    tasks = [(cfg, gi, t) for gi in range(len(cfg["grid"])) for t in range(cfg["trials"])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    order = {name: i for i, name in enumerate(_solver_order(cfg))}
    grid_pos = {g: i for i, g in enumerate(cfg["grid"])}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (grid_pos[r.grid_value], order[r.solver], r.trial))
    return rows


def summarize(rows, success_threshold=1e-4):
    """Aggregate rows per (grid point, solver)."""
    groups = {}
    for r in rows:
        groups.setdefault((r.scenario, r.grid_name, r.grid_value, r.solver), []).append(r)
    out = []
    for (scenario, gname, gval, solver), rs in groups.items():
        errs = np.array([r.aligned_error for r in rs])
        crb_l = np.array([r.crb_laplacian for r in rs])
        crb_g = np.array([r.crb_gaussian for r in rs])
        has_err = not np.all(np.isnan(errs))
        out.append({
            "scenario": scenario, "grid_name": gname, "grid_value": gval, "solver": solver,
            "trials": len(rs),
            "mse_db": mse_db(errs) if has_err else math.nan,
            "mean_db": float(np.mean(to_db(errs))) if has_err else math.nan,
            "median_db": float(to_db(np.median(errs))) if has_err else math.nan,
            "success_rate": success_rate(errs, success_threshold) if has_err else math.nan,
            "crb_laplacian": float(np.mean(crb_l)),
            "crb_gaussian": float(np.mean(crb_g)),
        })
    return out


def _fmt(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17e")
    return str(value)


def emit_csv(rows, path, columns=RESULT_COLUMNS):
    """Write rows (dataclasses or dicts) as UTF-8 CSV with LF line endings.

    Floats are written with 17 significant digits in scientific notation, so
    parsing the file recovers every value exactly.
    """
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                rec = asdict(row) if not isinstance(row, dict) else row
                writer.writerow([_fmt(rec[c]) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """Parse a file written by :func:`emit_csv` back into dicts of typed values."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            parsed = {}
            for key, val in rec.items():
                try:
                    parsed[key] = int(val)
                except ValueError:
                    try:
                        parsed[key] = float(val)
                    except ValueError:
                        parsed[key] = val
            out.append(parsed)
    return out


def sidecar_paths(out):
    out = Path(out)
    stem = out.with_suffix("") if out.suffix == ".csv" else out
    return (Path(f"{stem}.summary.csv"), Path(f"{stem}.timing.csv"), Path(f"{stem}.png"))


def write_outputs(cfg, rows, out, emit_plots=False):
    """Write the per-trial, summary and timing CSVs (and optionally a plot)."""
    summary_path, timing_path, plot_path = sidecar_paths(out)
    emit_csv(rows, out)
    emit_csv(summarize(rows, cfg["success_threshold"]), summary_path, SUMMARY_COLUMNS)
    emit_csv([{"grid_value": r.grid_value, "solver": r.solver, "trial": r.trial,
               "wall_time": r.wall_time} for r in rows], timing_path, TIMING_COLUMNS)
    paths = [Path(out), summary_path, timing_path]
    if emit_plots:
        paths.append(plot_summary(summarize(rows, cfg["success_threshold"]), plot_path))
    return paths


def plot_summary(summary, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_solver = {}
    for rec in summary:
        by_solver.setdefault(rec["solver"], []).append(rec)
    metric = "mse_db"
    for solver, recs in by_solver.items():
        gx = [r["grid_value"] for r in recs]
        if solver == "crb":
            ax.plot(gx, to_db([r["crb_laplacian"] for r in recs]), "k--", label="CRB (Laplacian)")
            ax.plot(gx, to_db([r["crb_gaussian"] for r in recs]), "k:", label="CRB (Gaussian)")
            continue
        ax.plot(gx, [r[metric] for r in recs], "o-", label=solver)
        if not all(math.isnan(r["crb_laplacian"]) for r in recs) and solver == next(iter(by_solver)):
            ax.plot(gx, to_db([r["crb_laplacian"] for r in recs]), "k--", label="CRB (Laplacian)")
    ax.set_xlabel(summary[0]["grid_name"] if summary else "")
    ax.set_ylabel("MSE (dB)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
