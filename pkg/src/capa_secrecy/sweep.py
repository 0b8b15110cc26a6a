"""Parameter sweeps with reproducible CSV output.

A sweep walks one axis (Bob SNR, Eve SNR, aperture length, eavesdropper
count), evaluates the requested metrics with the requested evaluators for
each scenario, and emits one CSV row per (value, scenario, evaluator,
metric).  Output is byte-deterministic for a fixed seed; wall-clock timing
is only recorded when explicitly requested since it breaks determinism.
"""
from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import montecarlo as mc
from . import secrecy as sec
from . import snr_models as snr
from . import spectral as spc
from .snr_models import LinkBudget, Scenario

CSV_HEADER = "axis,value,scenario,evaluator,metric,result,std_err,seed,wall_ms"

AXES = ("gamma_b_db", "gamma_e_db", "aperture_len", "k_eves")
SCENARIOS = ("SE", "MIE", "MCE")
EVALUATORS = ("closed-form", "quadrature", "asymptotic", "monte-carlo", "spda-mc")
OUTPUTS = ("rate", "sop", "slope", "offset", "gain")

TABLE1 = {
    "gamma_b_db": 20.0,
    "gamma_e_db": 20.0,
    "wavelength_m": 0.1249,
    "aperture_len_m": 40 * 0.1249,
    "q_floor": 160,
    "quadrature_order": 1000,
    "k_eves": 5,
    "target_rate_r0": 3.0,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class SweepConfig:
    # system
    wavelength_m: float = TABLE1["wavelength_m"]
    aperture_len_m: float = TABLE1["aperture_len_m"]
    gamma_b_db: float = TABLE1["gamma_b_db"]
    gamma_e_db: float = TABLE1["gamma_e_db"]
    k_eves: int = TABLE1["k_eves"]
    target_rate_r0: float = TABLE1["target_rate_r0"]
    quadrature_order: int = TABLE1["quadrature_order"]
    q_floor: int = TABLE1["q_floor"]
    epsilon_floor: float = 1e-8
    series_tol: float = 1e-8
    n_trials: int = 200_000
    seed: int = 20260810
    workers: int = 1
    # sweep
    axis: str = "gamma_b_db"
    values: list = field(default_factory=lambda: [-10.0, 0.0, 10.0, 20.0, 30.0])
    scenarios: list = field(default_factory=lambda: ["SE", "MIE", "MCE"])
    evaluators: list = field(default_factory=lambda: ["quadrature", "monte-carlo"])
    outputs: list = field(default_factory=lambda: ["rate", "sop"])
    timing: bool = False

    def validate(self):
        def bad(fieldname, msg):
            raise ConfigError(f"{fieldname}: {msg}")

        for name in ("wavelength_m", "aperture_len_m", "target_rate_r0",
                     "epsilon_floor", "series_tol"):
            if not (isinstance(getattr(self, name), (int, float))
                    and getattr(self, name) > 0):
                bad(name, "must be a positive number")
        for name in ("k_eves", "quadrature_order", "q_floor", "n_trials",
                     "workers"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v > 0):
                bad(name, "must be a positive integer")
        if not isinstance(self.seed, int):
            bad("seed", "must be an integer")
        if self.axis not in AXES:
            bad("axis", f"must be one of {AXES}")
        if not self.values:
            bad("values", "must be a nonempty increasing list")
        vals = [float(v) for v in self.values]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            bad("values", "must be strictly increasing")
        if self.axis == "k_eves" and any(v < 1 or v != int(v) for v in vals):
            bad("values", "k_eves values must be integers >= 1")
        if self.axis == "aperture_len" and any(v <= 0 for v in vals):
            bad("values", "aperture lengths must be positive")
        if not self.scenarios:
            bad("scenarios", "must list at least one scenario")
        for s in self.scenarios:
            if s not in SCENARIOS:
                bad("scenarios", f"unknown scenario {s!r}")
        if not self.evaluators:
            bad("evaluators", "must list at least one evaluator")
        for e in self.evaluators:
            if e not in EVALUATORS:
                bad("evaluators", f"unknown evaluator {e!r}")
        if not self.outputs:
            bad("outputs", "must list at least one output")
        for o in self.outputs:
            if o not in OUTPUTS:
                bad("outputs", f"unknown output {o!r}")
        return self


def load_config(path: str) -> SweepConfig:
    """Parse a JSON config; the `table1` preset pins the reference setup."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SweepConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    raw = dict(raw)
    preset = raw.pop("preset", None)
    cfg = SweepConfig()
    if preset is not None:
        if preset != "table1":
            raise ConfigError(f"preset: unknown preset {preset!r}")
        for k, v in TABLE1.items():
            setattr(cfg, k, v)
    if "aperture_lambdas" in raw:
        cfg.aperture_len_m = float(raw.pop("aperture_lambdas")) * float(
            raw.get("wavelength_m", cfg.wavelength_m))
    known = set(cfg.__dataclass_fields__)
    for k, v in raw.items():
        if k not in known:
            raise ConfigError(f"{k}: unknown field")
        setattr(cfg, k, v)
    return cfg.validate()


def serialize_config(cfg: SweepConfig) -> str:
    """Round-trippable JSON with all defaults made explicit."""
    return json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


class _Workspace:
    """Spectrum/series cache shared across grid points of one sweep."""

    def __init__(self, cfg: SweepConfig, cache_dir=None):
        self.cfg = cfg
        self.cache_dir = cache_dir
        self._spec = {}
        self._ms = {}

    def spectrum(self, aperture_len_m: float):
        key = aperture_len_m
        if key not in self._spec:
            geom = spc.ApertureGeometry(self.cfg.wavelength_m, aperture_len_m)
            self._spec[key] = spc.cached_decompose(
                geom, self.cfg.quadrature_order, self.cfg.epsilon_floor,
                cache_dir=self.cache_dir)
        return self._spec[key]

    def series(self, aperture_len_m: float):
        key = aperture_len_m
        if key not in self._ms:
            self._ms[key] = snr.build_psi(
                self.spectrum(aperture_len_m), self.cfg.q_floor,
                series_tol=self.cfg.series_tol)
        return self._ms[key]


def _point_params(cfg: SweepConfig, value: float):
    gamma_b = _db_to_lin(cfg.gamma_b_db)
    gamma_e = _db_to_lin(cfg.gamma_e_db)
    aperture = cfg.aperture_len_m
    k = cfg.k_eves
    if cfg.axis == "gamma_b_db":
        gamma_b = _db_to_lin(value)
    elif cfg.axis == "gamma_e_db":
        gamma_e = _db_to_lin(value)
    elif cfg.axis == "aperture_len":
        aperture = value
    else:
        k = int(value)
    return gamma_b, gamma_e, aperture, k


def _eval_point(ws: _Workspace, cfg: SweepConfig, value: float, scen_name: str,
                evaluator: str, point_seed: int):
    """Returns {metric: (result, std_err_or_None)} for one grid point."""
    gamma_b, gamma_e, aperture, k = _point_params(cfg, value)
    if scen_name == "SE":
        k = 1
    lb = LinkBudget(gamma_b, gamma_e, k, Scenario(scen_name))
    ms = ws.series(aperture)
    r0 = cfg.target_rate_r0
    out = {}
    wanted = cfg.outputs
    if evaluator == "monte-carlo":
        if "rate" in wanted or "sop" in wanted:
            rate_est, sop_est = mc.mc_secrecy(lb, ms, r0, cfg.n_trials, point_seed)
            if "rate" in wanted:
                out["rate"] = (rate_est.mean, rate_est.std_err)
            if "sop" in wanted:
                out["sop"] = (sop_est.mean, sop_est.std_err)
        return out
    if evaluator == "spda-mc":
        if "rate" in wanted or "sop" in wanted:
            geom = spc.ApertureGeometry(cfg.wavelength_m, aperture)
            rate_est, sop_est = mc.spda_baseline(lb, geom, r0, cfg.n_trials,
                                                 point_seed)
            if "rate" in wanted:
                out["rate"] = (rate_est.mean, rate_est.std_err)
            if "sop" in wanted:
                out["sop"] = (sop_est.mean, sop_est.std_err)
        return out
    # analytic evaluators
    if "rate" in wanted:
        if evaluator == "closed-form":
            out["rate"] = (sec.secrecy_rate_closed(lb, ms), None)
        elif evaluator == "quadrature":
            out["rate"] = (sec.secrecy_rate_quadrature(lb, ms), None)
        else:
            out["rate"] = (sec.asymptotic_rate(lb, ms), None)
    if "sop" in wanted:
        if evaluator == "closed-form":
            out["sop"] = (sec.sop_closed(lb, ms, r0), None)
        elif evaluator == "quadrature":
            out["sop"] = (sec.sop_quadrature(lb, ms, r0), None)
        else:
            out["sop"] = (min(sec.sop_asymptotic(lb, ms, r0), 1.0), None)
    if evaluator == "closed-form":
        # scalar high-SNR characterizations ride with the closed-form rows
        if "slope" in wanted:
            out["slope"] = (sec.high_snr_slope(ms), None)
        if "offset" in wanted:
            out["offset"] = (sec.high_snr_offset(lb, ms), None)
        if "gain" in wanted:
            out["gain"] = (sec.diversity_and_gain(lb, ms, r0)[1], None)
    return out


def run_sweep(cfg: SweepConfig, out_stream, *, cache_dir=None,
              summary_stream=None) -> int:
    """Execute the sweep; returns the process exit code (0 ok, 1 point errors).

    Grid points may run on a worker pool (cfg.workers > 1); per-point seeds
    are derived from the root seed and the grid index, and rows are emitted
    in grid order, so output is identical for any worker count.
    """
    summary = summary_stream if summary_stream is not None else sys.stderr
    ws = _Workspace(cfg, cache_dir=cache_dir)
    tasks = []
    for vi, value in enumerate(cfg.values):
        for si, scen in enumerate(cfg.scenarios):
            for ei, ev in enumerate(cfg.evaluators):
                point_seed = int(np.random.SeedSequence(
                    cfg.seed, spawn_key=(vi, si, ei)).generate_state(1)[0])
                tasks.append((float(value), scen, ev, point_seed))

    def run_one(task):
        value, scen, ev, point_seed = task
        t0 = time.perf_counter()
        try:
            res, err = _eval_point(ws, cfg, value, scen, ev, point_seed), None
        except Exception as exc:  # keep sweeping, tag the row
            res, err = {}, exc
        return res, err, (time.perf_counter() - t0) * 1e3

    if cfg.workers > 1:
        # pre-warm the shared spectrum cache so threads never race the solver
        for value, _, _, _ in tasks:
            ws.series(value if cfg.axis == "aperture_len" else cfg.aperture_len_m)
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]

    rows = []
    had_error = False
    for (value, scen, ev, point_seed), (res, err, wall) in zip(tasks, results):
        wall_s = _fmt(wall) if cfg.timing else ""
        if err is not None:
            had_error = True
            rows.append(f"{cfg.axis},{_fmt(value)},{scen},{ev},"
                        f"error,error:{type(err).__name__},,"
                        f"{point_seed},{wall_s}")
            continue
        for metric in cfg.outputs:
            if metric not in res:
                continue
            r, se = res[metric]
            se_s = "" if se is None else _fmt(se)
            rows.append(f"{cfg.axis},{_fmt(value)},{scen},{ev},"
                        f"{metric},{_fmt(r)},{se_s},{point_seed},{wall_s}")
    out_stream.write(CSV_HEADER + "\n")
    for row in rows:
        out_stream.write(row + "\n")

    summary_len = (float(cfg.values[0]) if cfg.axis == "aperture_len"
                   else cfg.aperture_len_m)
    base_spec = ws.spectrum(summary_len)
    counts = {e: spc.landau_count(base_spec, e) for e in (0.01, 0.5, 0.99)}
    print(f"spectrum: aperture_len={summary_len:g} dof={base_spec.dof} "
          f"trace_residual={base_spec.trace_residual:.3e} "
          f"landau_counts(eps=0.01/0.5/0.99)="
          f"{counts[0.01]}/{counts[0.5]}/{counts[0.99]}", file=summary)
    return 1 if had_error else 0


# ---------------------------------------------------------------------------
# per-figure plot data
# ---------------------------------------------------------------------------

def emit_plotdata(csv_path: str, outdir: str) -> list[str]:
    """Split a sweep CSV into one columnar file per (metric, axis) pair.

    Deterministic and idempotent: re-running on the same input reproduces
    byte-identical files.
    """
    with open(csv_path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError("csv: missing or unexpected header row")
    groups: dict[tuple[str, str], list[str]] = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_HEADER.split(",")):
            raise ConfigError(f"csv: malformed row: {ln!r}")
        axis, metric = parts[0], parts[4]
        if metric == "error":
            continue
        groups.setdefault((metric, axis), []).append(ln)
    os.makedirs(outdir, exist_ok=True)
    written = []
    for (metric, axis) in sorted(groups):
        path = os.path.join(outdir, f"{metric}_vs_{axis}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for ln in groups[(metric, axis)]:
                fh.write(ln + "\n")
        written.append(path)
    return written
