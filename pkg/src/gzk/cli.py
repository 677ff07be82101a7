"""``zk`` command-line entry point.

Every subcommand resolves its parameters from built-in defaults, then an
optional JSON config (``--config``), then explicit flags, in that order of
precedence.  Config files may use the nested ``grid: {n, box}`` and
``model: {k}`` blocks or flat keys; unknown keys are rejected.  All output
goes under ``--out-dir`` together with ``manifest.json``.

Exit codes: 0 on success, 2 when a verdict fails, 1 on operational errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, zkf
from .grid import Field, GridSpec

log = logging.getLogger("gzk")

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- parameter schema -----------------------------------------------------------------------


@dataclass(frozen=True)
class Opt:
    type: Callable
    default: Any
    help: str = ""
    choices: tuple | None = None


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(x) for x in str(v).split(",") if x.strip()]


def _ints(v) -> list[int]:
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in str(v).split(",") if x.strip()]


GRID = {
    "n": Opt(int, 256, "grid points per axis"),
    "box": Opt(float, 16.0, "box half-length L"),
}
MODEL = {"k": Opt(int, 3, "nonlinearity power k in u^(k+1)")}
SOLVER = {
    "tol": Opt(float, 1e-11, "ground-state residual tolerance"),
    "max_iters": Opt(int, 500, "ground-state iteration cap"),
}

COMMANDS: dict[str, dict[str, Opt]] = {
    "groundstate": {
        **GRID, **MODEL, **SOLVER,
        "route": Opt(str, "direct", "solve for Q directly or through psi", ("direct", "psi")),
        "pohozaev_tol": Opt(float, 1e-6, "acceptance tolerance for the integral identities"),
    },
    "gn-constant": {
        **GRID, **MODEL, **SOLVER,
        "samples": Opt(int, 50, "number of random test fields"),
        "violation_tol": Opt(float, 1e-8, "allowed excess of the ratio over 1"),
    },
    "evolve": {
        **GRID, **MODEL, **SOLVER,
        "init": Opt(str, "gauss:amp=0.1,width=1", "initial-data descriptor"),
        "dt": Opt(float, 1e-3, "time step"),
        "T_end": Opt(float, 1.0, "final time"),
        "dealias_pad": Opt(Fraction, None, "zero-padding ratio (default ceil((k+2)/2))"),
        "dealias_mode": Opt(str, "pad", "dealiasing mode", ("pad", "two-thirds")),
        "snapshot_stride": Opt(int, 100, "steps between ledger rows"),
        "boundary_tolerance": Opt(float, 1e-6, "allowed mass share in the outer 10% strip"),
        "growth_factor": Opt(float, 1e6, "gradient growth that stops the run"),
        "write_snapshots": Opt(_bool, False, "write snap_%06d.zkf files"),
        "audit_ledger": Opt(str, None, "audit an existing ledger CSV instead of integrating"),
        "conservation_tol": Opt(float, 1e-6, "allowed relative drift of mass and energy"),
    },
    "threshold": {
        **GRID, **MODEL, **SOLVER,
        "init": Opt(str, "gauss:amp=0.2,width=3", "initial-data descriptor"),
    },
    "decay": {
        "n": Opt(int, 1024, "grid points per axis"),
        "box": Opt(float, 80 * math.pi, "box half-length L"),
        "init": Opt(str, "gauss:amp=1,width=0.5", "initial-data descriptor"),
        "theta": Opt(float, 1.0, "interpolation parameter"),
        "eps": Opt(float, 0.0, "derivative gain parameter"),
        "t_min": Opt(float, 5.0, "first sample time"),
        "t_max": Opt(float, 40.0, "last sample time"),
        "samples": Opt(int, 16, "number of log-spaced times"),
        "horizon_c": Opt(float, 2.0, "validity-horizon factor"),
        "slope_tol": Opt(float, 0.05, "allowed deviation of the fitted exponent"),
    },
    "dispersive-probe": {
        "estimate": Opt(str, "smoothing", "which estimate", ("smoothing", "maximal", "strichartz")),
        "n": Opt(int, 256, "grid points per axis"),
        "box": Opt(float, None, "box half-length (default per estimate)"),
        "T": Opt(float, 1.0, "time window"),
        "nt": Opt(int, None, "time samples (default per estimate)"),
        "order": Opt(int, 1, "smoothing: derivative order (2 is the control)"),
        "s": Opt(float, 0.8, "maximal: Sobolev index"),
        "theta": Opt(float, 1.0, "strichartz: theta"),
        "eps": Opt(float, 0.0, "strichartz: eps"),
        "width": Opt(float, None, "family envelope width (default per estimate)"),
        "freqs": Opt(_floats, [4, 8, 16, 32], "smoothing: carriers in units of pi/L"),
        "scales": Opt(_floats, [1, 2, 4, 8], "maximal: dilation factors"),
        "count": Opt(int, 10, "strichartz: number of random fields"),
        "kmax": Opt(float, 2.0, "strichartz: spectral radius of the random fields"),
        "max_spread": Opt(float, None, "verdict threshold on max/min (default per estimate)"),
        "horizon_c": Opt(float, 2.0, "validity-horizon factor"),
    },
    "scatter": {
        **MODEL,
        "n": Opt(int, 1024, "grid points per axis"),
        "box": Opt(float, 80.0, "box half-length L"),
        "init": Opt(str, "gauss:width=1", "profile; rescaled to the requested delta unless amp is given"),
        "delta": Opt(float, 0.05, "smallness target"),
        "dt": Opt(float, 0.01, "time step"),
        "T_end": Opt(float, 40.0, "final time"),
        "checkpoints": Opt(_floats, [2, 4, 8, 16], "interaction-picture checkpoints"),
        "decay_checkpoints": Opt(_floats, [10, 20, 40], "weighted-decay checkpoints"),
        "snapshot_every": Opt(float, 0.5, "time between stored snapshots"),
        "dealias_mode": Opt(str, "two-thirds", "dealiasing mode", ("pad", "two-thirds")),
        "boundary_tolerance": Opt(float, 1e-6, "allowed mass share in the outer 10% strip"),
    },
    "indices": {
        "ks": Opt(_ints, [3, 4, 8, 9, 10, 12], "values of k to tabulate"),
    },
}

DEFAULT_PROBES = {
    "smoothing": {"box": 32.0, "nt": 200, "width": 1.0, "max_spread": 4.0},
    "maximal": {"box": 8.0, "nt": 128, "width": 2.0, "max_spread": 2.0},
    "strichartz": {"box": 32.0, "nt": 256, "width": 4.0, "max_spread": 5.0},
}


def _flatten(cfg: dict, allowed: dict) -> dict:
    out = {}
    for key, val in cfg.items():
        if key in ("grid", "model") and isinstance(val, dict):
            for sub, v in val.items():
                name = "box" if sub in ("box", "L") and key == "grid" else sub
                if name not in allowed:
                    raise ConfigError(f"unknown config key '{key}.{sub}'")
                out[name] = v
        elif key in ("seed", "out_dir", "command"):
            out[key] = val
        elif key in allowed:
            out[key] = val
        else:
            raise ConfigError(f"unknown config key '{key}'")
    return out


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def resolve(command: str, cfg: dict, flags: dict) -> dict:
    """Defaults < config < flags; values are coerced through the schema types."""
    schema = COMMANDS[command]
    params: dict[str, Any] = {k: o.default for k, o in schema.items()}
    params.update({"seed": 0, "out_dir": "zk-out"})
    flat = _flatten(cfg, schema)
    if "command" in flat and flat.pop("command") != command:
        raise ConfigError(f"config is for command '{cfg['command']}', not '{command}'")
    params.update(flat)
    params.update({k: v for k, v in flags.items() if v is not None})
    for key, opt in schema.items():
        val = params[key]
        if val is None:
            continue
        try:
            params[key] = opt.type(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for '{key}': {val!r} ({exc})") from exc
        if opt.choices and params[key] not in opt.choices:
            raise ConfigError(f"'{key}' must be one of {opt.choices}, got {params[key]!r}")
    params["seed"] = int(params["seed"])
    return params


def config_hash(command: str, params: dict) -> str:
    canon = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in params.items() if k != "out_dir"}
    blob = json.dumps({"command": command, **canon}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# -- run context -----------------------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    config_hash: str
    tool_version: str = __version__
    started: str = ""
    finished: str = ""
    files: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    passed: bool = True

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "started": self.started,
            "finished": self.finished,
            "files": self.files,
            "verdicts": self.verdicts,
            "passed": self.passed,
        }


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command: str, params: dict):
        self.params = params
        self.out = Path(params["out_dir"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, config_hash(command, params), started=_now())

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, path: Path) -> Path:
        rel = str(Path(path).relative_to(self.out))
        self.manifest.files[rel] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        return path

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        tmp = p.with_name(p.name + ".tmp")
        tmp.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        os.replace(tmp, p)
        return self.record(p)

    def verdict(self, name: str, ok: bool, **detail) -> None:
        self.manifest.verdicts[name] = {"passed": bool(ok), **_jsonable(detail)}
        self.manifest.passed &= bool(ok)

    def finish(self) -> int:
        self.manifest.finished = _now()
        p = self.out / "manifest.json"
        tmp = p.with_name("manifest.json.tmp")
        tmp.write_text(json.dumps(_jsonable(self.manifest.to_json()), indent=2, sort_keys=True) + "\n")
        os.replace(tmp, p)
        return EXIT_OK if self.manifest.passed else EXIT_VERDICT


# -- initial data ------------------------------------------------------------------------------

INIT_KINDS = ("gauss", "cos", "qmul", "file")


def _kv(body: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def ground_state_cached(k: int, spec: GridSpec, tol: float, cache_dir: Path | None, max_iters: int = 500):
    """Solve or load ``Q`` keyed by ``(k, n, box, tol)``."""
    from .groundstate import load, save, solve_ground_state

    if cache_dir is not None:
        name = f"Q_k{k}_n{spec.n}_L{spec.L:g}_tol{tol:g}.zkf"
        path = cache_dir / name
        if path.exists() and path.with_name(name + ".json").exists():
            return load(path)
    g = solve_ground_state(k, spec, tol, max_iters=max_iters)
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        save(g, path)
    return g


def make_initial(descriptor: str, spec: GridSpec, k: int, cache_dir: Path | None = None, tol: float = 1e-11) -> Field:
    """Build initial data from ``kind:key=value,...``.

    Kinds: ``gauss:amp=,width=,x0=,y0=``; ``cos:amp=,j=,m=`` (the mode
    ``amp cos(pi (j x + m y)/L)``); ``qmul:c=,k=`` (``c`` times the ground
    state, solved on ``spec`` or loaded from the cache); ``file:path`` (a
    ZKF1 file on the same grid).
    """
    kind, _, body = descriptor.partition(":")
    kind = kind.strip()
    if kind == "file":
        f, _ = zkf.read(body)
        if f.spec != spec:
            raise ValueError(f"file grid {f.spec} does not match run grid {spec}")
        return f
    args = _kv(body)

    def take(name, default):
        return float(args.pop(name, default))

    if kind == "gauss":
        amp, w, x0, y0 = take("amp", 1.0), take("width", 1.0), take("x0", 0.0), take("y0", 0.0)
        X, Y = spec.mesh
        out = Field(spec, amp * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2 * w * w)))
    elif kind == "cos":
        amp, j, m = take("amp", 1.0), take("j", 1), take("m", 0)
        X, Y = spec.mesh
        out = Field(spec, amp * np.cos(math.pi * (j * X + m * Y) / spec.L))
    elif kind == "qmul":
        c = take("c", 1.0)
        kq = int(take("k", k))
        out = ground_state_cached(kq, spec, tol, cache_dir).Q * c
    else:
        raise ValueError(f"unknown initial-data kind {kind!r}; known kinds: {', '.join(INIT_KINDS)}")
    if args:
        raise ValueError(f"unknown parameters for {kind}: {', '.join(sorted(args))}")
    return out


# -- commands -----------------------------------------------------------------------------------


def _spec(p) -> GridSpec:
    return GridSpec(p["n"], p["box"])


def cmd_groundstate(run: Run) -> None:
    from .groundstate import (
        ground_state_energy,
        pohozaev_check,
        save,
        solve_ground_state,
        solve_psi_and_rescale,
        GroundState,
    )

    p = run.params
    spec = _spec(p)
    if p["route"] == "psi":
        sol = solve_psi_and_rescale(p["k"], spec, p["tol"], p["max_iters"])
        g = GroundState.from_field(p["k"], sol.Q)
        extra = {"mass_psi": sol.mass_psi, "mass_gap": sol.mass_gap}
    else:
        g = solve_ground_state(p["k"], spec, p["tol"], max_iters=p["max_iters"])
        extra = {}
    q_path, side = save(g, run.path("Q.zkf"))
    run.record(q_path)
    run.record(side)
    res = pohozaev_check(g)
    en = ground_state_energy(g)
    run.write_json(
        "groundstate_report.json",
        {
            **g.sidecar(),
            "pohozaev": {"r1": res.r1, "r2": res.r2, "r3": res.r3},
            "energy": en.energy,
            "energy_closed_form": en.closed_form,
            "energy_gap": en.gap,
            **extra,
        },
    )
    run.verdict("residual", g.residual <= max(p["tol"], 1e-10), residual=g.residual)
    run.verdict("pohozaev", res.worst <= p["pohozaev_tol"], worst=res.worst)


def cmd_gn_constant(run: Run) -> None:
    from .groundstate import gn_test_family, sharp_constant, solve_psi_and_rescale

    p = run.params
    spec = _spec(p)
    g = ground_state_cached(p["k"], spec, p["tol"], run.out / "cache", p["max_iters"])
    psi = solve_psi_and_rescale(p["k"], spec, p["tol"], p["max_iters"])
    fam = gn_test_family(spec, p["samples"], seed=p["seed"])
    rep = sharp_constant(g, psi.mass_psi, fam)
    run.write_json("gn_report.json", {**rep.to_json(), "ratios": rep.ratios})
    run.verdict("formulas_agree", rep.formula_gap <= 1e-6, gap=rep.formula_gap)
    run.verdict("equality_at_Q", rep.equality_gap_at_Q <= 1e-6, gap=rep.equality_gap_at_Q)
    run.verdict("no_violation", rep.worst_violation <= p["violation_tol"], worst=rep.worst_violation)


def cmd_evolve(run: Run) -> None:
    from .evolve import ConservedLedger, EvolveConfig, evolve
    from .thresholds import dichotomy_curve, threshold_check, trap_monitor

    p = run.params
    spec = _spec(p)
    k = p["k"]
    cache = run.out / "cache"
    u0 = make_initial(p["init"], spec, k, cache, p["tol"])
    if p["audit_ledger"]:
        try:
            ledger = ConservedLedger.from_csv(p["audit_ledger"], k)
        except (ValueError, KeyError) as exc:
            run.verdict("ledger_readable", False, error=str(exc))
            return
        run.verdict("ledger_readable", True, rows=len(ledger.rows))
        first = ledger.rows[0] if ledger.rows else None
        ref = initial_invariants(u0, k)
        gap = max(abs(first[c] - ref[c]) / max(abs(ref[c]), 1e-10) for c in ref) if first else math.inf
        run.verdict("matches_initial_data", gap <= p["conservation_tol"], gap=gap)
    else:
        cfg = EvolveConfig(
            k=k, dt=p["dt"], T_end=p["T_end"], dealias_pad=p["dealias_pad"],
            dealias_mode=p["dealias_mode"], snapshot_stride=p["snapshot_stride"],
            boundary_tolerance=p["boundary_tolerance"], growth_factor=p["growth_factor"],
            keep_snapshots=False,
        )
        snap_dir = run.path("snapshots/placeholder").parent if p["write_snapshots"] else None
        result = evolve(u0, cfg, snapshot_dir=snap_dir)
        ledger = result.ledger
        if snap_dir is not None:
            for f in sorted(snap_dir.glob("snap_*.zkf")):
                run.record(f)
        run.record(ledger.to_csv(run.path("ledger.csv")))
        run.verdict("completed", ledger.status in ("ok", "growth"), status=ledger.status, message=ledger.message)
    drifts = {"mass_drift": ledger.drift("mass"), "energy_drift": ledger.drift("energy")}
    run.write_json("conservation.json", {**drifts, "status": ledger.status, "rows": len(ledger.rows)})
    run.verdict("conservation", max(drifts.values()) <= p["conservation_tol"], **drifts)
    if k >= 2:
        g = ground_state_cached(k, spec, p["tol"], cache, p["max_iters"])
        rep = threshold_check(u0, k, g)
        run.write_json("threshold.json", rep.to_json())
        curve = dichotomy_curve(u0, k, g) if k >= 3 else None
        if curve is not None:
            run.write_json("dichotomy.json", curve.to_json())
        if rep.passes:
            verdict = trap_monitor(ledger, rep, curve)
            run.write_json("trap.json", verdict.to_json())
            run.verdict("trap", verdict.passed, min_margin=verdict.min_margin, reason=verdict.reason)


def initial_invariants(u0: Field, k: int) -> dict:
    """Mass and energy of ``u0`` as the ledger computes them."""
    from .calculus import energy, mass

    return {"mass": mass(u0), "energy": energy(u0, k)}


def cmd_threshold(run: Run) -> None:
    from .thresholds import dichotomy_curve, threshold_check

    p = run.params
    spec = _spec(p)
    k = p["k"]
    cache = run.out / "cache"
    u0 = make_initial(p["init"], spec, k, cache, p["tol"])
    g = ground_state_cached(k, spec, p["tol"], cache, p["max_iters"])
    rep = threshold_check(u0, k, g)
    run.write_json("threshold.json", rep.to_json())
    if k >= 3:
        curve = dichotomy_curve(u0, k, g)
        run.write_json("dichotomy.json", curve.to_json())
        run.verdict("equivalence", curve.agrees)


def cmd_decay(run: Run) -> None:
    from .linear_group import DecayProbeConfig, decay_probe

    p = run.params
    spec = _spec(p)
    u0 = make_initial(p["init"], spec, 3)
    cfg = DecayProbeConfig(p["theta"], p["eps"], p["t_min"], p["t_max"], p["samples"], p["horizon_c"])
    res = decay_probe(u0, cfg)
    run.write_json(
        "decay.json",
        {
            "slope": res.slope, "expected": res.expected, "constant": res.constant,
            "times": res.times, "norms": res.norms, "horizon": res.horizon,
            "contaminated": res.contaminated, "max_boundary_fraction": res.max_boundary_fraction,
        },
    )
    run.verdict("exponent", abs(res.slope - res.expected) <= p["slope_tol"], slope=res.slope)
    run.verdict("inside_box", not res.contaminated, max_boundary_fraction=res.max_boundary_fraction)


def cmd_dispersive_probe(run: Run) -> None:
    from . import linear_group as lg

    p = run.params
    est = p["estimate"]
    d = DEFAULT_PROBES[est]
    box = p["box"] or d["box"]
    nt = p["nt"] or d["nt"]
    width = p["width"] or d["width"]
    max_spread = p["max_spread"] or d["max_spread"]
    spec = GridSpec(p["n"], box)
    if est == "smoothing":
        lams = [f * math.pi / box for f in p["freqs"]]
        fam = lg.modulated_family(spec, lams, width)
        stats = lg.smoothing_probe(fam, p["T"], nt, p["order"], p["freqs"], p["horizon_c"])
        bounded = stats.spread <= max_spread
        expect = p["order"] == 1
    elif est == "maximal":
        fam = lg.dilated_family(spec, p["scales"], width)
        stats = lg.maximal_probe(fam, p["s"], p["T"], nt, p["scales"], p["horizon_c"], clip_to_horizon=True)
        bounded = stats.spread <= max_spread and stats.growth_exponent <= 0.1
        expect = p["s"] > 0.75
    else:
        fam = lg.random_bandlimited_family(spec, p["count"], p["kmax"], width, seed=p["seed"])
        stats = lg.strichartz_probe(fam, p["theta"], p["eps"], p["T"], nt, None, p["horizon_c"])
        bounded = stats.spread <= max_spread
        expect = True
    stats.to_csv(run.path("probe.csv"))
    run.record(run.out / "probe.csv")
    run.write_json(
        "probe.json",
        {
            "estimate": est, "name": stats.name, "max": stats.max, "min": stats.min,
            "spread": stats.spread, "growth_exponent": stats.growth_exponent,
            "horizon": stats.horizon, "bounded": bounded, "extra": stats.extra,
        },
    )
    run.verdict("expected_behaviour", bounded == expect, bounded=bounded, expected_bounded=expect)


def cmd_scatter(run: Run) -> None:
    from .calculus import Trajectory
    from .evolve import EvolveConfig, evolve
    from .scattering import ScatterConfig, amplitude_for_delta, scatter_report

    p = run.params
    spec = _spec(p)
    k = p["k"]
    scfg = ScatterConfig(k, p["delta"], tuple(p["checkpoints"]), tuple(p["decay_checkpoints"]))
    desc = p["init"]
    u0 = make_initial(desc, spec, k, run.out / "cache")
    if desc.startswith("gauss") and "amp=" not in desc:
        u0 = u0 * amplitude_for_delta(u0, scfg, 0.999 * p["delta"])
    stride = max(1, round(p["snapshot_every"] / p["dt"]))
    cfg = EvolveConfig(
        k=k, dt=p["dt"], T_end=p["T_end"], dealias_mode=p["dealias_mode"],
        snapshot_stride=stride, boundary_tolerance=p["boundary_tolerance"],
    )
    result = evolve(u0, cfg)
    run.record(result.ledger.to_csv(run.path("ledger.csv")))
    traj = result.trajectory or Trajectory.from_snapshots([(0.0, u0), (result.t_final, result.final)])
    report, state = scatter_report(u0, traj, scfg)
    report["run_status"] = result.ledger.status
    run.write_json("scatter.json", report)
    run.record(zkf.write(run.path("f_plus.zkf"), state.f_plus, k, state.checkpoints[-1] if state.checkpoints else 0.0))
    v = report["verdicts"]
    run.verdict("completed", result.ledger.status == "ok", status=result.ledger.status)
    run.verdict("cauchy", v["cauchy"], tail_norms=report["tail_norms"])
    run.verdict("weighted_decay", v["weighted_decay_stable"], M_T=report["M_T"])
    run.verdict("hamiltonian_tail", v["hamiltonian_tail"], slope=report["G_slope"])


def cmd_indices(run: Run) -> None:
    from .scattering import k_feasibility
    from .thresholds import critical_indices, s_k

    rows = []
    for k in run.params["ks"]:
        row = {"k": k, "s_k": str(s_k(k))}
        if k >= 3:
            row.update(critical_indices(k).to_json())
        ok, thr = k_feasibility(k)
        row.update({"scattering_range": ok, "feasibility_threshold": thr})
        rows.append(row)
    run.write_json("indices.json", {"rows": rows})


HANDLERS = {
    "groundstate": cmd_groundstate,
    "gn-constant": cmd_gn_constant,
    "evolve": cmd_evolve,
    "threshold": cmd_threshold,
    "decay": cmd_decay,
    "dispersive-probe": cmd_dispersive_probe,
    "scatter": cmd_scatter,
    "indices": cmd_indices,
}


# -- argument parsing -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file (flags override it)")
    common.add_argument("--out-dir", dest="out_dir", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed for random families")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="zk", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, schema in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=f"{name} run")
        for key, opt in schema.items():
            flag = "--" + key.replace("_", "-")
            kw = {"dest": key, "default": None, "help": opt.help}
            if opt.choices:
                kw["choices"] = opt.choices
            sp.add_argument(flag, **kw)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = load_config(ns.config) if ns.config else {}
        params = resolve(ns.command, cfg, flags)
    except (ConfigError, OSError) as exc:
        print(f"zk: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        r = Run(ns.command, params)
        HANDLERS[ns.command](r)
        code = r.finish()
    except Exception as exc:  # operational failure: report, do not trace by default
        log.debug("failure", exc_info=True)
        print(f"zk {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name, v in r.manifest.verdicts.items():
        print(f"{name}: {'pass' if v['passed'] else 'FAIL'}")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
