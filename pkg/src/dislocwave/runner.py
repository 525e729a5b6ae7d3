"""Command-line entry point: ``dislocwave <subcommand> --config path [--set k=v]... [--out dir]``.

The config is JSON. Defaults are merged in, ``--set`` overrides are layered
on top (dotted keys, values parsed as JSON when possible), and the resolved
config is validated against a closed schema before anything is computed.
Its SHA-256 over canonical JSON (sorted keys, no whitespace) is the config
hash; every output file carries it in its first line.

Exit codes: 0 success, 2 validation error, 3 numerical blow-up. Failures
write ``error.json`` into the output directory and echo it on stderr.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from dislocwave import __version__, abelianize, kernels
from dislocwave.charges import (
    charge_series, continuity_residual_1, continuity_residual_2, max_continuity_residual,
)
from dislocwave.continuum import (
    FieldState, ModelParams, kink_center, l2_distance, lax_coeffs, pde_evolve,
)
from dislocwave.lattice import LatticeParams, LatticeState, lattice_energy, lattice_evolve, sine_gordon_kink
from dislocwave.numerics import Grid1D, NumericalBlowUp
from dislocwave.qideform import DeformationSpec, adapted_kink, deformed_vacua, qi_run
from dislocwave.solutions import (
    KinkParams, aligned_kink_error, bt_generate, gamma_of, kink, kink_derivatives, kink_residual,
    kink_state, riccati_residuals,
)

log = logging.getLogger("dislocwave")

EXIT_OK, EXIT_VALIDATION, EXIT_BLOWUP = 0, 2, 3
COMMANDS = ("simulate-lattice", "simulate-pde", "kink", "backlund", "charges", "qi-run",
            "abelianize", "sweep")
HASH_PREFIX = "# config_sha256="

DEFAULTS = {
    "seed": 0,
    "grid": {"x_min": -30.0, "x_max": 30.0, "n_points": 2048},
    "model": {"alpha": 0.0, "beta": 1.0, "gamma": 2.0, "delta": 1.0, "integrable": True},
    "kink": {"mu": 0.5, "sign": 1, "x0": 0.0},
    "initial": "kink",
    "lattice": {"k": 1.0, "alpha": 0.0, "beta": 0.0, "f0": 0.0, "a": 2 * math.pi,
                "boundary": "fixed-ends", "n_sites": 64, "init": "random", "amplitude": 0.05,
                "spacing": 0.1, "velocity": 0.0},
    "deformation": {"kind": "none", "epsilon": 0.0, "potential": "sin", "potential_coeff": 0.0,
                    "M": 1, "family": "constant", "kappa": 0.0, "p": 1.0, "lam": [0.0, 1.0]},
    "lambda": [[0.0, 1.0]],
    "time": {"dt": 1e-4, "T": 1.0, "stride": 100},
    "charges": {"N": 4},
    "tolerances": {"eps_abs": 1e-6, "tol_c": 1e-4, "bt_residual": 1e-4},
    "sweep": {"command": "simulate-pde", "parameter": "kink.mu", "values": [], "workers": 1},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_lam = {"oneOf": [{"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                  {"type": "string"}, _num]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


SCHEMA = _obj({
    "command": {"enum": list(COMMANDS)},
    "seed": {"type": "integer", "minimum": 0},
    "grid": _obj({"x_min": _num, "x_max": _num, "n_points": {"type": "integer", "minimum": 8}}),
    "model": _obj({"alpha": _num, "beta": _num, "gamma": _num, "delta": _num,
                   "integrable": {"type": "boolean"}}),
    "kink": _obj({"mu": _num, "sign": {"enum": [1, -1]}, "x0": _num}),
    "initial": {"enum": ["kink", "adapted-kink", "backlund", "vacuum"]},
    "lattice": _obj({"k": _num, "alpha": _num, "beta": _num, "f0": _num, "a": _num,
                     "boundary": {"enum": ["fixed-ends", "free-ends"]},
                     "n_sites": {"type": "integer", "minimum": 2},
                     "init": {"enum": ["random", "pluck", "sine-gordon-kink", "zero"]},
                     "amplitude": _num, "spacing": _pos, "velocity": _num}),
    "deformation": _obj({"kind": {"enum": ["none", "potential-replace", "power-eps", "shift-D"]},
                         "epsilon": _num, "potential": {"type": "string"},
                         "potential_coeff": _num, "M": {"type": "integer", "minimum": 1},
                         "family": {"enum": ["constant", "cos-half", "anomaly-killing"]},
                         "kappa": _num, "p": _num, "lam": _lam}),
    "lambda": {"type": "array", "items": _lam},
    "time": _obj({"dt": _pos, "T": {"type": "number", "minimum": 0},
                  "stride": {"type": "integer", "minimum": 1}}),
    "charges": _obj({"N": {"type": "integer", "minimum": 1, "maximum": 8}}),
    "tolerances": _obj({"eps_abs": _pos, "tol_c": _pos, "bt_residual": _pos}),
    "sweep": _obj({"command": {"enum": [c for c in COMMANDS if c != "sweep"]},
                   "parameter": {"type": "string"}, "values": {"type": "array"},
                   "workers": {"type": "integer", "minimum": 1}}),
})


class ConfigError(ValueError):
    """Config failed to parse or validate."""


class RunFailure(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


# ---------------------------------------------------------------- config

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True,
                      allow_nan=False)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("ascii")).hexdigest()


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_set(item: str):
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_set(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {key!r}: {p!r} is not a section")
        node = nxt
    node[parts[-1]] = value


def resolve_config(raw: dict, command: str, overrides=()) -> dict:
    """Defaults + file + overrides, validated; ``command`` recorded in the result."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "command" in raw and raw["command"] != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
    cfg = _merge(DEFAULTS, raw)
    for key, value in overrides:
        apply_set(cfg, key, value)
    cfg["command"] = command
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg: dict) -> None:
    try:
        _grid(cfg)
        _model(cfg)
        _kink_params(cfg)
        _deformation(cfg)
        _lattice_params(cfg)
        [abelianize.SpectralParam.parse(v) for v in cfg["lambda"]]
        for name in ("x_min", "x_max"):
            if not math.isfinite(cfg["grid"][name]):
                raise ValueError(f"grid.{name} must be finite")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None


# ---------------------------------------------------------------- builders

def _grid(cfg) -> Grid1D:
    g = cfg["grid"]
    return Grid1D(float(g["x_min"]), float(g["x_max"]), int(g["n_points"]))


def _model(cfg) -> ModelParams:
    return ModelParams(**{k: (bool(v) if k == "integrable" else float(v))
                          for k, v in cfg["model"].items()})


def _kink_params(cfg) -> KinkParams:
    k, m = cfg["kink"], cfg["model"]
    return KinkParams(mu=float(k["mu"]), sign=int(k["sign"]), x0=float(k["x0"]),
                      beta=float(m["beta"]), delta=float(m["delta"]))


def _deformation(cfg) -> DeformationSpec:
    d = dict(cfg["deformation"])
    d["lam"] = abelianize.SpectralParam.parse(d["lam"]).lam
    return DeformationSpec(**d)


def _lattice_params(cfg) -> LatticeParams:
    c = cfg["lattice"]
    return LatticeParams(k=c["k"], alpha=c["alpha"], beta=c["beta"], f0=c["f0"], a=c["a"],
                         boundary=c["boundary"])


def _lams(cfg) -> list:
    return [abelianize.SpectralParam.parse(v).lam for v in cfg["lambda"]]


def _initial_state(cfg) -> FieldState:
    g, kp = _grid(cfg), _kink_params(cfg)
    kind = cfg["initial"]
    if kind == "vacuum":
        return FieldState(np.zeros(g.n_points), g, 0.0)
    if kind == "backlund":
        return bt_generate(FieldState(np.zeros(g.n_points), g, 0.0), kp.mu)
    if kind == "adapted-kink":
        vac = deformed_vacua(_deformation(cfg), _model(cfg), kp.sign)
        return FieldState(adapted_kink(kink(g.x, 0.0, kp), vac, kp.sign), g, 0.0)
    return kink_state(g, 0.0, kp)


def _steps(cfg) -> tuple:
    t = cfg["time"]
    n = int(round(t["T"] / t["dt"]))
    return float(t["dt"]), n, int(t["stride"])


# ---------------------------------------------------------------- output

class Output:
    """Files of one run; each starts with the config hash."""

    def __init__(self, out_dir: Path, digest: str):
        self.dir = out_dir
        self.digest = digest
        self.files = []

    def _path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.dir / name

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        buf.write(f"{HASH_PREFIX}{self.digest}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self._path(name).write_text(buf.getvalue(), encoding="utf-8")

    def text(self, name: str, body: str) -> None:
        """Pre-formatted CSV body, prefixed with the hash line."""
        self._path(name).write_text(f"{HASH_PREFIX}{self.digest}\n" + body, encoding="utf-8")

    def ndjson(self, name: str, records, **header) -> None:
        head = {"type": "header", "config_sha256": self.digest, **_jsonable(header)}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(_jsonable(r), sort_keys=True) for r in records]
        self._path(name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def versions() -> dict:
    return {"dislocwave": __version__, "numpy": np.__version__, "jsonschema": _jsonschema_version(),
            "python": platform.python_version(), "kernels": kernels.BACKEND}


def _jsonschema_version() -> str:
    from importlib.metadata import version
    return version("jsonschema")


def _snapshot_rows(traj):
    for s in traj:
        for x, u, ux in zip(s.grid.x, s.u, s.ux):
            yield (s.t, x, u, ux)


# ---------------------------------------------------------------- subcommands

def cmd_kink(cfg, out: Output) -> dict:
    kp, g = _kink_params(cfg), _grid(cfg)
    dt, n, stride = _steps(cfg)
    times = [k * dt for k in range(0, n + 1, stride)] if n else [0.0]
    if n and times[-1] != n * dt:
        times.append(n * dt)
    rows = []
    res = 0.0
    for t in times:
        d = kink_derivatives(g.x, t, kp)
        rows += list(zip([t] * g.n_points, g.x, d["u"], d["ux"], d["ut"]))
        res = max(res, float(np.max(np.abs(kink_residual(g.x, t, kp)))))
    out.csv("profile.csv", ["t", "x", "u", "u_x", "u_t"], rows)
    return {"velocity": kp.velocity, "A_vacuum": kp.A, "max_residual": res}


def cmd_backlund(cfg, out: Output) -> dict:
    kp, g, p = _kink_params(cfg), _grid(cfg), _model(cfg)
    seed = FieldState(np.zeros(g.n_points), g, 0.0)
    tol = cfg["tolerances"]["bt_residual"]
    new = bt_generate(seed, kp.mu, check_params=p if p.in_integrable_sector else None, tol=tol)
    err, center = aligned_kink_error(new, kp)
    sign = 1 if new.u[-1] >= new.u[0] else -1
    aligned = KinkParams(mu=abs(kp.mu), sign=sign, x0=center, beta=kp.beta, delta=kp.delta)
    exact = kink(g.x, 0.0, aligned)
    summary = {"sup_error_aligned": err, "center": center}
    if p.in_integrable_sector:
        # Gamma = tan((u' - u)/4) against the seed's Riccati pair at lambda = i mu
        ut = kink_derivatives(g.x, 0.0, aligned)["ut"]
        rx, rt = riccati_residuals(gamma_of(new.u, seed.u), new, seed, lax_coeffs(seed, p),
                                   1j * kp.mu, ut, np.zeros(g.n_points))
        m = g.n_points // 10
        summary["riccati_x_max"] = float(np.max(np.abs(rx[m:-m])))
        summary["riccati_t_max"] = float(np.max(np.abs(rt[m:-m])))
    out.csv("profile.csv", ["x", "u_generated", "u_exact_aligned"], zip(g.x, new.u, exact))
    return summary


def _evolve(cfg, deformation=None):
    dt, n, stride = _steps(cfg)
    return pde_evolve(_initial_state(cfg), _model(cfg), deformation, dt=dt, n_steps=n,
                      stride=stride)


def _charge_outputs(cfg, traj, out: Output, params):
    cs = charge_series(traj, cfg["charges"]["N"], params, eps_abs=cfg["tolerances"]["eps_abs"])
    out.text("charges.csv", cs.to_csv())
    return cs


def _snapshot_records(cs, traj) -> list:
    recs = []
    for i, s in enumerate(traj):
        rec = {"type": "snapshot", "t": s.t, "Q": cs.Q[i],
               **{k: v[i] for k, v in cs.extra.items()}}
        try:
            rec["center"] = kink_center(s)
        except ValueError:
            pass
        recs.append(rec)
    return recs


def cmd_simulate_pde(cfg, out: Output) -> dict:
    spec = _deformation(cfg)
    traj = _evolve(cfg, None if spec.kind == "none" else spec)
    out.csv("snapshots.csv", ["t", "x", "u", "u_x"], _snapshot_rows(traj))
    p = _model(cfg)
    cs = _charge_outputs(cfg, traj, out, p)
    summary = {"drift": cs.drifts(), "n_snapshots": len(traj),
               "_snapshots": _snapshot_records(cs, traj)}
    if spec.kind == "none" and cfg["initial"] in ("kink", "backlund") and p.in_integrable_sector:
        kp = _kink_params(cfg)
        if cfg["initial"] == "kink":
            summary["max_l2_error"] = max(l2_distance(s.u, kink(s.grid.x, s.t, kp), s.grid)
                                          for s in traj)
        if len(traj) > 1:
            centers = [kink_center(s, kp.sign * math.pi) for s in traj]
            summary["velocity"] = float(np.polyfit([s.t for s in traj], centers, 1)[0])
        summary["velocity_exact"] = kp.velocity
    return summary


def cmd_charges(cfg, out: Output) -> dict:
    p = _model(cfg)
    spec = _deformation(cfg)
    traj = _evolve(cfg, None if spec.kind == "none" else spec)
    cs = _charge_outputs(cfg, traj, out, p)
    summary = {"drift": cs.drifts(), "_snapshots": _snapshot_records(cs, traj)}
    if spec.kind == "none" and p.in_integrable_sector and len(traj) >= 3:
        summary["continuity_1"] = max_continuity_residual(traj, lambda w: continuity_residual_1(w, p))
        summary["continuity_2"] = max_continuity_residual(traj, lambda w: continuity_residual_2(w, p))
    return summary


def cmd_qi_run(cfg, out: Output) -> dict:
    p, spec = _model(cfg), _deformation(cfg)
    dt, n, stride = _steps(cfg)
    tol = cfg["tolerances"]
    lams = _lams(cfg)
    res = qi_run(_initial_state(cfg), p, spec, T=n * dt, dt=dt, stride=stride,
                 N=cfg["charges"]["N"], tol_c=tol["tol_c"], eps_abs=tol["eps_abs"],
                 lam=lams[0] if lams else None)
    out.text("charges.csv", res.charges.to_csv())
    rep = res.report
    lines = rep.to_ndjson(classification=res.classification).splitlines()
    out.ndjson("anomaly.ndjson", [json.loads(line) for line in lines])
    drifts = res.charges.drifts()
    out.csv("classification.csv", ["charge", "drift", "status"],
            [(k, drifts[k], v) for k, v in res.classification.items()])
    if rep.q0_rate:
        exact = rep.q0_exact or [complex("nan")] * len(rep.q0_rate)
        out.csv("q0_rate.csv", ["t", "rate_fd_re", "rate_fd_im", "predicted_re", "predicted_im",
                                "exact_re", "exact_im"],
                ((t, a.real, a.imag, b.real, b.imag, c.real, c.imag)
                 for t, a, b, c in zip(rep.rate_times, map(complex, rep.q0_rate),
                                       map(complex, rep.q0_predicted), map(complex, exact))))
    return {"classification": res.classification, "drift": drifts}


def cmd_abelianize(cfg, out: Output) -> dict:
    p, spec = _model(cfg), _deformation(cfg)
    traj = _evolve(cfg, None if spec.kind == "none" else spec)
    s0 = traj[0]
    rows, q0rows, summary = [], [], {}
    for lam in _lams(cfg):
        g0 = abelianize.solve_gauge0(s0, lam)
        for x, am, ap in zip(s0.grid.x, g0.a_minus, g0.a_plus):
            rows.append((lam.real, lam.imag, x, am.real, am.imag, ap.real, ap.imag))
        series = abelianize.Q0_series(traj, lam)
        for t, v, b in zip(series.times, series.values, series.blowup):
            q0rows.append((lam.real, lam.imag, t, v.real, v.imag, b))
        summary[f"{lam}"] = {"Q0": series.values[0], "drift": series.drift(),
                             "blowup": any(series.blowup), "residual": g0.residual}
    out.csv("gauge.csv", ["lam_re", "lam_im", "x", "a_minus_re", "a_minus_im", "a_plus_re",
                          "a_plus_im"], rows)
    out.csv("q0.csv", ["lam_re", "lam_im", "t", "Q0_re", "Q0_im", "blowup"], q0rows)
    return summary


def _lattice_initial(cfg) -> LatticeState:
    c, p = cfg["lattice"], _lattice_params(cfg)
    n = int(c["n_sites"])
    if c["init"] == "sine-gordon-kink":
        return sine_gordon_kink(n, c["spacing"], p, c["velocity"])
    if c["init"] == "zero":
        return LatticeState(np.zeros(n), np.zeros(n))
    if c["init"] == "pluck":
        y = np.zeros(n)
        y[n // 2] = c["amplitude"]
        return LatticeState(y, np.zeros(n))
    rng = np.random.default_rng(cfg["seed"])
    return LatticeState(c["amplitude"] * rng.standard_normal(n), c["amplitude"] * rng.standard_normal(n))


def cmd_simulate_lattice(cfg, out: Output) -> dict:
    p = _lattice_params(cfg)
    dt, n, stride = _steps(cfg)
    traj = lattice_evolve(_lattice_initial(cfg), p, dt, n, stride)
    rows = ((s.t, i, y, v) for s in traj for i, (y, v) in enumerate(zip(s.y, s.v)))
    out.csv("snapshots.csv", ["t", "i", "y", "v"], rows)
    E = [lattice_energy(s, p) for s in traj]
    out.csv("energy.csv", ["t", "E"], zip([s.t for s in traj], E))
    scale = max(abs(E[0]), 1e-300)
    return {"energy_drift": float(max(abs(e - E[0]) for e in E) / scale), "E0": E[0],
            "_snapshots": [{"type": "snapshot", "t": s.t, "E": e} for s, e in zip(traj, E)]}


def _sweep_one(args):
    cfg, out_dir = args
    return execute(cfg, Path(out_dir))


def cmd_sweep(cfg, out: Output) -> dict:
    sw = cfg["sweep"]
    jobs = []
    for i, value in enumerate(sw["values"]):
        sub = {k: copy.deepcopy(v) for k, v in cfg.items() if k not in ("sweep", "command")}
        apply_set(sub, sw["parameter"], value)
        sub = resolve_config(sub, sw["command"])
        jobs.append((sub, str(out.dir / f"run{i:03d}-{config_hash(sub)[:12]}")))
    if sw["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=sw["workers"]) as pool:
            codes = list(pool.map(_sweep_one, jobs))
    else:
        codes = [_sweep_one(j) for j in jobs]
    rows = [(i, canonical_json(v), config_hash(j[0]), Path(j[1]).name, c)
            for i, (v, j, c) in enumerate(zip(sw["values"], jobs, codes))]
    out.csv("sweep.csv", ["index", "value", "config_sha256", "directory", "exit_code"], rows)
    return {"runs": len(jobs), "failed": sum(1 for c in codes if c != EXIT_OK)}


HANDLERS = {
    "simulate-lattice": cmd_simulate_lattice, "simulate-pde": cmd_simulate_pde,
    "kink": cmd_kink, "backlund": cmd_backlund, "charges": cmd_charges,
    "qi-run": cmd_qi_run, "abelianize": cmd_abelianize, "sweep": cmd_sweep,
}


# ---------------------------------------------------------------- driver

def write_error(out_dir: Path, code: int, kind: str, message: str, digest=None, **extra) -> dict:
    rec = {"type": "error", "error": kind, "message": message, "exit_code": code,
           "config_sha256": digest, **_jsonable(extra)}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "error.json").write_text(json.dumps(rec, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return rec


def execute(cfg: dict, out_dir: Path) -> int:
    """Run a resolved config; returns the exit code."""
    digest = config_hash(cfg)
    out = Output(out_dir, digest)
    t0 = time.perf_counter()
    try:
        summary = HANDLERS[cfg["command"]](cfg, out)
    except NumericalBlowUp as exc:
        write_error(out_dir, EXIT_BLOWUP, "blow-up", str(exc), digest, step=exc.step)
        return EXIT_BLOWUP
    except (ValueError, ConfigError) as exc:
        write_error(out_dir, EXIT_VALIDATION, "validation", str(exc), digest)
        return EXIT_VALIDATION
    records = summary.pop("_snapshots", [])
    records.append({"type": "result", "status": "ok", "summary": summary,
                    "files": sorted(out.files), "elapsed_s": round(time.perf_counter() - t0, 3)})
    out.ndjson("run.ndjson", records, config=cfg, versions=versions())
    (out_dir / "config.resolved.json").write_text(canonical_json(cfg) + "\n", encoding="utf-8")
    return EXIT_OK


def verify(out_dir: Path, cfg: dict | None = None) -> tuple[bool, list]:
    """Recompute the config hash and check it against every output file."""
    problems = []
    path = out_dir / "config.resolved.json"
    if not path.exists():
        return False, [f"{path} missing"]
    stored = json.loads(path.read_text(encoding="utf-8"))
    digest = config_hash(stored)
    if cfg is not None and config_hash(cfg) != digest:
        problems.append("resolved config differs from the one stored with the outputs")
    for f in sorted(out_dir.iterdir()):
        if f.name == "config.resolved.json" or not f.is_file():
            continue
        first = f.read_text(encoding="utf-8").split("\n", 1)[0]
        if f.suffix == ".csv":
            found = first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else None
        elif f.suffix in (".ndjson", ".json"):
            try:
                found = json.loads(first).get("config_sha256")
            except json.JSONDecodeError:
                found = None
        else:
            continue
        if found != digest:
            problems.append(f"{f.name}: hash {found!r} != {digest}")
    return not problems, problems


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dislocwave", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("verify",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted key; JSON value)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        out_dir = Path(args.out or ".")
        cfg = None
        try:
            if args.config:
                raw = load_config(args.config)
                stored = json.loads((out_dir / "config.resolved.json").read_text(encoding="utf-8"))
                cfg = resolve_config(raw, stored["command"], [parse_set(s) for s in args.set])
        except (ConfigError, OSError, KeyError) as exc:
            write_error(out_dir, EXIT_VALIDATION, "validation", str(exc))
            return EXIT_VALIDATION
        ok, problems = verify(out_dir, cfg)
        print(json.dumps({"verified": ok, "problems": problems}, sort_keys=True))
        return EXIT_OK if ok else EXIT_VALIDATION
    out_dir = Path(args.out or f"dislocwave-{args.command}")
    try:
        raw = load_config(args.config)
        cfg = resolve_config(raw, args.command, [parse_set(s) for s in args.set])
    except ConfigError as exc:
        write_error(out_dir, EXIT_VALIDATION, "validation", str(exc))
        return EXIT_VALIDATION
    return execute(cfg, out_dir)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
