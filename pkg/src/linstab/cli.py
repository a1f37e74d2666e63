"""Batch front end.

    linstab <profile|construct|simulate|verify|normalform> --config run.yaml --out results/

Exit codes: 0 success, 2 invalid configuration, 3 computation error (the
error class name is printed on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import constructions as cons
from . import io
from .diophantine import Frequency, build_profile
from .dynamics import State, integrate, measure_drift
from .errors import ComputationError, ConfigError, NotSeparable
from .fourier_taylor import AnalyticityWindow, FourierTaylorFunction, from_json, majorant_norm, to_json
from .normal_form import CONTRACTION, LIE_ORDER, SMALLNESS_C0, normalize

log = logging.getLogger("linstab")

DEFAULT_WINDOW = {"sigma": 0.1, "R": 2.0}


# -- config ------------------------------------------------------------------

def load_config(path: Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return doc


def _positive(cfg: dict, key: str, default=None, integer: bool = False):
    value = cfg.get(key, default)
    if value is None:
        raise ConfigError(f"missing '{key}'")
    try:
        value = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be a number") from None
    if integer and float(cfg.get(key, default)) != value:
        raise ConfigError(f"'{key}' must be an integer")
    if not value > 0 or not math.isfinite(value):
        raise ConfigError(f"'{key}' must be positive, got {value}")
    return value


def _frequency(cfg: dict) -> Frequency:
    spec = cfg.get("frequency", "sqrt2m1")
    try:
        return Frequency.parse(spec)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad frequency {spec!r}: {exc}") from None


def _window(cfg: dict, n: int) -> AnalyticityWindow:
    w = {**DEFAULT_WINDOW, **(cfg.get("window") or {})}
    sigma = _positive(w, "sigma")
    R = _positive(w, "R")
    if "n" in w and int(w["n"]) != n:
        raise ConfigError(f"window.n={w['n']} does not match the frequency dimension {n}")
    try:
        return AnalyticityWindow(sigma, R, n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _index_list(cfg: dict, key: str, default) -> list:
    value = cfg.get(key, default)
    if isinstance(value, int):
        value = [value]
    if not isinstance(value, list) or any(not isinstance(j, int) or j < 0 for j in value):
        raise ConfigError(f"'{key}' must be a list of non-negative integers")
    return value


# -- commands ------------------------------------------------------------------

def cmd_profile(cfg: dict, out: Path, figures: bool = True, threads: int = 1) -> dict:
    freq = _frequency(cfg)
    K_max = _positive(cfg, "K_max", 50, integer=True)
    profile = build_profile(freq, K_max)
    rows = [{"K": K, "psi": profile.psi(K), "lambda": profile.lam(K),
             "psi_lo": float(iv.lo), "psi_hi": float(iv.hi)}
            for K, iv in enumerate(profile.psi_table, start=1)]
    resolved = {"frequency": freq.name, "K_max": K_max}
    doc = {"provenance": io.provenance("profile", cfg, resolved), "frequency": freq.name,
           "K_max": K_max, "rows": rows}
    io.write_json(out / "profile.json", doc)
    Ks = [r["K"] for r in rows]
    io.write_columns(out / "profile_psi.csv", ("K", "psi"), Ks, [r["psi"] for r in rows])
    io.write_columns(out / "profile_lambda.csv", ("K", "lambda"), Ks, [r["lambda"] for r in rows])
    if figures:
        from .plotting import profile_figure
        profile_figure(rows, out / "profile.png", freq.name)
    return doc


def cmd_construct(cfg: dict, out: Path, figures: bool = True, threads: int = 1) -> dict | None:
    freq = _frequency(cfg)
    window = _window(cfg, freq.dim)
    js = _index_list(cfg, "j", [2])
    if not js:
        return None
    c = cfg.get("c")
    c = cons.min_family_constant(freq, window, max(js)) if c is None else _positive(cfg, "c")
    members = []
    for j in js:
        m = cons.instability_family_member(freq, window, j, c, strict=bool(cfg.get("strict", True)))
        io.write_json(out / f"hamiltonian_j{j}.json", to_json(m.hamiltonian()))
        members.append(m.to_json())
    resolved = {"frequency": freq.name, "window": window.to_json(), "j": js, "c": c}
    doc = {"provenance": io.provenance("construct", cfg, resolved), "frequency": freq.name,
           "window": window.to_json(), "c": c, "members": members}
    io.write_json(out / "construct.json", doc)
    return doc


def _hamiltonian(cfg: dict, base: Path) -> FourierTaylorFunction:
    src = cfg.get("hamiltonian")
    if src is None:
        raise ConfigError("missing 'hamiltonian' (interchange file path or inline mapping)")
    if isinstance(src, str):
        path = Path(src)
        if not path.is_absolute():
            path = base / path
        try:
            src = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read Hamiltonian: {exc}") from None
    try:
        return from_json(src)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad Hamiltonian: {exc}") from None


def cmd_simulate(cfg: dict, out: Path, figures: bool = True, threads: int = 1) -> dict:
    H = _hamiltonian(cfg, Path(cfg.get("_base", ".")))
    if not H.is_separable():
        raise ConfigError("Hamiltonian is not separable: the splitting integrator needs H = g(I) + u(theta)")
    dt = _positive(cfg, "dt", 1e-2)
    t_end = _positive(cfg, "t_end", 10.0)
    every = _positive(cfg, "sample_every", 1, integer=True)
    z = cfg.get("z0") or {}
    try:
        z0 = State(z.get("theta", [0.0] * H.n), z.get("I", [0.0] * H.n))
    except ValueError as exc:
        raise ConfigError(f"bad z0: {exc}") from None
    if z0.n != H.n:
        raise ConfigError("z0 dimension does not match the Hamiltonian")
    try:
        traj = integrate(H, z0, t_end, dt, every)
    except NotSeparable as exc:
        raise ConfigError(str(exc)) from None
    (out / "trajectory.csv").write_text(traj.to_csv())
    stats = measure_drift(traj)
    energy_error = float(np.abs(traj.H_values - traj.H_values[0]).max())
    resolved = {"dt": dt, "t_end": t_end, "sample_every": every,
                "z0": {"theta": z0.theta.tolist(), "I": z0.I.tolist()}}
    doc = {"provenance": io.provenance("simulate", cfg, resolved), "samples": len(traj),
           "sup_drift": stats.sup_drift, "max_energy_error": energy_error,
           "final": {"theta": traj.theta[-1].tolist(), "I": traj.I[-1].tolist()}}
    io.write_json(out / "simulate.json", doc)
    drift = np.abs(traj.I - traj.I[0]).max(axis=1)
    io.write_columns(out / "simulate_drift.csv", ("t", "drift"), traj.times, drift)
    if figures:
        from .plotting import trajectory_figure
        trajectory_figure(traj.times, traj.I, out / "simulate.png")
    return doc


def cmd_verify(cfg: dict, out: Path, figures: bool = True, threads: int = 1) -> dict:
    freq = _frequency(cfg)
    window = _window(cfg, freq.dim)
    js = _index_list(cfg, "j", [1, 2, 3, 4])
    if not js:
        return None
    c = cfg.get("c")
    c = cons.min_family_constant(freq, window, max(js)) if c is None else _positive(cfg, "c")
    sample = _positive(cfg, "sample_interval", 1.0)
    delta_ref = _positive(cfg, "delta_ref", 0.1)
    points = _positive(cfg, "delta_points", 10, integer=True)
    horizon = _positive(cfg, "check_horizon", 50.0)
    check_dt = _positive(cfg, "check_dt", 1e-2)
    profile = build_profile(freq, max(2, max(_member_q(freq, j) for j in js)))

    def task(j):
        member = cons.instability_family_member(freq, window, j, c)
        grid = cons.default_delta_grid(member, points)
        report = cons.saturation_experiment(freq, window, j, c, delta_grid=grid,
                                            sample_interval=sample, check_horizon=horizon,
                                            check_dt=check_dt, profile=profile)
        log_t_ref, method = cons.first_passage_log(member, delta_ref, sample)
        doc = report.to_json()
        doc.update({"k1": sum(abs(x) for x in member.k), "log_t_ref": log_t_ref, "method_ref": method,
                    "log_t_first": math.log(report.t_measured[0]) if grid else None,
                    "log_T_first": report.log_T_predicted[0] if grid else None})
        return doc

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(task, js))  # ordered by j

    x = [r["k1"] for r in reports]
    y = [r["log_t_ref"] - math.log(delta_ref / r["eps_j"]) for r in reports]
    slope = float(np.polyfit(x, y, 1)[0]) if len(set(x)) > 1 else None
    doc = {"provenance": io.provenance("verify", cfg, {
               "frequency": freq.name, "window": window.to_json(), "j": js, "c": c,
               "sample_interval": sample, "delta_ref": delta_ref, "delta_points": points,
               "check_horizon": horizon, "check_dt": check_dt}), "frequency": freq.name,
           "window": window.to_json(), "c": c, "reports": reports,
           "summary": {"ceiling_ok": all(r["ceiling_ok"] for r in reports),
                       "delta_ref": delta_ref,
                       "slope_vs_k1": slope,
                       "expected_slope": 2 * math.pi * window.sigma}}
    io.write_json(out / "verify.json", doc)
    io.write_columns(out / "verify_logt_vs_q.csv", ("q", "log_t_ref"),
                     [r["q"] for r in reports], [r["log_t_ref"] for r in reports])
    pred = [v for r in reports for v in r["log_T_predicted"]]
    meas = [math.log(t) for r in reports for t in r["t_measured"]]
    io.write_columns(out / "verify_measured_vs_predicted.csv", ("log_T_predicted", "log_t_measured"),
                     pred, meas)
    if figures and all(r["delta_grid"] for r in reports):
        from .plotting import verify_figure
        verify_figure(reports, out / "verify.png")
    return doc


def _member_q(freq: Frequency, j: int) -> int:
    from .diophantine import convergents
    conv = convergents(freq, 0, j + 1)
    return conv[min(j, len(conv) - 1)].q


def perturbation_from_terms(window: AnalyticityWindow, terms: list, eps: float) -> FourierTaylorFunction:
    """``eps * sum amp * (u.I or 1) * cos|sin(2 pi k.theta)`` from a term list."""
    f = FourierTaylorFunction.zero(window)
    for t in terms:
        k = [int(x) for x in t["k"]]
        amp = float(t.get("amp", 1.0)) * eps
        kind = t.get("kind", "cos")
        if kind not in ("cos", "sin") or len(k) != window.n:
            raise ConfigError(f"bad term {t}")
        if "action" in t:
            u = np.asarray(t["action"], dtype=np.float64) * amp / 2
            if kind == "cos":
                modes = {tuple(k): (0.0, u), tuple(-x for x in k): (0.0, u)}
            else:
                modes = {tuple(k): (0.0, -1j * u), tuple(-x for x in k): (0.0, 1j * u)}
            f = f + FourierTaylorFunction.from_modes(window, modes)
        elif kind == "cos":
            f = f + FourierTaylorFunction.cos_mode(window, k, amp)
        else:
            f = f + FourierTaylorFunction.sin_mode(window, k, amp)
    return f


DEFAULT_TERMS = [{"k": [1, 0]}, {"k": [1, 1]}]


def cmd_normalform(cfg: dict, out: Path, figures: bool = True, threads: int = 1) -> dict:
    freq = _frequency(cfg)
    window = _window({"window": {"sigma": 0.5, "R": 2.0, **(cfg.get("window") or {})}}, freq.dim)
    eps = _positive(cfg, "eps", 1e-4)
    Ks = cfg.get("K", [4, 6, 8, 10])
    Ks = [Ks] if isinstance(Ks, (int, float)) else Ks
    if not Ks or any(not isinstance(K, (int, float)) or K <= 0 for K in Ks):
        raise ConfigError("'K' must be positive numbers")
    steps = _positive(cfg, "steps", 6, integer=True)
    order = _positive(cfg, "order", LIE_ORDER, integer=True)
    c0 = _positive(cfg, "c0", SMALLNESS_C0)
    contraction = _positive(cfg, "contraction", CONTRACTION)
    lattice = cfg.get("lattice")
    f = perturbation_from_terms(window, cfg.get("terms", DEFAULT_TERMS), eps)
    w = freq.omega()

    def task(K):
        res = normalize(f, w, lattice, K, steps, order=order, c0=c0, contraction=contraction)
        return {**res.report(), "step_norms": res.step_norms}

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        runs = list(pool.map(task, Ks))
    doc = {"provenance": io.provenance("normalform", cfg, {
               "frequency": freq.name, "window": window.to_json(), "eps": eps, "K": Ks, "steps": steps,
               "order": order, "c0": c0, "contraction": contraction, "lattice": lattice,
               "terms": cfg.get("terms", DEFAULT_TERMS)}), "frequency": freq.name,
           "window": window.to_json(), "eps": eps, "perturbation_norm": majorant_norm(f), "runs": runs}
    io.write_json(out / "normalform.json", doc)
    io.write_columns(out / "normalform_remainder.csv", ("K", "remainder_majorant"),
                     Ks, [r["remainder_majorant"] for r in runs])
    if figures:
        from .plotting import normalform_figure
        normalform_figure(Ks, [r["remainder_majorant"] for r in runs], out / "normalform.png")
    return doc


COMMANDS = {
    "profile": cmd_profile,
    "construct": cmd_construct,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "normalform": cmd_normalform,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linstab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="YAML or JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--no-figures", action="store_true", help="skip matplotlib output")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config) if args.config else {}
        if args.config:
            cfg.setdefault("_base", str(args.config.resolve().parent))
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, not args.no_figures, args.threads)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
