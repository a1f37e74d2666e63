"""Explicit systems and bounds built on top of the arithmetic and dynamics.

* the resonant counterexample: a resonant ``omega`` plus a single resonant
  sine mode drifts linearly for all time;
* the instability family: for each convergent ``p_j/q_j`` of ``alpha_1`` a
  perturbation of size ``eps_j = c / (q_j Psi(q_j))`` whose orbits drift at
  rate ``eps_j exp(-w(k_j, sigma))``;
* the stability-time evaluator ``T = delta eps^-1 exp(c2 Delta(c eps^-1))``;
* the saturation experiment comparing the two.

Exponents use the weight ``w(k, sigma) = 2 pi sigma |k|_1`` of the angle
convention R^n / Z^n. Times are compared in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diophantine import (
    Frequency,
    SmallDivisorProfile,
    build_profile,
    convergents,
    find_resonance,
    psi,
)
from .dynamics import State, exact_flow_single_resonance, integrate, measure_drift
from .errors import DeltaOutOfWindow, NonResonant, NormBudgetExceeded, OutOfRange, ProfileRangeExceeded
from .fourier_taylor import AnalyticityWindow, FourierTaylorFunction, analytic_weight, majorant_norm

TWO_PI = 2.0 * math.pi
SAMPLE_CAP = 10**7


# -- resonant counterexample ---------------------------------------------------

@dataclass(frozen=True)
class ResonantCounterexample:
    H: FourierTaylorFunction
    omega: tuple
    k: tuple
    amplitude: float
    theta0: np.ndarray
    rate: float
    sup_drift: float  # predicted over 0 <= t <= 1/eps

    @property
    def perturbation(self) -> FourierTaylorFunction:
        return self.H.select(self.H.keys.any(axis=1))


def resonant_counterexample(omega, eps: float, sigma: float = 0.1, R: float = 2.0) -> ResonantCounterexample:
    """``H = omega.I - A sin(2 pi k.theta)`` with ``k.omega = 0`` and the
    amplitude chosen so that the perturbation has majorant exactly ``eps``."""
    if isinstance(omega, Frequency):
        if not omega.exact:
            raise NonResonant(f"{omega.name} has irrational components")
        omega = (1,) + tuple(c.value for c in omega.alpha)
    try:
        exact = tuple(Fraction(x) for x in omega)
    except (TypeError, ValueError):
        raise NonResonant("omega must be given exactly to certify a resonance") from None
    k = find_resonance(exact)
    if k is None:
        raise NonResonant("no integer relation")
    window = AnalyticityWindow(sigma, R, len(exact))
    amplitude = eps * math.exp(-analytic_weight(k, sigma))
    H = (FourierTaylorFunction.linear(window, [float(x) for x in exact])
         + FourierTaylorFunction.sin_mode(window, k, -amplitude))
    rate = TWO_PI * max(abs(c) for c in k) * amplitude
    return ResonantCounterexample(H, exact, k, amplitude, np.zeros(len(exact)), rate, rate / eps)


# -- instability family ------------------------------------------------------------

@dataclass(frozen=True)
class InstabilityMember:
    j: int
    p: int
    q: int
    v: tuple            # (1, p/q, alpha_2, ...) with the alphas as high-precision rationals
    k: tuple            # (p, -q, 0, ..., 0)
    eps: float
    mu: float
    psi_q: float
    c: float
    window: AnalyticityWindow
    omega: tuple        # float approximation of (1, alpha)
    f1: FourierTaylorFunction
    f2: FourierTaylorFunction
    norm_f1: float
    norm_f2: float

    @property
    def f(self) -> FourierTaylorFunction:
        return self.f1 + self.f2

    @property
    def weight(self) -> float:
        return analytic_weight(self.k, self.window.sigma)

    @property
    def log_rate(self) -> float:
        return math.log(self.eps) - self.weight

    @property
    def amplitude(self) -> float:
        return self.eps * self.mu

    @property
    def log_amplitude(self) -> float:
        return math.log(self.eps) - math.log(TWO_PI * self.q) - self.weight

    def hamiltonian(self) -> FourierTaylorFunction:
        """``l_omega + f_j``, i.e. ``v_j.I - eps_j mu_j sin(2 pi k_j.theta)``."""
        return FourierTaylorFunction.linear(self.window, self.omega) + self.f

    def to_json(self) -> dict:
        return {
            "j": self.j, "p": self.p, "q": self.q,
            "k": list(self.k),
            "v": [float(x) for x in self.v],
            "eps_j": self.eps, "mu_j": self.mu, "psi_q": self.psi_q, "c": self.c,
            "log_rate": self.log_rate, "weight": self.weight,
            "norm_f1": self.norm_f1, "norm_f2": self.norm_f2,
        }


def instability_family_member(freq: Frequency, window: AnalyticityWindow, j: int, c: float,
                              component: int = 0, strict: bool = True) -> InstabilityMember:
    """The ``j``-th member (0-based over convergents with increasing ``q``).

    ``f1 = (v_j - omega).I`` and ``f2 = -eps_j mu_j sin(2 pi k_j.theta)`` with
    ``mu_j = exp(-w(k_j, sigma)) / (2 pi q_j)``. Both halves must have majorant
    at most ``eps_j / 2``; otherwise NormBudgetExceeded is raised (or, with
    ``strict=False``, the norms are only recorded on the member).
    """
    if window.n != freq.dim:
        raise ValueError("window dimension does not match the frequency")
    conv = convergents(freq, component, j + 1)
    if len(conv) <= j:
        raise OutOfRange(f"only {len(conv)} convergents available")
    p, q = conv[j].p, conv[j].q
    psi_q = float(psi(freq, q).mid)
    eps = c / (q * psi_q)
    k = [0] * freq.dim
    k[0], k[component + 1] = p, -q
    k = tuple(k)
    weight = analytic_weight(k, window.sigma)
    mu = math.exp(-weight) / (TWO_PI * q)

    boxes = freq.intervals(128)
    v = [Fraction(1)] + [box.mid for box in boxes]
    v[component + 1] = Fraction(p, q)
    v = tuple(v)
    if sum(a * b for a, b in zip(k, v)) != 0:
        raise AssertionError("k_j . v_j must vanish")
    omega = freq.omega()
    shift = [float(vi) - wi for vi, wi in zip(v, omega)]
    shift[component + 1] = float(Fraction(p, q) - boxes[component].mid)
    f1 = FourierTaylorFunction.linear(window, shift)
    f2 = FourierTaylorFunction.sin_mode(window, k, -eps * mu)
    n1, n2 = majorant_norm(f1), majorant_norm(f2)
    if strict and (n1 > eps / 2 or n2 > eps / 2):
        raise NormBudgetExceeded(
            f"member j={j}: |f1|={n1:.4g}, |f2|={n2:.4g} vs eps_j/2={eps / 2:.4g}; "
            f"c={c:g} is below the calibrated minimum {min_family_constant(freq, window, j, component):.4g}")
    return InstabilityMember(j, p, q, v, k, eps, mu, psi_q, c, window, tuple(omega),
                             f1, f2, n1, n2)


def min_family_constant(freq: Frequency, window: AnalyticityWindow, j_max: int,
                        component: int = 0) -> float:
    """Smallest ``c`` for which members ``0..j_max`` meet both norm budgets.

    ``|f1| = (R + sigma) |alpha_1 - p/q|`` and ``|f2| = eps_j / (2 pi q_j)``,
    so only the first half constrains ``c``.
    """
    best = 0.0
    conv = convergents(freq, component, j_max + 1)
    box = freq.intervals(128)[component]
    for cv in conv[: j_max + 1]:
        err = abs(float(box.mid - Fraction(cv.p, cv.q)))
        psi_q = float(psi(freq, cv.q).mid)
        best = max(best, 2 * (window.R + window.sigma) * err * cv.q * psi_q)
    # headroom against rounding in the norm check
    return best * (1 + 1e-9)


def instability_family(freq, window, js, c, **kwargs) -> list:
    return [instability_family_member(freq, window, j, c, **kwargs) for j in js]


def predicted_drift(member: InstabilityMember, t: float, log: bool = False) -> float:
    """``|t| eps_j exp(-w(k_j, sigma))``, or its natural log."""
    if log:
        return -math.inf if t == 0 else math.log(abs(t)) + member.log_rate
    return abs(t) * member.eps * math.exp(-member.weight)


# -- stability bound -----------------------------------------------------------------

@dataclass(frozen=True)
class StabilityPrediction:
    eps: float
    K: float
    delta_min: float
    delta: float
    log_T: float
    constants_used: tuple

    def to_json(self) -> dict:
        c, c1, c2 = self.constants_used
        return {"eps": self.eps, "K": self.K, "delta_min": self.delta_min, "delta": self.delta,
                "log_T": self.log_T, "c": c, "c1": c1, "c2": c2}


def stability_bound(profile, eps: float, delta: float, c: float = 1.0, c1: float = 1.0,
                    c2: float = 1.0, R: float = math.inf, eps0: float = 1.0,
                    check_window: bool = True) -> StabilityPrediction:
    """Stability time ``T = delta / eps * exp(c2 K)`` with ``K = Delta(c / eps)``,
    valid for ``1/K <= c1 delta < R/2``."""
    if not 0 < eps <= eps0:
        raise ValueError(f"eps={eps} outside (0, eps0={eps0}]")
    try:
        K = profile.delta(c / eps)
    except OutOfRange as exc:
        raise ProfileRangeExceeded(str(exc)) from None
    delta_min = 1.0 / (c1 * K)
    if check_window and not (1.0 / K <= c1 * delta * (1 + 1e-12) and c1 * delta < R / 2):
        raise DeltaOutOfWindow(
            f"need 1/K <= c1 delta < R/2: 1/K={1 / K:.4g}, c1 delta={c1 * delta:.4g}, R/2={R / 2:.4g}")
    log_T = math.log(delta) - math.log(eps) + c2 * K
    return StabilityPrediction(eps, K, delta_min, delta, log_T, (c, c1, c2))


@dataclass(frozen=True)
class Calibration:
    """Constants of the stability bound matched to the instability family.

    With ``c`` equal to the family constant, ``Delta(c / eps_j) = q_j``.
    ``c2 = 2 pi sigma (1 + |alpha_1|)`` tracks ``w(k_j, sigma)`` to within
    ``2 pi sigma / q_{j+1}``, and ``c1 = exp(2 pi sigma)`` absorbs that gap,
    so no member can reach drift ``c1 delta`` before ``T(delta)``.
    """

    c: float
    c1: float
    c2: float


def calibrated_constants(freq: Frequency, window: AnalyticityWindow, c: float,
                         component: int = 0) -> Calibration:
    alpha = abs(freq.alpha_floats()[component])
    return Calibration(c, math.exp(TWO_PI * window.sigma), TWO_PI * window.sigma * (1 + alpha))


# -- saturation experiment -------------------------------------------------------------------

def first_passage_log(member: InstabilityMember, level: float, sample_interval: float | None = None,
                      theta0=None) -> tuple:
    """Natural log of the first time the member's worst orbit drifts past ``level``.

    Sampled from the exact flow when the horizon fits ``SAMPLE_CAP``
    samples, otherwise from the flow's rate in log space. Returns
    ``(log_t, method)``.
    """
    n = member.window.n
    z0 = State(np.zeros(n) if theta0 is None else theta0, np.zeros(n))
    # rate of the flow per unit time, from the flow itself at t = 1
    unit = exact_flow_single_resonance(member.v, member.k, member.amplitude, 0.0, z0, 1.0)
    rate = float(np.abs(unit.I - z0.I).max())
    if rate > 0 and math.isfinite(rate):
        log_rate = math.log(rate)
    else:
        # amplitude underflows: same flow formula carried in logs
        cosine = abs(math.cos(TWO_PI * float(np.dot(member.k, z0.theta))))
        log_rate = math.log(TWO_PI * member.q * cosine) + member.log_amplitude
    log_t_closed = math.log(level) - log_rate
    if sample_interval is None or log_t_closed - math.log(sample_interval) > math.log(SAMPLE_CAP):
        return log_t_closed, "closed_form_log"
    horizon = math.exp(log_t_closed)
    count = int(math.ceil(horizon / sample_interval)) + 2
    times = sample_interval * np.arange(count)
    traj = exact_flow_single_resonance(member.v, member.k, member.amplitude, 0.0, z0, times)
    t = measure_drift(traj, [level]).first_passage[level]
    return math.log(t), "sampled_exact_flow"


@dataclass
class SaturationReport:
    j: int
    p: int
    q: int
    eps_j: float
    log_rate: float
    delta_grid: list
    t_measured: list
    log_T_predicted: list
    ratios: list
    methods: list
    constants: Calibration
    ceiling_ok: bool
    exponent_ratio: float
    integrator_max_error: float | None = None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "j": self.j, "p": self.p, "q": self.q,
            "eps_j": self.eps_j, "log_rate": self.log_rate,
            "delta_grid": self.delta_grid,
            "t_measured": self.t_measured,
            "log_T_predicted": self.log_T_predicted,
            "ratios": self.ratios,
            "methods": self.methods,
            "constants": {"c": self.constants.c, "c1": self.constants.c1, "c2": self.constants.c2},
            "ceiling_ok": self.ceiling_ok,
            "exponent_ratio": self.exponent_ratio,
            "integrator_max_error": self.integrator_max_error,
        }


def default_delta_grid(member: InstabilityMember, points: int = 10) -> list:
    """Log-spaced drift levels inside ``[1/q_j, R/2)``."""
    lo = 1.0 / member.q
    hi = 0.95 * member.window.R / 2
    if lo >= hi:
        return []
    return list(np.geomspace(lo, hi, points))


def saturation_experiment(freq: Frequency, window: AnalyticityWindow, j: int, c: float | None = None,
                          calibration: Calibration | None = None, delta_grid=None,
                          sample_interval: float = 1.0, check_horizon: float = 50.0,
                          check_dt: float = 1e-2, profile: SmallDivisorProfile | None = None,
                          strict: bool = True) -> SaturationReport:
    """Measured first-passage times of member ``j`` against the stability time.

    For each drift level ``delta`` the measured time is compared with the
    stability bound guaranteeing drift ``<= delta`` (evaluated at
    ``delta / c1``). ``ratios`` are ``log t_measured / log T_predicted``;
    ``ceiling_ok`` holds when no measured time undercuts the bound;
    ``exponent_ratio`` is ``w(k_j, sigma) / (c2 K)``, which lies in a fixed
    interval across ``j`` when the exponential rates match.
    """
    if c is None:
        c = min_family_constant(freq, window, j)
    member = instability_family_member(freq, window, j, c, strict=strict)
    cal = calibration or calibrated_constants(freq, window, c)
    if profile is None or profile.K_max < member.q:
        profile = build_profile(freq, max(member.q, 2))
    grid = default_delta_grid(member) if delta_grid is None else list(delta_grid)

    t_meas, log_T, ratios, methods = [], [], [], []
    for d in grid:
        log_t, method = first_passage_log(member, d, sample_interval)
        pred = stability_bound(profile, member.eps, d / cal.c1, cal.c, cal.c1, cal.c2, R=window.R)
        t_meas.append(math.exp(log_t))
        log_T.append(pred.log_T)
        ratios.append(log_t / pred.log_T if pred.log_T != 0 else math.inf)
        methods.append(method)
    ceiling_ok = all(math.log(t) >= lt - 1e-12 * abs(lt) for t, lt in zip(t_meas, log_T))
    K = profile.delta(cal.c / member.eps)
    exponent_ratio = member.weight / (cal.c2 * K)

    # numeric cross-check of the flow on a short horizon
    H = member.hamiltonian()
    z0 = State(np.zeros(window.n), np.zeros(window.n))
    steps_per_sample = max(1, int(round(1.0 / check_dt)))
    traj = integrate(H, z0, check_horizon, check_dt, steps_per_sample)
    exact = exact_flow_single_resonance(member.v, member.k, member.amplitude, 0.0, z0, traj.times)
    err = float(np.abs(traj.I - exact.I).max())

    return SaturationReport(member.j, member.p, member.q, member.eps, member.log_rate,
                            [float(d) for d in grid], t_meas, log_T, ratios, methods, cal,
                            ceiling_ok, exponent_ratio, err)
