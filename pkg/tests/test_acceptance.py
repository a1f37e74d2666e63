"""The eleven acceptance criteria, each at its stated tolerance. Every test
prints one PASS/FAIL line (collected again in the terminal summary)."""

import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from linstab.constructions import (
    first_passage_log,
    instability_family_member,
    resonant_counterexample,
    saturation_experiment,
)
from linstab.diophantine import Frequency, build_profile, convergents, find_resonance
from linstab.dynamics import State, exact_flow_single_resonance, integrate, measure_drift, splitting_step
from linstab.fourier_taylor import AnalyticityWindow, FourierTaylorFunction, majorant_norm, poisson_bracket
from linstab.normal_form import linear_part, normalize, solve_homological

mpmath.mp.dps = 60
ORACLE = {"sqrt2m1": mpmath.sqrt(2) - 1, "golden": (mpmath.sqrt(5) - 1) / 2}
SQRT2M1 = Frequency.parse("sqrt2m1")
WINDOW = AnalyticityWindow(0.1, 2.0, 2)


def q5_member():
    # c = 1 reproduces the worked example eps_j = 1/70.355; the norm budget is
    # only reported for it
    return instability_family_member(SQRT2M1, WINDOW, 2, 1.0, strict=False)


def test_c1_continued_fractions(criterion):
    t0 = time.perf_counter()
    conv = convergents(SQRT2M1, 0, 9)
    qs = [c.q for c in conv]
    ok = qs[:8] == [1, 2, 5, 12, 29, 70, 169, 408]
    for j in range(8):
        q_next = conv[j + 1].q
        err = conv[j].err
        ok &= err.lo >= Fraction(1, conv[j].q + q_next) and err.hi <= Fraction(1, q_next)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    criterion(1, ok, f"q = {qs[:8]}, classical brackets certified, {elapsed:.3f}s")


def test_c2_psi_cross_validation(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for name in ("sqrt2m1", "golden"):
        freq = Frequency.parse(name)
        profile = build_profile(freq, 200)
        conv = convergents(freq, 0, 14)
        alpha = ORACLE[name]
        for K in range(1, 201):
            cv = max((c for c in conv if c.q <= K), key=lambda c: c.q)
            oracle = 1 / abs(cv.q * alpha - cv.p)
            got = profile.psi(K)
            worst = max(worst, float(abs(got - oracle) / oracle))
        for j in range(len(conv) - 1):
            if conv[j].q > 200:
                break
            value = profile.psi(conv[j].q)
            ok &= conv[j + 1].q <= value <= conv[j].q + conv[j + 1].q
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-12 and elapsed < 5.0
    criterion(2, ok, f"max rel deviation {worst:.2e}, convergent brackets hold, {elapsed:.2f}s")


def test_c3_inversion(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("sqrt2m1", "golden"):
        profile = build_profile(Frequency.parse(name), 200)
        for x in np.linspace(1, profile.K_max, 100):
            worst = max(worst, abs(profile.delta(profile.lam(x)) - x) / x)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 1.0
    criterion(3, ok, f"max rel |Delta(Lambda(x)) - x| = {worst:.2e}, {elapsed:.3f}s")


def test_c4_exact_vs_numeric_flow(criterion):
    t0 = time.perf_counter()
    m = q5_member()
    z0 = State(np.zeros(2), np.zeros(2))
    traj = integrate(m.hamiltonian(), z0, 1e3, 1e-3, 1000)
    exact = exact_flow_single_resonance(m.v, m.k, m.amplitude, 0.0, z0, traj.times)
    err = float(np.abs(traj.I - exact.I).max())
    total = measure_drift(exact).sup_drift
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-6 * total and abs(total - 0.17477) < 1e-3 and elapsed < 30
    criterion(4, ok, f"sup action error {err:.2e} vs drift {total:.5f}, {elapsed:.1f}s")


def test_c5_drift_law_saturation(criterion):
    delta = 0.1
    m = q5_member()
    log_t, method = first_passage_log(m, delta, sample_interval=1.0)
    t = math.exp(log_t)
    ok = abs(t - 572.6) <= 1.0
    xs, ys = [], []
    for j in (1, 2, 3, 4):
        member = instability_family_member(SQRT2M1, WINDOW, j, 1.0, strict=False)
        lt, _ = first_passage_log(member, delta, sample_interval=1.0)
        xs.append(sum(abs(c) for c in member.k))
        ys.append(lt - math.log(delta / member.eps))
    qs = [instability_family_member(SQRT2M1, WINDOW, j, 1.0, strict=False).q for j in (1, 2, 3, 4)]
    slope = np.polyfit(xs, ys, 1)[0]
    target = 2 * math.pi * WINDOW.sigma
    ok &= qs == [2, 5, 12, 29] and abs(slope / target - 1) <= 0.05
    criterion(5, ok, f"first passage {t:.1f} ({method}); slope {slope:.5f} vs 2 pi sigma {target:.5f}")


def test_c6_ceiling_consistency(criterion):
    worst = math.inf
    ok = True
    for j in (1, 2, 3, 4):
        rep = saturation_experiment(SQRT2M1, WINDOW, j)
        ok &= rep.ceiling_ok and len(rep.delta_grid) == 10
        worst = min(worst, min(math.log(t) - lt for t, lt in zip(rep.t_measured, rep.log_T_predicted)))
    criterion(6, ok, f"40 (member, delta) pairs; min log(t_measured / T_predicted) = {worst:.4f}")


def test_c7_normal_form_decay(criterion):
    t0 = time.perf_counter()
    window = AnalyticityWindow(0.5, 2.0, 2)
    eps = 1e-4
    f = (FourierTaylorFunction.cos_mode(window, (1, 0), eps)
         + FourierTaylorFunction.cos_mode(window, (1, 1), eps))
    Ks = [4, 6, 8, 10]
    rem = [normalize(f, SQRT2M1.omega(), None, K, 6).remainder_majorant for K in Ks]
    with np.errstate(divide="ignore"):
        logs = np.log(rem)
    decreasing = bool(np.all(np.diff(logs) < 0))
    slope = np.polyfit(Ks, logs, 1)[0] if np.all(np.isfinite(logs)) else float("nan")
    elapsed = time.perf_counter() - t0
    ok = decreasing and slope <= -0.7 and elapsed < 60
    criterion(7, ok, f"remainder majorants {rem}, log-slope {slope}, {elapsed:.2f}s")


def _random_perturbation(rng, window, K, with_actions):
    modes = {}
    n = window.n
    for _ in range(rng.integers(2, 8)):
        k = tuple(int(x) for x in rng.integers(-K, K + 1, n))
        if not any(k):
            continue
        a = complex(rng.normal(), rng.normal()) * 1e-3
        b = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 1e-3 if with_actions else np.zeros(n)
        modes[k] = (a, b)
        modes[tuple(-x for x in k)] = (a.conjugate(), np.conj(b))
    return FourierTaylorFunction.from_modes(window, modes)


def test_c8_homological_exactness(criterion):
    rng = np.random.default_rng(20240611)
    worst = 0.0
    count = 0
    for i in range(20):
        n = 2 if i < 14 else 3
        freq = SQRT2M1 if n == 2 else Frequency.parse(["sqrt2m1", "golden"])
        window = AnalyticityWindow(0.2, 2.0, n)
        K = int(rng.integers(2, 6))
        f = _random_perturbation(rng, window, K, with_actions=i % 2 == 1)
        f_nr = f.select(f.keys.any(axis=1))
        w = freq.omega()
        chi = solve_homological(f_nr, w, None, K)
        residual = f_nr + poisson_bracket(linear_part(w, window), chi)
        worst = max(worst, majorant_norm(residual) / majorant_norm(f_nr))
        count += 1
    ok = count == 20 and worst <= 1e-14
    criterion(8, ok, f"max N(f_nr + {{l_w, chi}}) / N(f_nr) = {worst:.2e} over {count} members")


def test_c9_resonant_counterexample(criterion):
    eps = 1e-3
    cx = resonant_counterexample((1, Fraction(1, 2)), eps, sigma=0.1)
    z0 = State(cx.theta0, np.zeros(2))
    traj = integrate(cx.H, z0, 1 / eps, 1e-2, 100)
    sup = measure_drift(traj).sup_drift
    ok = abs(sup - 1.9078) <= 1e-3 and sup > 1 and cx.k == (1, -2)
    criterion(9, ok, f"simulated sup drift {sup:.6f} (closed form {cx.sup_drift:.6f}), k = {cx.k}")


def test_c10_divisibility(criterion):
    t0 = time.perf_counter()
    ok = True
    checked = 0
    for q in range(1, 21):
        k = np.arange(-10 * q, 10 * q + 1)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        sup = np.maximum(np.abs(k1), np.abs(k2))
        nonzero = sup > 0
        for p in range(-q, q + 1):
            if math.gcd(p, q) != 1:
                continue
            on = (q * k1 + p * k2 == 0) & nonzero
            ok &= bool(np.all(sup[on] >= q))
            found = find_resonance((1, Fraction(p, q)))
            ok &= found is not None and max(abs(c) for c in found) == q
            checked += 1
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5.0
    criterion(10, ok, f"{checked} reduced fractions with q <= 20, |k| <= 10q, {elapsed:.2f}s")


def _separable_corpus():
    """Separable Hamiltonians whose modes are not resonant with the drift,
    so the splitting error is genuinely second order. (For a single
    resonant mode the kick force is constant along the drift and Strang
    splitting is exact; those systems only enter the reversibility check.)"""
    w2 = AnalyticityWindow(0.1, 2.0, 2)
    w3 = AnalyticityWindow(0.1, 2.0, 3)
    omega2 = SQRT2M1.omega()
    golden = Frequency.parse("golden").omega()
    omega3 = Frequency.parse(["sqrt2m1", "golden"]).omega()
    return [
        linear_part(omega2, w2) + FourierTaylorFunction.cos_mode(w2, (1, 0), 0.05),
        linear_part(omega2, w2) + FourierTaylorFunction.cos_mode(w2, (1, 0), 0.05)
        + FourierTaylorFunction.sin_mode(w2, (1, -1), 0.02),
        linear_part(golden, w2) + FourierTaylorFunction.cos_mode(w2, (0, 1), 0.1)
        + FourierTaylorFunction.cos_mode(w2, (2, 1), 0.01),
        linear_part(omega3, w3) + FourierTaylorFunction.cos_mode(w3, (1, 0, 1), 0.03)
        + FourierTaylorFunction.sin_mode(w3, (0, 1, -1), 0.03),
        linear_part((1.0, 0.5), w2) + FourierTaylorFunction.sin_mode(w2, (1, 1), 0.02),
    ]


def _resonant_corpus():
    members = [instability_family_member(SQRT2M1, WINDOW, j, 1.0, strict=False).hamiltonian()
               for j in (1, 2, 3)]
    return members + [resonant_counterexample((1, Fraction(1, 2)), 1e-3).H]


def _circular(a, b):
    d = (a - b + 0.5) % 1.0 - 0.5
    return np.abs(d)


def test_c11_integrator_health(criterion):
    ratios = []
    worst_rev = 0.0
    for H in _separable_corpus():
        z0 = State(np.full(H.n, 0.1), np.linspace(-0.1, 0.2, H.n))
        errs = []
        for dt in (0.05, 0.025):
            traj = integrate(H, z0, 100.0, dt, 1)
            errs.append(float(np.abs(traj.H_values - traj.H_values[0]).max()))
        ratios.append(errs[0] / errs[1])
    for H in _separable_corpus() + _resonant_corpus():
        z0 = State(np.full(H.n, 0.1), np.linspace(-0.1, 0.2, H.n))
        z = splitting_step(H, z0, 0.05)
        back = splitting_step(H, z, -0.05)
        worst_rev = max(worst_rev, float(_circular(back.theta, z0.theta).max()),
                        float(np.abs(back.I - z0.I).max()))
    ok = all(abs(r - 4) <= 0.5 for r in ratios) and worst_rev <= 1e-12
    criterion(11, ok, f"energy error ratios {[round(r, 3) for r in ratios]}, reversibility {worst_rev:.1e}")
