import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linstab.dynamics import (
    State,
    Trajectory,
    energy,
    exact_flow_single_resonance,
    integrate,
    measure_drift,
    splitting_step,
)
from linstab.errors import NotResonant, NotSeparable
from linstab.fourier_taylor import AnalyticityWindow, FourierTaylorFunction as F

W = AnalyticityWindow(0.1, 2.0, 2)
V = (1, Fraction(2, 5))
K = (2, -5)


def resonant_H(A):
    return F.linear(W, (1.0, 0.4)) + F.sin_mode(W, K, -A)


def test_state_reduces_angles():
    z = State([1.25, -0.25], [0.0, 1.0])
    assert np.allclose(z.theta, [0.25, 0.75])
    with pytest.raises(ValueError):
        State([0.0], [0.0, 1.0])


def test_exact_flow_examples():
    z0 = State([0, 0], [0, 0])
    z = exact_flow_single_resonance(V, K, 1e-3, 0.0, z0, 100.0)
    assert np.allclose(z.I, [1.2566370614, -3.1415926536])
    assert np.allclose(exact_flow_single_resonance(V, K, 1e-3, 0.0, z0, 0.0).I, 0)
    quad = State([0.125, 0.0], [0.3, 0.4])  # k.theta = 1/4
    assert np.allclose(exact_flow_single_resonance(V, K, 1e-3, 0.0, quad, 500.0).I, [0.3, 0.4])
    with pytest.raises(NotResonant):
        exact_flow_single_resonance((1, Fraction(1, 3)), K, 1e-3, 0.0, z0, 1.0)


def test_exact_flow_solves_the_equations_of_motion():
    """Independent check: finite-difference the closed form and compare with
    the vector field of H = v.I - A sin(2 pi (k.theta + phase))."""
    A, phase = 2e-3, 0.1
    z0 = State([0.3, 0.7], [0.1, -0.2])
    t, h = 3.7, 1e-5
    zp = exact_flow_single_resonance(V, K, A, phase, z0, t + h)
    zm = exact_flow_single_resonance(V, K, A, phase, z0, t - h)
    dI = (zp.I - zm.I) / (2 * h)
    z = exact_flow_single_resonance(V, K, A, phase, z0, t)
    force = 2 * math.pi * A * np.array(K) * math.cos(2 * math.pi * (np.dot(K, z.theta) + phase))
    assert np.allclose(dI, force, rtol=1e-6)


def test_splitting_pure_rotation_and_linear_drift():
    H = F.linear(W, (1.0, 0.3))
    z0 = State([0.1, 0.2], [0.5, 0.5])
    z = splitting_step(H, z0, 0.7)
    assert np.allclose(z.theta, np.mod([0.1 + 0.7, 0.2 + 0.21], 1))
    assert np.array_equal(z.I, z0.I)


def test_splitting_local_error_third_order():
    A = 1e-2
    H = F.linear(W, (1.0, 0.41)) + F.cos_mode(W, (1, 0), A)
    z0 = State([0.1, 0.2], [0.0, 0.0])

    def reference(dt):
        # many tiny steps as a high-accuracy oracle
        n = 2000
        z = z0
        for _ in range(n):
            z = splitting_step(H, z, dt / n)
        return z

    errs = []
    for dt in (0.2, 0.1):
        errs.append(np.abs(splitting_step(H, z0, dt).I - reference(dt).I).max())
    assert errs[0] / errs[1] == pytest.approx(8, rel=0.15)


def test_splitting_rejects_mixed_modes():
    mixed = F.from_modes(W, {(1, 0): (0.0, np.array([1.0, 0.0]))})
    with pytest.raises(NotSeparable):
        splitting_step(mixed, State([0, 0], [0, 0]), 0.1)
    with pytest.raises(NotSeparable):
        integrate(mixed, State([0, 0], [0, 0]), 1.0, 0.1)


def test_integrate_zero_horizon():
    traj = integrate(resonant_H(1e-3), State([0, 0], [0, 0]), 0.0, 0.1)
    assert len(traj) == 1 and traj.times[0] == 0


def test_integrate_matches_resonant_counterexample_flow():
    w = AnalyticityWindow(0.1, 2.0, 2)
    A = 1e-3
    H = F.linear(w, (1.0, 0.5)) + F.sin_mode(w, (1, -2), -A)
    z0 = State([0, 0], [0, 0])
    traj = integrate(H, z0, 1e3, 1e-2, 100)
    exact = exact_flow_single_resonance((1, Fraction(1, 2)), (1, -2), A, 0.0, z0, traj.times)
    assert np.abs(traj.I - exact.I).max() <= 1e-6


def test_energy_no_secular_growth():
    H = F.linear(W, (1.0, math.sqrt(2) - 1)) + F.cos_mode(W, (1, 0), 0.05) + F.cos_mode(W, (1, -1), 0.03)
    z0 = State([0.1, 0.3], [0.0, 0.0])
    traj = integrate(H, z0, 1e4, 0.05, 1)
    err = np.abs(traj.H_values - traj.H_values[0])
    decade = len(err) // 10
    assert err[-decade:].max() <= 1.5 * err[:decade].max()
    assert traj.H_values[0] == pytest.approx(energy(H, z0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(-1, 1), st.floats(1e-3, 0.2))
def test_reversibility(t1, t2, i1, dt):
    H = F.linear(W, (1.0, 0.41)) + F.cos_mode(W, (1, 1), 0.05) + F.sin_mode(W, (0, 1), 0.02)
    z0 = State([t1, t2], [i1, -i1])
    back = splitting_step(H, splitting_step(H, z0, dt), -dt)
    dtheta = (back.theta - z0.theta + 0.5) % 1.0 - 0.5
    assert np.abs(dtheta).max() <= 1e-12 and np.abs(back.I - z0.I).max() <= 1e-12


def test_measure_drift():
    times = np.arange(11.0)
    I = np.zeros((11, 2))
    flat = Trajectory(times, np.zeros((11, 2)), I, np.zeros(11))
    stats = measure_drift(flat, [0.1])
    assert stats.sup_drift == 0 and stats.first_passage[0.1] is None
    rho = 0.03
    I = np.stack([rho * times, -0.5 * rho * times], axis=1)
    lin = Trajectory(times, np.zeros((11, 2)), I, np.zeros(11))
    stats = measure_drift(lin, [0.1])
    assert abs(stats.first_passage[0.1] - 0.1 / rho) <= 1.0
    with pytest.raises(ValueError):
        measure_drift(Trajectory(np.zeros(0), np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)))


def test_trajectory_csv_format():
    traj = integrate(resonant_H(1e-3), State([0, 0], [0, 0]), 0.2, 0.1)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,theta_1,theta_2,I_1,I_2,H"
    assert len(lines) == 4  # header + t = 0, 0.1, 0.2
    assert float(lines[3].split(",")[0]) == pytest.approx(0.2)
