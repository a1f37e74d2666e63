"""Trajectories: exact resonant flows, a Strang splitting integrator for
separable Hamiltonians ``H = g(I) + u(theta)``, and drift measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .errors import NotResonant, NotSeparable
from .fourier_taylor import FourierTaylorFunction

TWO_PI = 2.0 * math.pi
MAX_STEPS = 10**9


@dataclass(frozen=True)
class State:
    theta: np.ndarray
    I: np.ndarray

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=np.float64), 1.0)
        I = np.array(self.I, dtype=np.float64)
        if theta.shape != I.shape or theta.ndim != 1:
            raise ValueError("theta and I must be 1-d vectors of equal length")
        theta.setflags(write=False)
        I.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "I", I)

    @property
    def n(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    theta: np.ndarray  # (m, n)
    I: np.ndarray      # (m, n)
    H_values: np.ndarray

    def __post_init__(self):
        m = len(self.times)
        if not (self.theta.shape[0] == self.I.shape[0] == len(self.H_values) == m):
            raise ValueError("trajectory arrays disagree in length")
        if m > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> State:
        return State(self.theta[i], self.I[i])

    def to_csv(self) -> str:
        n = self.theta.shape[1]
        header = ["t"] + [f"theta_{i + 1}" for i in range(n)] + [f"I_{i + 1}" for i in range(n)] + ["H"]
        lines = [",".join(header)]
        for t, th, I, h in zip(self.times, self.theta, self.I, self.H_values):
            row = [t, *th, *I, h]
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"


# -- exact flow --------------------------------------------------------------

def _exact_dot(k, v) -> Fraction:
    return sum(int(c) * Fraction(x) for c, x in zip(k, v))


def exact_flow_single_resonance(v, k, amplitude: float, phase: float, z0: State, t):
    """Flow of ``H = v.I - A sin(2 pi (k.theta + phase))`` with ``k.v = 0``.

    ``k.theta`` is a first integral, so the actions move on a straight line:
    ``I(t) = I0 + 2 pi A t k cos(2 pi (k.theta0 + phase))``. ``t`` may be an
    array, in which case a :class:`Trajectory` is returned.
    """
    if _exact_dot(k, v) != 0:
        raise NotResonant(f"k.v = {_exact_dot(k, v)} != 0")
    vf = np.array([float(Fraction(x)) for x in v])
    kf = np.asarray(k, dtype=np.float64)
    speed = TWO_PI * amplitude * math.cos(TWO_PI * (float(kf @ z0.theta) + phase))
    if np.isscalar(t):
        return State(z0.theta + t * vf, z0.I + speed * t * kf)
    t = np.asarray(t, dtype=np.float64)
    theta = np.mod(z0.theta[None, :] + t[:, None] * vf[None, :], 1.0)
    I = z0.I[None, :] + speed * t[:, None] * kf[None, :]
    H = I @ vf - amplitude * np.sin(TWO_PI * (theta @ kf + phase))
    return Trajectory(t, theta, I, H)


# -- splitting integrator ----------------------------------------------------

def _separable_parts(H: FourierTaylorFunction):
    if not H.is_separable():
        raise NotSeparable("H has action-dependent angle modes (b_k != 0 for k != 0)")
    zero = ~H.keys.any(axis=1)
    if zero.any():
        a0 = float(H.a[zero][0].real)
        grad_g = H.b[zero][0].real.astype(np.float64)
    else:
        a0, grad_g = 0.0, np.zeros(H.n)
    keys = H.keys[~zero].astype(np.float64)
    coef = H.a[~zero]
    return a0, np.ascontiguousarray(grad_g), np.ascontiguousarray(keys), \
        np.ascontiguousarray(coef.real), np.ascontiguousarray(coef.imag)


@numba.njit(cache=True)
def _force(theta, keys, cre, cim, out):
    # out = d u / d theta for u = Re sum (cre + i cim) exp(2 pi i k.theta)
    n = theta.shape[0]
    for i in range(n):
        out[i] = 0.0
    for m in range(keys.shape[0]):
        phi = 0.0
        for i in range(n):
            phi += keys[m, i] * theta[i]
        phi *= 2.0 * np.pi
        s = -2.0 * np.pi * (cre[m] * np.sin(phi) + cim[m] * np.cos(phi))
        for i in range(n):
            out[i] += keys[m, i] * s


@numba.njit(cache=True)
def _energy(theta, I, a0, grad_g, keys, cre, cim):
    h = a0
    for i in range(I.shape[0]):
        h += grad_g[i] * I[i]
    for m in range(keys.shape[0]):
        phi = 0.0
        for i in range(theta.shape[0]):
            phi += keys[m, i] * theta[i]
        phi *= 2.0 * np.pi
        h += cre[m] * np.cos(phi) - cim[m] * np.sin(phi)
    return h


@numba.njit(cache=True)
def _strang(theta, I, grad_g, keys, cre, cim, dt, nsteps, sample_every, a0,
            out_theta, out_I, out_H):
    n = theta.shape[0]
    force = np.zeros(n)
    half = 0.5 * dt
    j = 0
    for step in range(1, nsteps + 1):
        _force(theta, keys, cre, cim, force)
        for i in range(n):
            I[i] -= half * force[i]
        for i in range(n):
            theta[i] = (theta[i] + dt * grad_g[i]) % 1.0
        _force(theta, keys, cre, cim, force)
        for i in range(n):
            I[i] -= half * force[i]
        if step % sample_every == 0:
            j += 1
            for i in range(n):
                out_theta[j, i] = theta[i]
                out_I[j, i] = I[i]
            out_H[j] = _energy(theta, I, a0, grad_g, keys, cre, cim)


def splitting_step(H: FourierTaylorFunction, z: State, dt: float) -> State:
    """One Strang step: half kick, drift along ``grad g``, half kick."""
    _, grad_g, keys, cre, cim = _separable_parts(H)
    theta = z.theta.copy()
    I = z.I.copy()
    force = np.zeros(z.n)
    _force(theta, keys, cre, cim, force)
    I -= 0.5 * dt * force
    theta = np.mod(theta + dt * grad_g, 1.0)
    _force(theta, keys, cre, cim, force)
    I -= 0.5 * dt * force
    return State(theta, I)


def energy(H: FourierTaylorFunction, z: State) -> float:
    a0, grad_g, keys, cre, cim = _separable_parts(H)
    return float(_energy(np.asarray(z.theta), np.asarray(z.I), a0, grad_g, keys, cre, cim))


def integrate(H: FourierTaylorFunction, z0: State, t_end: float, dt: float,
              sample_every: int = 1) -> Trajectory:
    """Fixed-step Strang integration from ``t = 0`` to ``t_end``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    a0, grad_g, keys, cre, cim = _separable_parts(H)
    nsteps = int(round(t_end / dt))
    if nsteps > MAX_STEPS:
        raise ValueError(f"{nsteps} steps exceed the stepping cap; use the closed-form path")
    nsamples = nsteps // sample_every
    out_theta = np.empty((nsamples + 1, z0.n))
    out_I = np.empty((nsamples + 1, z0.n))
    out_H = np.empty(nsamples + 1)
    theta = z0.theta.copy()
    I = z0.I.copy()
    out_theta[0], out_I[0] = theta, I
    out_H[0] = _energy(theta, I, a0, grad_g, keys, cre, cim)
    if nsteps:
        _strang(theta, I, grad_g, keys, cre, cim, float(dt), nsteps, sample_every, a0,
                out_theta, out_I, out_H)
    times = dt * sample_every * np.arange(nsamples + 1)
    return Trajectory(times, out_theta, out_I, out_H)


# -- drift -------------------------------------------------------------------

@dataclass(frozen=True)
class DriftStats:
    sup_drift: float
    first_passage: dict


def measure_drift(traj: Trajectory, thresholds=()) -> DriftStats:
    """Sup-norm action drift and first sample time exceeding each threshold."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    drift = np.abs(traj.I - traj.I[0]).max(axis=1)
    passages = {}
    for d in thresholds:
        hit = np.nonzero(drift > d)[0]
        passages[d] = float(traj.times[hit[0]]) if len(hit) else None
    return DriftStats(float(drift.max()), passages)
