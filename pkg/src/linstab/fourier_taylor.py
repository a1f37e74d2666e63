"""Finite Fourier sums in the angles with coefficients affine in the actions.

A function is stored as

    f(theta, I) = sum_k (a_k + b_k . I) exp(2 pi i k . theta)

over a finite set of integer modes ``k``. This class is closed under the
Poisson bracket, carries every Hamiltonian and generating function used by
the package, and has a computable weighted-l1 majorant

    N_sigma(f) = sum_k (|a_k| + (R + sigma) sum_i |b_k,i|) exp(2 pi sigma |k|_1)

that dominates the sup over the complex neighbourhood of width sigma.
Angles live on R^n / Z^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AnalyticityWindow:
    sigma: float
    R: float
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.R > 1:
            raise ValueError("R must exceed 1")
        if self.n < 1:
            raise ValueError("n must be positive")

    def shrink(self, sigma: float) -> AnalyticityWindow:
        return replace(self, sigma=sigma)

    def to_json(self) -> dict:
        return {"sigma": self.sigma, "R": self.R, "n": self.n}


def analytic_weight(k, sigma: float) -> float:
    """``w(k, sigma) = 2 pi sigma |k|_1``, the log of the majorant weight."""
    return TWO_PI * sigma * float(np.abs(np.asarray(k)).sum())


@dataclass
class NormLedger:
    """Running account of norm discarded by truncations."""

    majorant: float = 0.0
    tail_discarded: float = 0.0
    entries: list = field(default_factory=list)

    def record(self, amount: float, note: str = "") -> None:
        if amount < 0:
            raise ValueError("discarded norm is nonnegative")
        if amount:
            self.tail_discarded += amount
            self.entries.append((note, amount))


def _lexsort_rows(keys: np.ndarray) -> np.ndarray:
    return np.lexsort(keys.T[::-1]) if len(keys) else np.arange(0)


class FourierTaylorFunction:
    """Immutable sparse Fourier-Taylor function on a fixed window."""

    __slots__ = ("window", "keys", "a", "b")

    def __init__(self, window: AnalyticityWindow, keys, a, b, _canonical: bool = False):
        n = window.n
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, n)
        a = np.asarray(a, dtype=np.complex128).reshape(-1)
        b = np.asarray(b, dtype=np.complex128).reshape(-1, n)
        if not (len(keys) == len(a) == len(b)):
            raise ValueError("keys, a and b disagree in length")
        if not _canonical:
            keys, a, b = _canonicalize(keys, a, b)
        for arr in (keys, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __setattr__(self, name, value):
        raise AttributeError("FourierTaylorFunction is immutable")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, window):
        n = window.n
        return cls(window, np.zeros((0, n)), np.zeros(0), np.zeros((0, n)), _canonical=True)

    @classmethod
    def constant(cls, window, c):
        return cls(window, [[0] * window.n], [c], [[0] * window.n])

    @classmethod
    def linear(cls, window, v, c=0.0):
        """``c + v . I``."""
        return cls(window, [[0] * window.n], [c], [list(v)])

    @classmethod
    def cos_mode(cls, window, k, amplitude=1.0):
        """``amplitude * cos(2 pi k . theta)``."""
        k = list(k)
        return cls(window, [k, [-c for c in k]], [amplitude / 2, amplitude / 2],
                   np.zeros((2, window.n)))

    @classmethod
    def sin_mode(cls, window, k, amplitude=1.0):
        """``amplitude * sin(2 pi k . theta)``."""
        k = list(k)
        return cls(window, [k, [-c for c in k]], [-0.5j * amplitude, 0.5j * amplitude],
                   np.zeros((2, window.n)))

    @classmethod
    def from_modes(cls, window, modes: dict):
        """From ``{k: a}`` or ``{k: (a, b)}``."""
        keys, a, b = [], [], []
        for k, coef in modes.items():
            keys.append(list(k))
            if isinstance(coef, tuple):
                a.append(coef[0])
                b.append(list(coef[1]))
            else:
                a.append(coef)
                b.append([0] * window.n)
        return cls(window, np.array(keys).reshape(-1, window.n), a, np.array(b).reshape(-1, window.n))

    # -- basic protocol ----------------------------------------------------
    def __len__(self):
        return len(self.keys)

    @property
    def n(self) -> int:
        return self.window.n

    def is_zero(self) -> bool:
        return len(self.keys) == 0

    def modes(self) -> dict:
        return {tuple(int(c) for c in k): (complex(a), tuple(complex(x) for x in b))
                for k, a, b in zip(self.keys, self.a, self.b)}

    def with_window(self, window_or_sigma) -> FourierTaylorFunction:
        w = window_or_sigma
        if not isinstance(w, AnalyticityWindow):
            w = self.window.shrink(float(w))
        return FourierTaylorFunction(w, self.keys, self.a, self.b, _canonical=True)

    def _check(self, other):
        if not isinstance(other, FourierTaylorFunction):
            raise TypeError(f"expected FourierTaylorFunction, got {type(other).__name__}")
        if other.window != self.window:
            raise ValueError("operands live on different windows")

    def __add__(self, other):
        self._check(other)
        return FourierTaylorFunction(
            self.window, np.vstack([self.keys, other.keys]),
            np.concatenate([self.a, other.a]), np.vstack([self.b, other.b]))

    def __neg__(self):
        return FourierTaylorFunction(self.window, self.keys, -self.a, -self.b, _canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        if c == 0:
            return FourierTaylorFunction.zero(self.window)
        return FourierTaylorFunction(self.window, self.keys, self.a * c, self.b * c, _canonical=True)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __repr__(self):
        return f"FourierTaylorFunction(n={self.n}, modes={len(self)}, sigma={self.window.sigma})"

    def select(self, mask) -> FourierTaylorFunction:
        mask = np.asarray(mask, dtype=bool)
        return FourierTaylorFunction(self.window, self.keys[mask], self.a[mask], self.b[mask],
                                     _canonical=True)

    def sup_orders(self) -> np.ndarray:
        return np.abs(self.keys).max(axis=1) if len(self) else np.zeros(0, dtype=np.int64)

    def zero_mode(self) -> FourierTaylorFunction:
        return self.select(~self.keys.any(axis=1))

    def is_real(self, atol: float = 0.0) -> bool:
        table = self.modes()
        for k, (a, b) in table.items():
            mk = tuple(-c for c in k)
            if mk not in table:
                return False
            a2, b2 = table[mk]
            if abs(a - a2.conjugate()) > atol:
                return False
            if any(abs(x - y.conjugate()) > atol for x, y in zip(b, b2)):
                return False
        return True

    def is_affine(self) -> bool:
        # structural: storage has exactly one constant and one linear slot per mode
        return self.b.shape == (len(self.keys), self.n)

    def is_separable(self) -> bool:
        """True when every non-zero mode has no action dependence."""
        nonzero = self.keys.any(axis=1)
        return not np.any(self.b[nonzero] != 0)

    # -- evaluation and norms ----------------------------------------------
    def __call__(self, theta, I):
        return evaluate(self, theta, I)

    def grad_theta(self) -> list:
        """Partial derivatives in each angle, as functions."""
        return [FourierTaylorFunction(self.window, self.keys, 2j * math.pi * self.keys[:, i] * self.a,
                                      2j * math.pi * self.keys[:, i, None] * self.b)
                for i in range(self.n)]

    def grad_I(self) -> list:
        return [FourierTaylorFunction(self.window, self.keys, self.b[:, i], np.zeros_like(self.b))
                for i in range(self.n)]


def _canonicalize(keys, a, b):
    """Merge repeated modes, drop exact zeros, sort lexicographically."""
    if len(keys) == 0:
        return keys, a, b
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if len(uniq) != len(keys):
        a2 = np.zeros(len(uniq), dtype=np.complex128)
        b2 = np.zeros((len(uniq), keys.shape[1]), dtype=np.complex128)
        np.add.at(a2, inverse, a)
        np.add.at(b2, inverse, b)
    else:
        order = np.empty_like(inverse)
        order[inverse] = np.arange(len(inverse))
        a2, b2 = a[order], b[order]
    keep = (a2 != 0) | (b2 != 0).any(axis=1)
    return np.ascontiguousarray(uniq[keep]), a2[keep], np.ascontiguousarray(b2[keep])


def evaluate(f: FourierTaylorFunction, theta, I) -> complex:
    theta = np.asarray(theta, dtype=np.complex128)
    I = np.asarray(I, dtype=np.complex128)
    if len(f) == 0:
        return 0j
    phases = np.exp(TWO_PI * 1j * (f.keys @ theta))
    return complex(np.sum((f.a + f.b @ I) * phases))


def mode_weights(f: FourierTaylorFunction, sigma: float | None = None) -> np.ndarray:
    """Per-mode majorant contributions on the window (or at width ``sigma``)."""
    s = f.window.sigma if sigma is None else sigma
    scale = f.window.R + s
    l1 = np.abs(f.keys).sum(axis=1)
    return (np.abs(f.a) + scale * np.abs(f.b).sum(axis=1)) * np.exp(TWO_PI * s * l1)


def majorant_norm(f: FourierTaylorFunction, sigma: float | None = None) -> float:
    if len(f) == 0:
        return 0.0
    return float(math.fsum(mode_weights(f, sigma)))


def poisson_bracket(f: FourierTaylorFunction, g: FourierTaylorFunction) -> FourierTaylorFunction:
    """``{f, g} = sum_i df/dtheta_i dg/dI_i - df/dI_i dg/dtheta_i``.

    Exact on the affine class: the I-derivative kills the linear part of
    one factor, so the product stays affine in I.
    """
    f._check(g)
    n = f.n
    pieces_k, pieces_a, pieces_b = [], [], []

    # df/dtheta . dg/dI : pairs (any mode of f) x (modes of g with b != 0)
    gb = (g.b != 0).any(axis=1)
    if gb.any() and len(f):
        kf, af, bf = f.keys, f.a, f.b
        kg, bg = g.keys[gb], g.b[gb]
        s = 2j * math.pi * (kf.astype(np.float64) @ bg.T)  # (mf, mg)
        pieces_k.append((kf[:, None, :] + kg[None, :, :]).reshape(-1, n))
        pieces_a.append((s * af[:, None]).reshape(-1))
        pieces_b.append((s[:, :, None] * bf[:, None, :]).reshape(-1, n))

    # - df/dI . dg/dtheta : pairs (modes of f with b != 0) x (any mode of g)
    fb = (f.b != 0).any(axis=1)
    if fb.any() and len(g):
        kf, bf = f.keys[fb], f.b[fb]
        kg, ag, bg = g.keys, g.a, g.b
        t = 2j * math.pi * (bf @ kg.T.astype(np.float64))  # (mf, mg)
        pieces_k.append((kf[:, None, :] + kg[None, :, :]).reshape(-1, n))
        pieces_a.append((-t * ag[None, :]).reshape(-1))
        pieces_b.append((-t[:, :, None] * bg[None, :, :]).reshape(-1, n))

    if not pieces_k:
        return FourierTaylorFunction.zero(f.window)
    return FourierTaylorFunction(f.window, np.vstack(pieces_k), np.concatenate(pieces_a),
                                 np.vstack(pieces_b))


def truncate_modes(f: FourierTaylorFunction, K: float, ledger: NormLedger | None = None):
    """Split off modes with ``|k|_inf > K``.

    Returns ``(low, tail_norm)`` where ``tail_norm`` is the majorant of the
    discarded part on the current window.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    keep = f.sup_orders() <= K
    low = f.select(keep)
    tail = majorant_norm(f.select(~keep))
    if ledger is not None:
        ledger.record(tail, f"modes beyond |k|={K}")
    return low, tail


def _lattice_mask(f: FourierTaylorFunction, lattice) -> np.ndarray:
    from .diophantine import as_lattice

    lat = as_lattice(lattice, f.n)
    if lat.is_trivial:
        return ~f.keys.any(axis=1)
    if lat.direction is None:
        return np.array([tuple(k) in lat for k in f.keys], dtype=bool)
    # exact test of k.v == 0 on a common denominator
    v = lat.direction
    den = math.lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    return np.array([sum(int(c) * m for c, m in zip(k, ints)) == 0 for k in f.keys], dtype=bool)


def resonant_projection(f: FourierTaylorFunction, lattice):
    """Split ``f`` into its lattice-resonant and non-resonant parts.

    ``lattice`` is a :class:`ResonanceLattice`, a rational direction ``v``
    (its kernel lattice is used) or None for ``{0}``.
    """
    mask = _lattice_mask(f, lattice)
    return f.select(mask), f.select(~mask)


# -- interchange format ------------------------------------------------------

def to_json(f: FourierTaylorFunction) -> dict:
    return {
        "window": f.window.to_json(),
        "modes": [
            {"k": [int(c) for c in k],
             "a": [float(a.real), float(a.imag)],
             "b": [[float(x.real), float(x.imag)] for x in b]}
            for k, a, b in zip(f.keys, f.a, f.b)
        ],
    }


def from_json(doc: dict) -> FourierTaylorFunction:
    w = doc["window"]
    window = AnalyticityWindow(float(w["sigma"]), float(w["R"]), int(w["n"]))
    modes = doc.get("modes", [])
    n = window.n
    keys = np.array([m["k"] for m in modes], dtype=np.int64).reshape(-1, n)
    a = np.array([complex(*m["a"]) for m in modes], dtype=np.complex128)
    b = np.array([[complex(*x) for x in m.get("b", [[0, 0]] * n)] for m in modes],
                 dtype=np.complex128).reshape(-1, n)
    if keys.shape[0] and keys.shape[1] != n:
        raise ValueError("mode dimension does not match window.n")
    return FourierTaylorFunction(window, keys, a, b)
