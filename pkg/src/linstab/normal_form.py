"""Resonant normal forms by iterated Lie-series averaging.

Starting from ``H = l_w + f`` with ``l_w(I) = w . I``, each step removes the
non-resonant modes of order ``|k|_inf <= K`` from the perturbation with a
generating function ``chi`` and conjugates by its time-one flow,

    H o Phi = exp(ad_chi) H,    ad_chi F = {F, chi}.

After ``r`` steps the perturbation splits into a lattice-resonant part
``g`` and a remainder ``f'``; everything dropped along the way (orders of
the Lie series past ``m_max``, modes past the mode budget) is booked in a
:class:`NormLedger`.

Absolute constants that the analysis leaves implicit are parameters here:
smallness threshold ``c0 = 1/8``, contraction target ``1/2`` per step,
Lie order ``m_max = 10`` and mode budget ``4 K``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diophantine import ResonanceLattice, as_lattice, min_divisor
from .errors import DenominatorTooSmall, SeriesDivergence, SmallDivisorBreach, StepBudget
from .fourier_taylor import (
    AnalyticityWindow,
    FourierTaylorFunction,
    NormLedger,
    _lattice_mask,
    majorant_norm,
    poisson_bracket,
    truncate_modes,
)

log = logging.getLogger(__name__)

SMALLNESS_C0 = 0.125
CONTRACTION = 0.5
LIE_ORDER = 10
MODE_BUDGET_FACTOR = 4
DIVISOR_FLOOR = 1e-12


def check_smallness(K: float, lam: float, eps: float, c0: float = SMALLNESS_C0) -> bool:
    """``K eps / (lam c0) < 1``."""
    if eps == 0:
        return True
    return K * eps / (lam * c0) < 1


def linear_part(w, window: AnalyticityWindow) -> FourierTaylorFunction:
    return FourierTaylorFunction.linear(window, [float(x) for x in w])


def solve_homological(f_nr: FourierTaylorFunction, w, lattice: ResonanceLattice | None = None,
                      K: float = math.inf, divisor_floor: float = DIVISOR_FLOOR) -> FourierTaylorFunction:
    """Generator ``chi`` with ``{l_w, chi} + f_nr = 0``.

    Mode by mode ``chi_k = f_k / (2 pi i k.w)``. Every mode of ``f_nr`` must
    lie outside the lattice with ``0 < |k|_inf <= K``.
    """
    if f_nr.is_zero():
        return f_nr
    w = np.asarray([float(x) for x in w])
    orders = f_nr.sup_orders()
    if np.any(orders == 0) or np.any(orders > K):
        raise ValueError("modes of f_nr must satisfy 0 < |k|_inf <= K")
    if lattice is not None and np.any(_lattice_mask(f_nr, lattice)):
        raise ValueError("f_nr has modes inside the resonance lattice")
    divisors = f_nr.keys.astype(np.float64) @ w
    small = np.abs(divisors) < divisor_floor
    if small.any():
        k = tuple(int(c) for c in f_nr.keys[np.argmax(small)])
        raise SmallDivisorBreach(f"|k.w| below {divisor_floor:g} at k={k}")
    factor = 1.0 / (2j * math.pi * divisors)
    return FourierTaylorFunction(f_nr.window, f_nr.keys, f_nr.a * factor,
                                 f_nr.b * factor[:, None], _canonical=True)


def _series_tail(norms: list) -> float:
    """Geometric estimate of the omitted orders from the last two term norms."""
    last, nxt = norms[-2], norms[-1]
    if nxt == 0:
        return 0.0
    ratio = nxt / last if last else math.inf
    if ratio >= 1:
        raise SeriesDivergence(f"Lie series term ratio {ratio:.3g} >= 1 at order {len(norms) - 2}")
    return nxt / (1 - ratio)


def lie_series_terms(H: FourierTaylorFunction, chi: FourierTaylorFunction, order: int) -> list:
    """``[ad_chi^m H / m! for m = 0..order]``, stopping early at an exact zero."""
    terms = [H]
    term = H
    for m in range(1, order + 1):
        term = poisson_bracket(term, chi) / m
        terms.append(term)
        if term.is_zero():
            break
    return terms


def lie_transform(H: FourierTaylorFunction, chi: FourierTaylorFunction, order: int = LIE_ORDER,
                  ledger: NormLedger | None = None):
    """Truncated ``exp(ad_chi) H``; returns ``(result, tail)``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if chi.is_zero():
        return H, 0.0
    terms = lie_series_terms(H, chi, order + 1)
    kept = terms[: order + 1]
    result = kept[0]
    for t in kept[1:]:
        result = result + t
    norms = [majorant_norm(t) for t in terms]
    tail = 0.0 if len(terms) <= order + 1 else _series_tail(norms)
    if ledger is not None:
        ledger.record(tail, "Lie series orders past m_max")
    return result, tail


def _transform_perturbation(f, f_nr, chi, order, ledger):
    """Perturbation part of ``exp(ad_chi)(l_w + f)``.

    Uses ``ad_chi l_w = -f_nr`` exactly, so the cancellation of ``f_nr`` is
    done by removing modes rather than by floating-point subtraction:

        exp(ad_chi)(l_w + f) - l_w
            = (f - f_nr) + sum_{j>=1} ad^j f / j! - ad^j f_nr / (j+1)!
    """
    result = f - f_nr
    term_f, term_nr = f, f_nr
    norms = []
    last = None
    for j in range(1, order + 2):
        term_f = poisson_bracket(term_f, chi) / j
        term_nr = poisson_bracket(term_nr, chi) / j
        term = term_f - term_nr / (j + 1)
        norms.append(majorant_norm(term))
        if j <= order:
            result = result + term
        last = term
        if term_f.is_zero() and term_nr.is_zero():
            break
    tail = 0.0
    if len(norms) == order + 1 and last is not None and not last.is_zero():
        tail = _series_tail(norms[-2:])
    ledger.record(tail, "Lie series orders past m_max")
    return result, tail


def _gradient_bound(chi: FourierTaylorFunction) -> float:
    """Majorant of the displacement of the time-one map of ``chi``:
    the larger of the action shift ``grad_theta chi`` and angle shift
    ``grad_I chi``."""
    if chi.is_zero():
        return 0.0
    dtheta = max(majorant_norm(g) for g in chi.grad_theta())
    dI = max(majorant_norm(g) for g in chi.grad_I())
    return max(dtheta, dI)


@dataclass
class NormalFormResult:
    transformed: FourierTaylorFunction
    resonant_part: FourierTaylorFunction
    average: FourierTaylorFunction
    remainder: FourierTaylorFunction
    transform_generators: list
    distance_to_identity: float
    shrunk_window: AnalyticityWindow
    ledger: NormLedger
    K: float
    steps: int
    divisor_floor: float
    smallness_ok: bool
    step_norms: list = field(default_factory=list)

    @property
    def remainder_majorant(self) -> float:
        return majorant_norm(self.remainder)

    @property
    def resonant_norm(self) -> float:
        return majorant_norm(self.resonant_part)

    def report(self) -> dict:
        return {
            "K": self.K,
            "steps": self.steps,
            "remainder_majorant": self.remainder_majorant,
            "resonant_norm": self.resonant_norm,
            "distance_to_identity": self.distance_to_identity,
            "ledger_tail": self.ledger.tail_discarded,
            "divisor_floor": self.divisor_floor,
            "smallness_ok": self.smallness_ok,
        }


def normalize(f: FourierTaylorFunction, w, lattice=None, K: float = 6, steps: int = 6, *,
              order: int = LIE_ORDER, mode_budget: float | None = None,
              c0: float = SMALLNESS_C0, contraction: float = CONTRACTION,
              divisor_floor: float = DIVISOR_FLOOR) -> NormalFormResult:
    """Resonant normal form of ``H = l_w + f`` modulo ``lattice`` up to order ``K``.

    ``lattice`` may be a :class:`ResonanceLattice`, a rational direction or
    None for ``{0}``. The window shrinks linearly from ``sigma`` to
    ``sigma/2`` over the ``steps`` iterations.
    """
    window = f.window
    lat = as_lattice(lattice, window.n)
    w = [float(x) for x in w]
    budget = MODE_BUDGET_FACTOR * K if mode_budget is None else mode_budget
    ledger = NormLedger()
    sigma0 = window.sigma

    lam = min_divisor(w, lat, K)
    eps = majorant_norm(f)
    ok = check_smallness(K, lam, eps, c0)
    if not ok:
        log.warning("smallness condition K eps / (lam c0) < 1 fails: K=%g eps=%.3g lam=%.3g",
                    K, eps, lam)

    def split(g):
        res_mask = _lattice_mask(g, lat)
        low = g.sup_orders() <= K
        return g.select(~res_mask & low)

    generators = []
    distance = 0.0
    step_norms = []
    current = f
    for s in range(1, steps + 1):
        f_nr = split(current)
        before = majorant_norm(f_nr)
        step_norms.append(before)
        if f_nr.is_zero():
            break
        chi = solve_homological(f_nr, w, lat, K, divisor_floor)
        generators.append(chi)
        distance += _gradient_bound(chi)
        current, _ = _transform_perturbation(current, f_nr, chi, order, ledger)
        current, _ = truncate_modes(current, budget, ledger)
        sigma_s = sigma0 * (1 - s / (2 * steps))
        current = current.with_window(sigma_s)
        after = majorant_norm(split(current))
        if after > contraction * before:
            raise StepBudget(
                f"step {s}: non-resonant norm {after:.3g} did not contract below "
                f"{contraction} x {before:.3g}")

    shrunk = window.shrink(sigma0 / 2)
    current = current.with_window(shrunk)
    generators = [g.with_window(shrunk) for g in generators]
    mask = _lattice_mask(current, lat)
    g = current.select(mask)
    remainder = current.select(~mask)
    transformed = linear_part(w, shrunk) + current
    ledger.majorant = majorant_norm(remainder)
    return NormalFormResult(
        transformed=transformed,
        resonant_part=g,
        average=g.zero_mode(),
        remainder=remainder,
        transform_generators=generators,
        distance_to_identity=distance,
        shrunk_window=shrunk,
        ledger=ledger,
        K=K,
        steps=len(generators),
        divisor_floor=lam,
        smallness_ok=ok,
        step_norms=step_norms,
    )


def rational_denominator(v) -> int:
    """Common denominator of a rational direction ``(1, p/q, ...)``."""
    return math.lcm(*(Fraction(x).denominator for x in v))


def split_resonant_average(g: FourierTaylorFunction, v, K: float):
    """Split a ``v``-resonant ``g`` into its angle average and the rest.

    Every non-zero resonant mode has ``|k|_inf >= q > K`` (``q`` the
    denominator of ``v``), so the non-average part is all tail. Returns
    ``(g_bar, g_prime_low, tail_norm)`` with the tail norm taken at half
    the current width.
    """
    q = rational_denominator(v)
    if q <= K:
        raise DenominatorTooSmall(f"denominator q={q} must exceed K={K}")
    mask = _lattice_mask(g, list(v))
    if not mask.all():
        raise ValueError("g is not resonant with respect to v")
    g_bar = g.zero_mode()
    g_prime = g.select(g.keys.any(axis=1))
    if np.any(g_prime.sup_orders() < q):
        raise AssertionError("resonant mode shorter than the denominator")  # divisibility
    low = g_prime.select(g_prime.sup_orders() <= K)
    tail = majorant_norm(g_prime.select(g_prime.sup_orders() > K), sigma=g.window.sigma / 2)
    return g_bar, low, tail
