"""Arithmetic of frequency vectors ``omega = (1, alpha)``.

Real components are never handled as bare floats when a certified answer
is needed: each one is a *refinable real* that hands out rational brackets
of any requested width. The small-divisor function

    Psi(K) = max { 1 / |k . alpha|_Z : k in Z^(n-1), 0 < |k|_inf <= K }

and its companions ``Lambda(x) = x Psi(x)`` and ``Delta = Lambda^-1`` are
computed from those brackets, as are continued-fraction convergents.

Integer vectors are measured in the sup-norm throughout.
"""

from __future__ import annotations

import bisect
import itertools
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import (
    BudgetExceeded,
    OutOfRange,
    PrecisionExhausted,
    ResonanceDetected,
)
from .interval import RationalInterval, dist_to_integers

START_BITS = 64
BUDGET_BITS = 256
DELTA_RTOL = 1e-12
ENUMERATION_BUDGET = 10**6


# ---------------------------------------------------------------------------
# refinable reals
# ---------------------------------------------------------------------------

class QuadraticIrrational:
    """``(p + q*sqrt(d)) / r`` with integer data, ``d`` not a square."""

    def __init__(self, p: int, q: int, d: int, r: int, name: str = ""):
        if d <= 0 or math.isqrt(d) ** 2 == d:
            raise ValueError("d must be a positive non-square")
        if r == 0 or q == 0:
            raise ValueError("degenerate quadratic irrational")
        self.p, self.q, self.d, self.r = p, q, d, r
        self.name = name or f"({p}+{q}*sqrt({d}))/{r}"
        self.exact = False

    def bracket(self, bits: int) -> RationalInterval:
        # floor(sqrt(d) * 2^b) <= sqrt(d) * 2^b < floor(...) + 1
        scale = 1 << bits
        s = math.isqrt(self.d * scale * scale)
        root = RationalInterval(Fraction(s, scale), Fraction(s + 1, scale))
        return (root * self.q + self.p) * Fraction(1, self.r)


class LiouvilleNumber:
    """``sum_{m >= 1} b^(-m!)`` for an integer base ``b >= 2``."""

    def __init__(self, base: int):
        if base < 2:
            raise ValueError("Liouville base must be >= 2")
        self.base = base
        self.name = f"liouville({base})"
        self.exact = False

    def bracket(self, bits: int) -> RationalInterval:
        b = self.base
        partial = Fraction(0)
        m = 1
        while True:
            partial += Fraction(1, b ** math.factorial(m))
            # tail after m terms is below 2 b^(-(m+1)!)
            tail = Fraction(2, b ** math.factorial(m + 1))
            if tail <= Fraction(1, 1 << bits):
                return RationalInterval(partial, partial + tail)
            m += 1


class ExactRational:
    """A component known exactly; its bracket has zero width."""

    def __init__(self, value, name: str = ""):
        self.value = Fraction(value)
        self.name = name or str(self.value)
        self.exact = True

    def bracket(self, bits: int) -> RationalInterval:
        return RationalInterval.point(self.value)


PRESETS = {
    "sqrt2m1": lambda: QuadraticIrrational(-1, 1, 2, 1, name="sqrt2m1"),
    "golden": lambda: QuadraticIrrational(-1, 1, 5, 2, name="golden"),
}


def parse_real(spec):
    """Build a refinable real from a preset name, ``liouville(b)``,
    ``decimal:<digits>``, ``rational:p/q`` or a plain number."""
    if isinstance(spec, (QuadraticIrrational, LiouvilleNumber, ExactRational)):
        return spec
    if isinstance(spec, (int, Fraction)):
        return ExactRational(spec)
    if isinstance(spec, float):
        return ExactRational(Fraction(spec), name=repr(spec))
    s = str(spec).strip()
    if s in PRESETS:
        return PRESETS[s]()
    m = re.fullmatch(r"liouville\((\d+)\)", s)
    if m:
        return LiouvilleNumber(int(m.group(1)))
    if s.startswith("decimal:"):
        digits = s[len("decimal:"):]
        try:
            return ExactRational(Fraction(Decimal(digits)), name=s)
        except InvalidOperation:
            raise ValueError(f"bad decimal literal {digits!r}") from None
    if s.startswith("rational:"):
        return ExactRational(Fraction(s[len("rational:"):]), name=s)
    try:
        return ExactRational(Fraction(s), name=s)
    except ValueError:
        raise ValueError(f"unknown frequency component {spec!r}") from None


@dataclass(frozen=True)
class Frequency:
    """The vector ``omega = (1, alpha_1, ..., alpha_{n-1})``."""

    alpha: tuple
    name: str = field(default="")

    def __post_init__(self):
        comps = tuple(parse_real(a) for a in self.alpha)
        if not comps:
            raise ValueError("need at least one alpha component (n >= 2)")
        object.__setattr__(self, "alpha", comps)
        for comp in comps:
            box = comp.bracket(START_BITS)
            if not (-1 < box.lo and box.hi < 1):
                raise ValueError(f"component {comp.name} violates |alpha_i| < 1")
        if not self.name:
            object.__setattr__(self, "name", ",".join(c.name for c in comps))

    @classmethod
    def parse(cls, spec) -> Frequency:
        if isinstance(spec, Frequency):
            return spec
        if isinstance(spec, (list, tuple)):
            return cls(tuple(spec))
        return cls((spec,))

    @property
    def dim(self) -> int:
        return len(self.alpha) + 1

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.alpha)

    def intervals(self, bits: int = START_BITS) -> tuple:
        return tuple(c.bracket(bits) for c in self.alpha)

    def alpha_floats(self, bits: int = START_BITS) -> tuple:
        return tuple(float(iv.mid) for iv in self.intervals(bits))

    def omega(self, bits: int = START_BITS) -> tuple:
        """Float approximation of the full vector ``(1, alpha)``."""
        return (1.0,) + self.alpha_floats(bits)

    def omega_intervals(self, bits: int = START_BITS) -> tuple:
        return (RationalInterval.point(1),) + self.intervals(bits)


# ---------------------------------------------------------------------------
# small-divisor function
# ---------------------------------------------------------------------------

def _half_space(dim: int, K: int):
    """Integer vectors with ``0 < |k|_inf <= K``, one per +-k pair, whose
    first nonzero entry is positive. Ordered by sup-norm, then lexicographic."""
    out = []
    for k in itertools.product(range(-K, K + 1), repeat=dim):
        first = next((c for c in k if c != 0), 0)
        if first > 0:
            out.append(k)
    out.sort(key=lambda k: (max(abs(c) for c in k), k))
    return out


def _dot(k, boxes) -> RationalInterval:
    acc = RationalInterval.point(0)
    for c, box in zip(k, boxes):
        if c:
            acc = acc + box * c
    return acc


def _psi_sweep(freq: Frequency, K_max: int, budget_bits: int):
    """Running maximum of ``1/|k.alpha|_Z`` over ``|k|_inf <= K`` for every
    K up to ``K_max``; returns one interval per K."""
    ks = _half_space(freq.dim - 1, K_max)
    bits = START_BITS
    while True:
        boxes = freq.intervals(bits)
        ambiguous = None
        dists = []
        for k in ks:
            d = dist_to_integers(_dot(k, boxes))
            if d.lo == 0:
                ambiguous = k
                break
            dists.append(d)
        if ambiguous is None:
            table = []
            ok = True
            # best: smallest distance; keep the smallest hi and the runner-up lo
            best_hi = best_lo = None
            best_idx = -1
            second_lo = None
            idx = 0
            for K in range(1, K_max + 1):
                while idx < len(ks) and max(abs(c) for c in ks[idx]) <= K:
                    d = dists[idx]
                    if best_hi is None or d.hi < best_hi or (d.hi == best_hi and d.lo < best_lo):
                        if best_lo is not None:
                            second_lo = best_lo if second_lo is None else min(second_lo, best_lo)
                        best_hi, best_lo, best_idx = d.hi, d.lo, idx
                    else:
                        second_lo = d.lo if second_lo is None else min(second_lo, d.lo)
                    idx += 1
                # certified maximizer: its whole bracket lies below every other one
                if second_lo is not None and best_hi > second_lo:
                    ok = False
                    break
                table.append(RationalInterval(1 / best_hi, 1 / best_lo))
            if ok:
                return table
        if bits >= budget_bits:
            if ambiguous is not None:
                raise ResonanceDetected(
                    f"|k.alpha|_Z cannot be separated from 0 for k={ambiguous} "
                    f"within {budget_bits} bits")
            raise ResonanceDetected(
                f"maximizer of 1/|k.alpha|_Z not certified within {budget_bits} bits")
        bits = min(2 * bits, budget_bits)


def psi(freq: Frequency, K: int, budget_bits: int = BUDGET_BITS) -> RationalInterval:
    """Certified bracket of ``Psi(K)`` by exhaustive enumeration."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return _psi_sweep(freq, int(K), budget_bits)[-1]


class SmallDivisorProfile:
    """Tabulated ``Psi`` on ``1..K_max`` with a piecewise-linear extension.

    Psi is only nondecreasing on the integers (it can stall between
    convergent denominators), but ``Lambda(x) = x Psi(x)`` is strictly
    increasing, so ``Delta`` is well defined on ``[Lambda(1), Lambda(K_max)]``.
    """

    def __init__(self, frequency: Frequency | None, psi_table: Sequence[RationalInterval]):
        self.frequency = frequency
        self.psi_table = tuple(psi_table)
        self.K_max = len(self.psi_table)
        self._psi = [float(iv.mid) for iv in self.psi_table]
        self._lam = [(i + 1) * v for i, v in enumerate(self._psi)]

    def psi(self, x: float) -> float:
        if not 1 <= x <= self.K_max:
            raise OutOfRange(f"x={x} outside [1, {self.K_max}]")
        if self.K_max == 1:
            return self._psi[0]
        i = min(int(math.floor(x)), self.K_max - 1)
        t = x - i
        return self._psi[i - 1] * (1 - t) + self._psi[i] * t

    def lam(self, x: float) -> float:
        return x * self.psi(x)

    @property
    def lam_range(self) -> tuple:
        return self._lam[0], self._lam[-1]

    def delta(self, y: float, rtol: float = DELTA_RTOL) -> float:
        lo_y, hi_y = self.lam_range
        if not lo_y <= y <= hi_y:
            raise OutOfRange(
                f"y={y:.6g} outside [Lambda(1), Lambda(K_max)] = [{lo_y:.6g}, {hi_y:.6g}]; "
                "grow K_max")
        # bracketing segment from the integer nodes, then bisection
        i = bisect.bisect_left(self._lam, y)
        if i < len(self._lam) and self._lam[i] == y:
            return float(i + 1)
        a, b = float(i), float(i + 1)
        while True:
            m = 0.5 * (a + b)
            val = self.lam(m)
            if abs(val - y) <= rtol * y or m in (a, b):
                return m
            if val < y:
                a = m
            else:
                b = m

    def rows(self) -> list:
        return [{"K": K, "psi_lo": iv.lo, "psi_hi": iv.hi}
                for K, iv in enumerate(self.psi_table, start=1)]

    def to_json(self) -> dict:
        return {
            "frequency": self.frequency.name if self.frequency else None,
            "K_max": self.K_max,
            "rows": [{"K": r["K"], "psi_lo": float(r["psi_lo"]), "psi_hi": float(r["psi_hi"])}
                     for r in self.rows()],
        }


class PowerLawProfile:
    """Closed-form profile of a Diophantine vector: ``Psi(x) = x^tau / gamma``."""

    def __init__(self, gamma: float, tau: float, K_max: float = math.inf):
        if gamma <= 0 or tau < 0:
            raise ValueError("need gamma > 0 and tau >= 0")
        self.gamma, self.tau, self.K_max = gamma, tau, K_max

    def psi(self, x: float) -> float:
        return x ** self.tau / self.gamma

    def lam(self, x: float) -> float:
        return x ** (1 + self.tau) / self.gamma

    @property
    def lam_range(self) -> tuple:
        return self.lam(1.0), self.lam(self.K_max)

    def delta(self, y: float, rtol: float = DELTA_RTOL) -> float:
        lo, hi = self.lam_range
        if not lo <= y <= hi:
            raise OutOfRange(f"y={y} outside [{lo}, {hi}]")
        return (self.gamma * y) ** (1 / (1 + self.tau))


def build_profile(freq: Frequency, K_max: int, budget_bits: int = BUDGET_BITS) -> SmallDivisorProfile:
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    return SmallDivisorProfile(freq, _psi_sweep(freq, int(K_max), budget_bits))


def delta(profile, y: float, rtol: float = DELTA_RTOL) -> float:
    """``Delta(y) = Lambda^-1(y)`` for any profile object."""
    return profile.delta(y, rtol=rtol)


# ---------------------------------------------------------------------------
# continued fractions and Dirichlet approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    err: RationalInterval  # brackets |q alpha - p|

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def _partial_quotients(box: RationalInterval, count: int):
    """Certified partial quotients of every real in ``box``; stops early if
    the bracket no longer determines the next one. Returns (quotients, done)
    where ``done`` marks an exactly terminating expansion."""
    quotients = []
    lo, hi = box.lo, box.hi
    while len(quotients) < count:
        a = math.floor(lo)
        if math.floor(hi) != a:
            return quotients, False
        quotients.append(a)
        lo, hi = lo - a, hi - a
        if lo == 0:
            if hi == 0:
                return quotients, True
            return quotients, False
        lo, hi = 1 / hi, 1 / lo
    return quotients, False


def convergents(freq: Frequency, component: int = 0, j_max: int = 8,
                budget_bits: int = BUDGET_BITS) -> list[Convergent]:
    """First ``j_max`` convergents ``p_j/q_j`` of ``alpha_component`` with
    strictly increasing denominators.

    When the first two convergents share ``q = 1`` (partial quotient
    ``a_1 = 1``) only the better one is kept, so that ``q`` increases
    strictly. An exactly rational component may return fewer entries.
    """
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    real = freq.alpha[component]
    bits = START_BITS
    while True:
        box = real.bracket(bits)
        # one spare quotient covers the possible q_0 == q_1 merge
        quotients, done = _partial_quotients(box, j_max + 1)
        pairs = []
        p_prev, q_prev, p, q = 1, 0, quotients[0] if quotients else 0, 1
        if quotients:
            pairs.append((p, q))
        for a in quotients[1:]:
            p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
            if pairs and pairs[-1][1] == q:
                pairs[-1] = (p, q)
            else:
                pairs.append((p, q))
        if len(pairs) >= j_max or done:
            return [Convergent(p, q, abs(box * q - p)) for p, q in pairs[:j_max]]
        if bits >= budget_bits:
            raise PrecisionExhausted(
                f"only {len(pairs)} convergents certified within {budget_bits} bits")
        bits = min(2 * bits, budget_bits)


def dirichlet_approximation(freq: Frequency, Q: float, bits: int = BUDGET_BITS) -> Convergent:
    """Best ``p/q`` with ``1 <= q < Q`` by exhaustive search; Dirichlet's
    box principle guarantees ``|q alpha - p| <= 1/Q``."""
    if freq.dim != 2:
        raise ValueError("Dirichlet approximation is for n = 2")
    if not Q > 1:
        raise ValueError("Q must exceed 1")
    box = freq.alpha[0].bracket(bits)
    best = None
    q = 1
    while q < Q:
        p = round(box.mid * q)
        err = abs(box * q - p)
        if best is None or err.mid < best.err.mid:
            best = Convergent(int(p), q, err)
        q += 1
    return best


# ---------------------------------------------------------------------------
# resonances and lattices
# ---------------------------------------------------------------------------

def _as_fractions(v) -> tuple:
    return tuple(Fraction(x) for x in v)


def _ext_gcd(a: int, b: int):
    if b == 0:
        return (abs(a), (1 if a >= 0 else -1), 0)
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def integer_kernel_basis(a: Sequence[int]) -> list[tuple]:
    """Basis of ``{k in Z^n : k.a = 0}`` by successive extended-gcd
    column operations (a unimodular ``U`` with ``a U = (g, 0, ..., 0)``)."""
    n = len(a)
    cols = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    lead = a[0]
    for j in range(1, n):
        aj = a[j]
        if aj == 0:
            continue
        if lead == 0:
            cols[0], cols[j] = cols[j], cols[0]
            lead = aj
            continue
        g, x, y = _ext_gcd(lead, aj)
        c0 = [x * u + y * w for u, w in zip(cols[0], cols[j])]
        cj = [(-aj // g) * u + (lead // g) * w for u, w in zip(cols[0], cols[j])]
        cols[0], cols[j] = c0, cj
        lead = g
    return [_normalize_sign(tuple(c)) for c in cols[1:]]


def _normalize_sign(k: tuple) -> tuple:
    first = next((c for c in k if c != 0), 0)
    return tuple(-c for c in k) if first < 0 else k


def _primitive(k: tuple) -> tuple:
    g = math.gcd(*k)
    return tuple(c // g for c in k) if g > 1 else k


def find_resonance(v, search_budget: int = ENUMERATION_BUDGET):
    """Primitive integer ``k != 0`` with ``k.v = 0`` for a rational vector,
    or None when no relation exists (only possible for ``n = 1``).

    A kernel basis is built exactly; its shortest member in sup-norm
    bounds a direct search for the true shortest relation when that
    search fits in ``search_budget`` vectors.
    """
    v = _as_fractions(v)
    if all(x == 0 for x in v):
        raise ValueError("v must be nonzero")
    if len(v) < 2:
        return None
    den = math.lcm(*(x.denominator for x in v))
    a = [int(x * den) for x in v]
    basis = [_primitive(b) for b in integer_kernel_basis(a)]
    best = min(basis, key=lambda k: (max(abs(c) for c in k), k))
    m = max(abs(c) for c in best)
    if (2 * m + 1) ** len(v) <= search_budget:
        for k in _half_space(len(v), m):
            if sum(c * x for c, x in zip(k, a)) == 0:
                return _primitive(k)
    return best


@dataclass(frozen=True)
class ResonanceLattice:
    """A sublattice of ``Z^n`` with exact membership.

    Two kinds are supported: the trivial lattice ``{0}`` (no generators)
    and the full kernel lattice ``{k : k.v = 0}`` of a rational direction.
    """

    n: int
    generators: tuple = ()
    direction: tuple | None = None

    @classmethod
    def trivial(cls, n: int) -> ResonanceLattice:
        return cls(n)

    @classmethod
    def kernel_of(cls, v) -> ResonanceLattice:
        v = _as_fractions(v)
        den = math.lcm(*(x.denominator for x in v))
        gens = tuple(_primitive(b) for b in integer_kernel_basis([int(x * den) for x in v]))
        return cls(len(v), gens, v)

    @property
    def is_trivial(self) -> bool:
        return not self.generators

    def __contains__(self, k) -> bool:
        if self.is_trivial:
            return all(c == 0 for c in k)
        if self.direction is None:
            raise NotImplementedError(
                "membership is only supported for {0} and kernel lattices")
        return sum(int(c) * x for c, x in zip(k, self.direction)) == 0


def as_lattice(lattice_or_v, n: int | None = None) -> ResonanceLattice:
    if isinstance(lattice_or_v, ResonanceLattice):
        return lattice_or_v
    if lattice_or_v is None:
        return ResonanceLattice.trivial(n)
    return ResonanceLattice.kernel_of(lattice_or_v)


class NonresonanceCheck(NamedTuple):
    ok: bool
    witness: tuple | None


def _vector_boxes(w, bits):
    if isinstance(w, Frequency):
        return w.omega_intervals(bits), not w.exact
    return tuple(x if isinstance(x, RationalInterval) else RationalInterval.point(x)
                 for x in w), False


def is_nonresonant_mod_lattice(w, lattice: ResonanceLattice, lam: float, K: float,
                               budget: int = ENUMERATION_BUDGET,
                               budget_bits: int = BUDGET_BITS) -> NonresonanceCheck:
    """Check ``|k.w| >= lam`` for every ``k`` outside the lattice with
    ``0 < |k|_inf <= K``; on failure the offending ``k`` is the witness."""
    n = w.dim if isinstance(w, Frequency) else len(w)
    Ki = int(math.floor(K))
    if (2 * Ki + 1) ** n > budget:
        raise BudgetExceeded(f"(2K+1)^n = {(2 * Ki + 1) ** n} exceeds budget {budget}")
    lam = Fraction(lam)
    ks = [k for k in _half_space(n, Ki) if k not in lattice]
    bits = START_BITS
    while True:
        boxes, refinable = _vector_boxes(w, bits)
        undecided = None
        for k in ks:
            d = abs(_dot(k, boxes))
            if d.lo >= lam:
                continue
            if d.hi < lam:
                return NonresonanceCheck(False, k)
            undecided = k
            break
        if undecided is None:
            return NonresonanceCheck(True, None)
        if not refinable or bits >= budget_bits:
            # cannot separate |k.w| from lam: report as a violation
            return NonresonanceCheck(False, undecided)
        bits = min(2 * bits, budget_bits)


def min_divisor(w: Sequence[float], lattice: ResonanceLattice, K: float) -> float:
    """``min |k.w|`` over ``k`` outside the lattice with ``0 < |k|_inf <= K``
    (float arithmetic; used to size normal-form steps)."""
    n = len(w)
    best = math.inf
    for k in _half_space(n, int(math.floor(K))):
        if k in lattice:
            continue
        best = min(best, abs(math.fsum(c * x for c, x in zip(k, w))))
    return best
