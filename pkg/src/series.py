# src/series.py
"""
Truncated integer power series around y^q - y = z and the coefficient
families built from it:

    y^a                          = sum D_k1(a) z^k1
    y^i (q y^(q-1) - 1)^(p^N-1)  = sum E_k1(i, N) z^k1
    same, with z = f(x)          = sum C_r(i, N) x^r

Only s = 1 curves are handled; their F_p coefficients lift to integers.
"""
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import factorint
from sympy.polys.domains import ZZ
from sympy.polys.ring_series import rs_mul, rs_pow, rs_subs, rs_trunc
from sympy.polys.rings import PolyElement, ring

from src.curve import CurveSpec
from src.field import digit_sum
from src.newton import ord_p
from src.tiling import GuardrailExceeded, INF, enumerate_partitions, tilde_s

logger = logging.getLogger(__name__)

SERIES_RING, Z = ring('z', ZZ)

DEFAULT_TRUNCATION = 200
MAX_TRUNCATION = 400

PASS, FAIL, FLAG = 'PASS', 'FAIL', 'FLAG'


class UnsupportedConfiguration(ValueError):
    pass


def prime_power(q: int) -> Tuple[int, int]:
    """(p, u) with q = p^u."""
    factors = factorint(q)
    if q < 2 or len(factors) != 1:
        raise ValueError(f"{q} is not a prime power")
    (p, u), = factors.items()
    return int(p), int(u)


def s_p(n: int, p: int) -> int:
    """Digit sum extended by s_p(-1) = -1."""
    return -1 if n == -1 else digit_sum(n, p)


class TruncSeries:
    """
    Integer power series modulo z^(R+1), optionally with coefficients reduced mod a modulus.

    Wraps an element of ZZ[z]; products, powers and substitution go through
    sympy's ring_series at precision R + 1.
    """

    def __init__(self, coeffs, R: int, modulus: Optional[int] = None):
        if R < 0:
            raise ValueError("truncation order must be nonnegative")
        self.R = R
        self.modulus = modulus
        if isinstance(coeffs, PolyElement):
            poly = rs_trunc(coeffs, Z, R + 1)
        else:
            poly = SERIES_RING.from_dict({(k,): c for k, c in enumerate(list(coeffs)[:R + 1]) if c})
        if modulus is not None:
            poly = _reduce(poly, modulus)
        self.poly = poly

    @classmethod
    def monomial(cls, c: int, k: int, R: int, modulus: Optional[int] = None) -> 'TruncSeries':
        return cls(c * Z ** k if k <= R else SERIES_RING.zero, R, modulus)

    @classmethod
    def constant(cls, c: int, R: int, modulus: Optional[int] = None) -> 'TruncSeries':
        return cls.monomial(c, 0, R, modulus)

    @property
    def coeffs(self) -> List[int]:
        get = self.poly.get
        return [int(get((k,), 0)) for k in range(self.R + 1)]

    def __getitem__(self, k: int) -> int:
        return int(self.poly.get((k,), 0)) if 0 <= k <= self.R else 0

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self.R == other.R and self.coeffs == other.coeffs

    def __repr__(self):
        shown = ', '.join(str(c) for c in self.coeffs[:8])
        return f"TruncSeries([{shown}{', ...' if self.R >= 8 else ''}], R={self.R})"

    def valuation(self) -> Optional[int]:
        """Index of the first nonzero coefficient; None for the zero series."""
        return min((monom[0] for monom, c in self.poly.items() if c), default=None)

    def truncate(self, R: int) -> 'TruncSeries':
        return TruncSeries(self.poly, R, self.modulus)

    def _like(self, poly: PolyElement, R: Optional[int] = None) -> 'TruncSeries':
        return TruncSeries(poly, self.R if R is None else R, self.modulus)

    def __add__(self, other):
        if isinstance(other, int):
            other = TruncSeries.constant(other, self.R)
        return self._like(self.poly + other.poly, min(self.R, other.R))

    def __neg__(self):
        return self._like(-self.poly)

    def __sub__(self, other):
        if isinstance(other, int):
            other = TruncSeries.constant(other, self.R)
        return self + (-other)

    def scale(self, c: int) -> 'TruncSeries':
        return self._like(self.poly * c)

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        R = min(self.R, other.R)
        return self._like(rs_mul(self.poly, other.poly, Z, R + 1), R)

    __rmul__ = scale

    def __pow__(self, e: int) -> 'TruncSeries':
        if e < 0:
            raise ValueError("negative powers are not supported")
        if e == 0:
            return TruncSeries.constant(1, self.R, self.modulus)
        return self._like(rs_pow(self.poly, e, Z, self.R + 1))

    def compose(self, inner: 'TruncSeries') -> 'TruncSeries':
        """self(inner(x)); inner must have zero constant term."""
        if inner[0] != 0:
            raise ValueError("composition needs an inner series without constant term")
        R = min(self.R, inner.R)
        outer = rs_trunc(self.poly, Z, R + 1)
        return self._like(rs_subs(outer, {Z: inner.poly}, Z, R + 1), R)


def _reduce(poly: PolyElement, modulus: int) -> PolyElement:
    """Coefficients reduced into 0..modulus-1."""
    return SERIES_RING.from_dict({monom: int(c) % modulus for monom, c in poly.items() if int(c) % modulus})


# -- y and D -----------------------------------------------------------------------

@lru_cache(maxsize=32)
def _solve_y(q: int, R: int) -> Tuple[int, ...]:
    # y = y^q - z, each pass fixes q - 1 further coefficients
    y = -Z
    correct = 1
    steps = 0
    while True:
        order = min(R, correct + q - 1)
        nxt = rs_pow(y, q, Z, order + 1) - Z
        steps += 1
        if order == R and nxt == y:
            break
        y, correct = nxt, order
    logger.debug(f"y^{q} - y = z solved to order {R} in {steps} steps")
    return tuple(TruncSeries(y, R).coeffs)


def solve_y(q: int, R: int = DEFAULT_TRUNCATION) -> TruncSeries:
    """The series y with y(0) = 0 and y^q - y = z modulo z^(R+1)."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if R < 1:
        raise ValueError("R must be positive")
    return TruncSeries(_solve_y(q, R), R)


def D_coeff(a: int, k1: int, q: int) -> int:
    """z^k1 coefficient of y^a, from the closed form with exact factorials."""
    if a < 1:
        raise ValueError("a must be positive")
    if k1 < a or (k1 - a) % (q - 1):
        return 0
    m = (k1 - a) // (q - 1)
    sign = -1 if k1 % 2 else 1
    value, rem = divmod(a * factorial(k1 + m - 1), factorial(k1) * factorial(m))
    assert rem == 0
    return sign * value


@dataclass
class DkResult:
    a: int
    k1: int
    observed: int
    predicted: Fraction
    kind: str
    ok: bool
    printed_ok: bool = True


def ord_D_check(a: int, k1: int, q: int) -> DkResult:
    """
    Valuation of D_k1(a) with a = i + l(q-1), 1 <= i <= q-1.

    l = 0: ord = ord_p(i) + (s_p(k1) - s_p(i-1) - 1)/(p-1), exactly
    l >= 1: ord >= (s_p(k1) - s_p(i-1) - 1)/(p-1) - (l-1)u
    """
    p, u = prime_power(q)
    value = D_coeff(a, k1, q)
    if value == 0:
        raise ValueError(f"D_{k1}({a}) vanishes for q={q}")
    i = (a - 1) % (q - 1) + 1
    l = (a - i) // (q - 1)
    observed = ord_p(value, p)
    base = Fraction(digit_sum(k1, p) - s_p(i - 1, p) - 1, p - 1)
    if l == 0:
        exact = base + ord_p(i, p)
        return DkResult(a, k1, observed, exact, 'equality', observed == exact, observed == base)
    bound = base - (l - 1) * u
    return DkResult(a, k1, observed, bound, 'bound', observed >= bound)


# -- E and C -----------------------------------------------------------------------

def E_coeffs(i: int, N: int, q: int, R: int = DEFAULT_TRUNCATION,
             modulus: Optional[int] = None) -> TruncSeries:
    """Series y^i (q y^(q-1) - 1)^(p^N - 1) in z, truncated at R."""
    p, _ = prime_power(q)
    if not 0 <= i <= q - 1:
        raise ValueError(f"i must lie in 0..{q - 1}")
    if N < 1:
        raise ValueError("N must be positive")
    y = solve_y(q, R)
    if modulus is not None:
        y = TruncSeries(y.coeffs, R, modulus)
    factor = (y ** (q - 1)).scale(q) - 1
    return (y ** i) * (factor ** (p ** N - 1))


def E_coeff(k1: int, i: int, N: int, q: int) -> int:
    """E_k1(i, N) as sum_l (-1)^(p^N-1-l) C(p^N-1, l) q^l D_k1(i + l(q-1))."""
    p, _ = prime_power(q)
    top = p ** N - 1
    total = 0
    for l in range(top + 1):
        a = i + l * (q - 1)
        if a > k1:
            break
        term = (1 if k1 == 0 else 0) if a == 0 else D_coeff(a, k1, q)
        if term:
            sign = -1 if (top - l) % 2 else 1
            total += sign * comb(top, l) * q ** l * term
    return total


@dataclass
class CheckResult:
    check: str
    params: Dict[str, object]
    status: str
    observed: Optional[str] = None
    expected: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        return {'check': self.check, **{k: str(v) for k, v in self.params.items()},
                'status': self.status, 'observed': self.observed, 'expected': self.expected}


def predicted_E_ord(i: int, k1: int, q: int) -> Optional[Fraction]:
    """Predicted ord_p(E_k1(i, N)); None when E vanishes identically."""
    p, _ = prime_power(q)
    if k1 < i or (k1 - i) % (q - 1):
        return None
    if k1 == 0:
        return Fraction(0)
    if i == 0:
        return Fraction(digit_sum(k1, p), p - 1)
    return ord_p(i, p) + Fraction(digit_sum(k1, p) - s_p(i - 1, p) - 1, p - 1)


def E_valuation_check(i: int, k1: int, N: int, q: int, value: Optional[int] = None) -> CheckResult:
    p, _ = prime_power(q)
    value = E_coeff(k1, i, N, q) if value is None else value
    predicted = predicted_E_ord(i, k1, q)
    observed = ord_p(value, p)
    params = {'q': q, 'i': i, 'N': N, 'k1': k1}
    if predicted is None:
        status = PASS if value == 0 else FAIL
        return CheckResult('E', params, status, str(value), '0')
    status = PASS if observed is not None and observed == predicted else FAIL
    return CheckResult('E', params, status, 'inf' if observed is None else str(observed), str(predicted))


def lift_polynomial(spec: CurveSpec, lifts: Optional[Sequence[int]] = None) -> List[int]:
    """Integer lift of f with a_0 dropped: [0, a_1, ..., a_d]."""
    if spec.s != 1:
        raise UnsupportedConfiguration(f"series checks need s = 1 (got s={spec.s})")
    coeffs = list(spec.coeffs if lifts is None else lifts)
    if lifts is not None:
        if len(coeffs) != spec.d + 1:
            raise ValueError(f"expected {spec.d + 1} lifts, got {len(coeffs)}")
        bad = [l for l, (a, c) in enumerate(zip(coeffs, spec.coeffs)) if (a - c) % spec.p]
        if bad:
            raise ValueError(f"lift of a_{bad[0]} does not reduce to the curve coefficient")
    return [0] + coeffs[1:]


def C_series(f_lift: Sequence[int], i: int, N: int, q: int, R: int,
             modulus: Optional[int] = None, max_truncation: int = MAX_TRUNCATION) -> TruncSeries:
    """C_r(i, N) for r = 0..R: the E series composed with z = f(x)."""
    if R > max_truncation:
        raise GuardrailExceeded(f"truncation {R} exceeds the limit {max_truncation}")
    if f_lift and f_lift[0]:
        raise ValueError("the lifted polynomial must have zero constant term")
    E = E_coeffs(i, N, q, R, modulus)
    return E.compose(TruncSeries(list(f_lift), R, modulus))


def C_coeffs(spec: CurveSpec, i: int, N: int, R: Optional[int] = None, lifts: Optional[Sequence[int]] = None,
             modulus: Optional[int] = None, max_truncation: int = MAX_TRUNCATION) -> List[int]:
    R = max(60, spec.d) if R is None else R
    if not 0 <= i <= spec.q - 2:
        raise ValueError(f"i must lie in 0..{spec.q - 2}")
    return C_series(lift_polynomial(spec, lifts), i, N, spec.q, R, modulus, max_truncation).coeffs


def C_combinatorial(f_lift: Sequence[int], i: int, N: int, q: int, r: int,
                    E: Optional[TruncSeries] = None) -> int:
    """
    sum over k in K_r of E_k1 * prod binom(k_l, k_(l+1)) * prod a_l^(k_l - k_(l+1)).
    """
    d = len(f_lift) - 1
    while d > 1 and not f_lift[d]:
        d -= 1
    E = E or E_coeffs(i, N, q, max(r, 1))
    total = 0
    for k in enumerate_partitions(r, d):
        term = E[k.k[0]]
        if not term:
            continue
        for l, m in enumerate(k.differences(), start=1):
            term *= f_lift[l] ** m
            if l < d:
                term *= comb(k.k[l - 1], k.k[l])
            if not term:
                break
        total += term
    return total


def rel_check(f_lift: Sequence[int], i: int, N: int, a: int, q: int, r_max: int) -> CheckResult:
    """C_r(i, N + a) = C_r(i, N) mod p^(N+1) for r <= r_max."""
    p, _ = prime_power(q)
    modulus = p ** (N + 1)
    low = C_series(f_lift, i, N, q, r_max, modulus)
    high = C_series(f_lift, i, N + a, q, r_max, modulus)
    params = {'q': q, 'i': i, 'N': N, 'a': a, 'f': list(f_lift)}
    for r in range(r_max + 1):
        if low[r] != high[r]:
            return CheckResult('rel', {**params, 'r': r}, FAIL, str(high[r]), str(low[r]))
    return CheckResult('rel', params, PASS)


def cmod_check(p: int, u: int, h: int, j: int, i: int, N: int, b: int, coeff_lift: int,
               others: Optional[Dict[int, int]] = None, seed: int = 0) -> CheckResult:
    """
    C_r(i, N) with r = j(p^(bh) - 1) against p^b a_d^((p^(bh)-1)/(p^h-1)) mod p^(b+1), d = j(p^h - 1).

    Lower coefficients come from `others` or are drawn from 0..p-1 with the seed.
    Outside p = 2, u = 1, i = 0 a mismatch is reported as FLAG.
    """
    q = p ** u
    d = j * (p ** h - 1)
    r = j * (p ** (b * h) - 1)
    if not 0 <= i <= q - 2:
        raise ValueError(f"i must lie in 0..{q - 2}")
    rng = random.Random(seed)
    f_lift = [0] * (d + 1)
    for l in range(1, d):
        f_lift[l] = others[l] if others and l in others else rng.randrange(p)
    f_lift[d] = coeff_lift
    modulus = p ** (b + 1)
    observed = C_series(f_lift, i, N, q, r, modulus)[r]
    expected = p ** b * pow(coeff_lift, (p ** (b * h) - 1) // (p ** h - 1), modulus) % modulus
    params = {'p': p, 'u': u, 'h': h, 'j': j, 'i': i, 'N': N, 'b': b, 'f': f_lift}
    if observed == expected:
        status = PASS
    elif p == 2 and u == 1 and i == 0:
        status = FAIL
    else:
        status = FLAG
    return CheckResult('cmod', params, status, str(observed), str(expected))


def valuation_bound_check(spec: CurveSpec, i: int, N: int, r: int,
                          C: Optional[Sequence[int]] = None) -> CheckResult:
    """ord_p(C_r(i, N)) >= (s~_p(r, supp) - s_p(i-1) - 1)/(p-1); C_r = 0 when no tiling exists."""
    p = spec.p
    value = (C if C is not None else C_coeffs(spec, i, N, R=r))[r]
    support = [l for l in spec.support if l >= 1]
    least = tilde_s(r, support, p)
    params = {'curve': spec.to_string(), 'i': i, 'N': N, 'r': r}
    observed = ord_p(value, p)
    if least == INF:
        return CheckResult('bound', params, PASS if value == 0 else FAIL, str(value), '0')
    bound = Fraction(least - s_p(i - 1, p) - 1, p - 1)
    status = PASS if observed is None or observed >= bound else FAIL
    return CheckResult('bound', params, status, 'inf' if observed is None else str(observed), f">= {bound}")


# -- verification grids ------------------------------------------------------------

def verify_y(qs: Sequence[int] = (2, 3, 4, 9), R: int = DEFAULT_TRUNCATION) -> List[CheckResult]:
    results = []
    for q in qs:
        y = solve_y(q, R)
        residual = y ** q - y - TruncSeries.monomial(1, 1, R)
        bad = residual.valuation()
        status = PASS if bad is None and y[0] == 0 else FAIL
        results.append(CheckResult('y', {'q': q, 'R': R}, status,
                                   None if bad is None else f"z^{bad}: {residual[bad]}"))
    return results


def verify_D(qs: Sequence[int] = (2, 3, 4), a_max: int = 6, k1_max: int = 40) -> List[CheckResult]:
    """Closed form against the series coefficients, then the valuation statements."""
    results = []
    for q in qs:
        y = solve_y(q, k1_max)
        power = TruncSeries.constant(1, k1_max)
        for a in range(1, a_max + 1):
            power = power * y
            for k1 in range(1, k1_max + 1):
                closed = D_coeff(a, k1, q)
                params = {'q': q, 'a': a, 'k1': k1}
                if closed != power[k1]:
                    results.append(CheckResult('D', params, FAIL, str(power[k1]), str(closed)))
                    continue
                if closed == 0:
                    continue
                dk = ord_D_check(a, k1, q)
                results.append(CheckResult('D', params, PASS if dk.ok else FAIL,
                                           str(dk.observed), f"{'=' if dk.kind == 'equality' else '>='} {dk.predicted}"))
    return results


def verify_E(qs: Sequence[int] = (2, 3), Ns: Sequence[int] = (1, 2), k1_max: int = 40) -> List[CheckResult]:
    results = []
    for q in qs:
        for N in Ns:
            for i in range(q):
                series = E_coeffs(i, N, q, k1_max)
                for k1 in range(k1_max + 1):
                    closed = E_coeff(k1, i, N, q)
                    if closed != series[k1]:
                        results.append(CheckResult('E', {'q': q, 'i': i, 'N': N, 'k1': k1}, FAIL,
                                                   str(series[k1]), str(closed)))
                        continue
                    results.append(E_valuation_check(i, k1, N, q, value=closed))
    return results


def _sample_lift(rng: random.Random, p: int, d: int) -> List[int]:
    lift = [0] + [rng.randrange(-2 * p, 2 * p + 1) for _ in range(d)]
    while lift[d] % p == 0:
        lift[d] = rng.randrange(-2 * p, 2 * p + 1)
    return lift


def verify_C(r_max: int = 60, qs: Sequence[int] = (2, 3), Ns: Sequence[int] = (1, 2),
             degrees: Sequence[int] = (1, 2, 3), seed: int = 0) -> List[CheckResult]:
    """Composition against the sum over K_r, plus C_r = E_r for f = x."""
    rng = random.Random(seed)
    results = []
    for q in qs:
        p, _ = prime_power(q)
        for N in Ns:
            E = E_coeffs(0, N, q, r_max)
            for d in degrees:
                f_lift = [0, 1] if d == 1 else _sample_lift(rng, p, d)
                composed = E.compose(TruncSeries(f_lift, r_max))
                params = {'q': q, 'i': 0, 'N': N, 'f': f_lift}
                mismatch = None
                for r in range(r_max + 1):
                    expected = E[r] if d == 1 else C_combinatorial(f_lift, 0, N, q, r, E=E)
                    if composed[r] != expected:
                        mismatch = (r, composed[r], expected)
                        break
                if mismatch:
                    results.append(CheckResult('C', {**params, 'r': mismatch[0]}, FAIL,
                                               str(mismatch[1]), str(mismatch[2])))
                else:
                    results.append(CheckResult('C', {**params, 'r': f"0..{r_max}"}, PASS))
    return results


def verify_rel(qs: Sequence[int] = (2, 3), r_max: int = 30, seed: int = 0) -> List[CheckResult]:
    rng = random.Random(seed)
    results = []
    for q in qs:
        p, _ = prime_power(q)
        f_lift = _sample_lift(rng, p, 3 if p != 3 else 2)
        for i in range(q - 1):
            for N in (1, 2):
                for a in (0, 1, 2):
                    if p ** (N + a) > 64:
                        continue
                    results.append(rel_check(f_lift, i, N, a, q, r_max))
    return results


CMOD_GRID = [
    # (p, u, h, j, b)
    (2, 1, 2, 1, 1),
    (2, 1, 2, 1, 2),
    (3, 1, 1, 1, 1),
    (3, 1, 1, 2, 1),
]


def verify_cmod(grid: Sequence[Tuple[int, int, int, int, int]] = tuple(CMOD_GRID),
                Ns: Sequence[int] = (1, 2), seed: int = 0) -> List[CheckResult]:
    results = []
    for p, u, h, j, b in grid:
        for N in Ns:
            for i in range(p ** u - 1):
                for lift in range(p):
                    results.append(cmod_check(p, u, h, j, i, N, b, lift, seed=seed + lift))
    flagged = [res for res in results if res.status == FLAG]
    if flagged:
        logger.warning(f"{len(flagged)} congruence points outside p = 2, i = 0 disagree (flagged)")
    return results


BOUND_CURVES = [
    'p=2 u=1 s=1 f=x^3',
    'p=2 u=1 s=1 f=x^5+x^3',
    'p=3 u=1 s=1 f=x^4+2*x',
    'p=3 u=1 s=1 f=x^5+x^2',
    'p=5 u=1 s=1 f=x^3+x',
]


def verify_bound(curves: Sequence[str] = tuple(BOUND_CURVES), N: int = 1, n_max: int = 3,
                 r_cap: int = 120) -> List[CheckResult]:
    """Sampled r = m p^M - j <= r_cap with M <= n_max, for every i."""
    from src.curve import parse_curve

    results = []
    for text in curves:
        spec = parse_curve(text)
        p = spec.p
        samples = sorted({m * p ** M - jj for M in range(1, n_max + 1) for m in (1, 2)
                          for jj in range(1, p + 1) if 1 <= m * p ** M - jj <= r_cap})
        R = max(samples)
        for i in range(spec.q - 1):
            C = C_coeffs(spec, i, N, R=R)
            for r in samples:
                results.append(valuation_bound_check(spec, i, N, r, C=C))
    return results


VERIFIERS = {
    'y': verify_y,
    'D': verify_D,
    'E': verify_E,
    'C': verify_C,
    'rel': verify_rel,
    'cmod': verify_cmod,
    'bound': verify_bound,
}


def run_verification(selector: str = 'all', truncation: int = DEFAULT_TRUNCATION,
                     max_truncation: int = MAX_TRUNCATION) -> List[CheckResult]:
    """Run one named grid, or all of them; y uses the configured truncation order."""
    names = list(VERIFIERS) if selector == 'all' else [selector]
    if truncation > max_truncation:
        raise GuardrailExceeded(f"truncation {truncation} exceeds the limit {max_truncation}")
    results = []
    for name in names:
        if name not in VERIFIERS:
            raise ValueError(f"unknown series check {name!r}")
        batch = verify_y(R=truncation) if name == 'y' else VERIFIERS[name]()
        failed = sum(1 for res in batch if res.status == FAIL)
        logger.info(f"series {name}: {len(batch)} checks, {failed} failures")
        if failed:
            logger.error(f"series {name}: first failure {next(r for r in batch if r.status == FAIL).to_dict()}")
        results.extend(batch)
    return results
