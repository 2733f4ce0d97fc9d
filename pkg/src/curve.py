# src/curve.py
"""
Generalized Artin-Schreier curves y^q - y = f(x) over F_Q, q = p^u, Q = p^s.

Point counts over F_{Q^n} are computed either by brute force over pairs
(the oracle) or by the additive fibre count: y -> y^q - y on F_{Q^n} has
kernel F_{p^g} with g = gcd(u, s*n) and its image is the kernel of the
relative trace down to F_{p^g}.
"""
import json
import logging
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import gcd, isqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.field import (
    FieldCtx,
    check_budget,
    digit_sum,
    extend,
    field_of_order,
)
from src.newton import LPolynomial

logger = logging.getLogger(__name__)

# codes evaluated per numpy batch when counting trace zeros
TRACE_BLOCK = 2 ** 16


class CountingInconsistency(ValueError):
    def __init__(self, n: int, message: str):
        self.n = n
        self.message = message
        super().__init__(f"counting inconsistency at n={n}: {message}")

    def __reduce__(self):
        return type(self), (self.n, self.message)


class CurveParseError(ValueError):
    def __init__(self, message: str, column: int, text: str = ''):
        self.column = column
        self.text = text
        self.message = message
        super().__init__(f"{message} (column {column})")

    def __reduce__(self):
        return type(self), (self.message, self.column, self.text)


@dataclass(frozen=True)
class CurveSpec:
    """y^(p^u) - y = a_d x^d + ... + a_0 over F_(p^s); coeffs are F_Q codes, a_0 first."""
    p: int
    u: int
    s: int
    coeffs: Tuple[int, ...]

    def __post_init__(self):
        if self.u < 1 or self.s < 1:
            raise ValueError("u and s must be positive")
        field = self.field  # validates p
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ValueError("f has no coefficients")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, 'coeffs', coeffs)
        if any(not 0 <= c < field.size for c in coeffs):
            raise ValueError(f"coefficients must be codes of F_{field.size}")
        if self.d < 1 or coeffs[-1] == 0:
            raise ValueError("f must have degree d >= 1")
        if self.d % self.p == 0:
            raise ValueError(f"degree {self.d} must be coprime to p={self.p}")

    @property
    def d(self) -> int:
        return len(self.coeffs) - 1

    @property
    def q(self) -> int:
        return self.p ** self.u

    @property
    def Q(self) -> int:
        return self.p ** self.s

    @property
    def field(self) -> FieldCtx:
        return field_of_order(self.p, self.s)

    def extension(self, n: int) -> FieldCtx:
        """F_{Q^n} as a degree-n extension of F_Q; F_Q codes embed unchanged."""
        return self.field if n == 1 else extend(self.field, n)

    @property
    def support(self) -> List[int]:
        return [i for i, c in enumerate(self.coeffs) if c]

    def to_string(self) -> str:
        return f"p={self.p} u={self.u} s={self.s} f={format_poly(self)}"

    def to_json(self) -> dict:
        field = self.field
        return {'p': self.p, 'u': self.u, 's': self.s,
                'coeffs': [field.flat_coordinates(c) if self.s > 1 else [c] for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict) -> 'CurveSpec':
        p, u, s = int(data['p']), int(data['u']), int(data['s'])
        field = field_of_order(p, s)
        codes = []
        for entry in data['coeffs']:
            entry = entry if isinstance(entry, list) else [entry]
            codes.append(field.encode(entry) if s > 1 else int(entry[0]) % p)
        return cls(p, u, s, tuple(codes))


def genus(spec: CurveSpec) -> int:
    return (spec.q - 1) * (spec.d - 1) // 2


def support_sigma(spec: CurveSpec) -> Tuple[List[int], int]:
    support = spec.support
    sigma = max(digit_sum(l, spec.p) for l in support)
    return support, sigma


# -- curve descriptions ---------------------------------------------------------

_HEADER = re.compile(r'\s*(p|u|s|f)\s*=\s*')
_TERM = re.compile(r'\s*(?:(?P<coef>\d+|\([\d,\s]*\)|\[[\d,\s]*\])\s*(?P<star>\*)?)?\s*(?P<x>x(?:\s*\^\s*(?P<exp>\d+))?)?\s*')


def _parse_coefficient(token: str, field: FieldCtx, column: int, text: str) -> int:
    inner = token.strip('()[]')
    parts = [part.strip() for part in inner.split(',')] if inner.strip() else []
    try:
        values = [int(part) for part in parts]
    except ValueError:
        raise CurveParseError(f"bad coefficient {token!r}", column, text)
    if len(values) == 1 and not token.startswith(('(', '[')):
        return values[0] % field.p
    if len(values) != field.abs_degree:
        raise CurveParseError(
            f"coefficient {token!r} needs {field.abs_degree} entries for F_{field.size}", column, text)
    if any(not 0 <= v < field.p for v in values):
        raise CurveParseError(f"coefficient entries must lie in 0..{field.p - 1}", column, text)
    code = 0
    for v in reversed(values):
        code = code * field.p + v
    return code


def _parse_poly(text: str, offset: int, full: str, field: FieldCtx) -> Tuple[int, ...]:
    terms = {}
    pos = 0
    sign = 1
    expect_term = True
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if not expect_term:
            if text[pos] in '+-':
                sign = 1 if text[pos] == '+' else -1
                pos += 1
                expect_term = True
                continue
            raise CurveParseError(f"expected '+' or '-', found {text[pos]!r}", offset + pos + 1, full)
        if text[pos] in '+-':
            if text[pos] == '-':
                sign = -sign
            pos += 1
            continue
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or (m.group('coef') is None and m.group('x') is None):
            raise CurveParseError(f"unexpected {text[pos]!r}", offset + pos + 1, full)
        if m.group('star') and m.group('x') is None:
            raise CurveParseError("'*' must be followed by x", offset + m.end() + 1, full)
        coef = 1
        if m.group('coef') is not None:
            coef = _parse_coefficient(m.group('coef'), field, offset + m.start('coef') + 1, full)
        if m.group('x') is None:
            exponent = 0
        else:
            exponent = int(m.group('exp')) if m.group('exp') is not None else 1
        value = coef if sign > 0 else field.neg(coef)
        terms[exponent] = field.add(terms.get(exponent, 0), value)
        sign = 1
        pos = m.end()
        expect_term = False
    if expect_term:
        raise CurveParseError("polynomial ends without a term", offset + len(text) + 1, full)
    degree = max(terms)
    return tuple(terms.get(i, 0) for i in range(degree + 1))


def parse_curve(text: str) -> CurveSpec:
    """
    Parse 'p=<int> u=<int> s=<int> f=<c_d>*x^<d>+...'.

    Coefficients over extension fields are written as coordinate lists over F_p,
    constant term first, e.g. '(0,1)*x^3' for t*x^3 in F_4.
    """
    values = {}
    pos = 0
    while pos < len(text) and 'f' not in values:
        if text[pos].isspace():
            pos += 1
            continue
        m = _HEADER.match(text, pos)
        if not m:
            raise CurveParseError(f"expected one of p=, u=, s=, f= at {text[pos:pos + 8]!r}", pos + 1, text)
        key = m.group(1)
        if key in values:
            raise CurveParseError(f"duplicate key {key}", pos + 1, text)
        if key == 'f':
            values['f'] = (m.end(), text[m.end():])
            break
        num = re.match(r'\d+', text[m.end():])
        if not num:
            raise CurveParseError(f"{key} needs an integer value", m.end() + 1, text)
        values[key] = int(num.group(0))
        pos = m.end() + num.end()
    for key in ('p', 'f'):
        if key not in values:
            raise CurveParseError(f"missing {key}=", len(text) + 1, text)
    p, u, s = values['p'], values.get('u', 1), values.get('s', 1)
    try:
        field = field_of_order(p, s)
    except ValueError as err:
        raise CurveParseError(str(err), text.find('p=') + 1, text)
    offset, poly_text = values['f']
    coeffs = _parse_poly(poly_text, offset, text, field)
    try:
        return CurveSpec(p, u, s, coeffs)
    except ValueError as err:
        raise CurveParseError(str(err), offset + 1, text)


def load_curve(text: str) -> CurveSpec:
    """Curve from either the text form or the JSON form."""
    stripped = text.strip()
    if stripped.startswith('{'):
        try:
            return CurveSpec.from_json(json.loads(stripped))
        except (KeyError, TypeError, json.JSONDecodeError) as err:
            raise CurveParseError(f"invalid curve JSON: {err}", 1, text)
    return parse_curve(text)


def format_poly(spec: CurveSpec) -> str:
    field = spec.field
    terms = []
    for i in range(spec.d, -1, -1):
        c = spec.coeffs[i]
        if not c:
            continue
        if spec.s == 1:
            coef = str(c)
        else:
            coef = '(' + ','.join(str(v) for v in field.flat_coordinates(c)) + ')'
        mono = '' if i == 0 else ('x' if i == 1 else f'x^{i}')
        if not mono:
            terms.append(coef)
        elif c == 1:
            terms.append(mono)
        else:
            terms.append(f"{coef}*{mono}")
    return '+'.join(terms)


# -- point counting -------------------------------------------------------------

def _evaluate(ctx: FieldCtx, coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = ctx.add(ctx.mul(acc, x), c)
    return acc


def count_points_naive(spec: CurveSpec, n: int, budget: Optional[int] = None) -> int:
    """1 + #{(x, y) in F_{Q^n}^2 : y^q - y = f(x)}, by exhaustive enumeration."""
    ctx = spec.extension(n)
    check_budget(ctx.size ** 2, budget, 'naive pair count')
    fibres = Counter(ctx.sub(ctx.pow(y, spec.q), y) for y in ctx.codes(budget))
    affine = sum(fibres.get(_evaluate(ctx, spec.coeffs, x), 0) for x in ctx.codes(budget))
    return 1 + affine


def trace_matrix(ctx: FieldCtx, g: int) -> np.ndarray:
    """Matrix of the F_p-linear relative trace to F_{p^g} in flat coordinates."""
    m = ctx.abs_degree
    rows = [ctx.flat_coordinates(ctx.relative_trace(ctx.p ** j, g)) for j in range(m)]
    return np.array(rows, dtype=np.int64).reshape(m, m)


def _trace_zero_count(ctx: FieldCtx, values: List[int], matrix: np.ndarray) -> int:
    m, p = ctx.abs_degree, ctx.p
    codes = np.array(values, dtype=np.int64)
    powers = p ** np.arange(m, dtype=np.int64)
    digits = (codes[:, None] // powers) % p
    traces = (digits @ matrix) % p
    return int(np.count_nonzero(~traces.any(axis=1)))


def _count_chunk(p: int, u: int, s: int, coeffs: Tuple[int, ...], n: int, start: int, stop: int,
                 block: int = TRACE_BLOCK) -> int:
    spec = CurveSpec(p, u, s, coeffs)
    ctx = spec.extension(n)
    matrix = trace_matrix(ctx, gcd(u, s * n))
    zeros = 0
    for lo in range(start, stop, block):
        values = [_evaluate(ctx, spec.coeffs, x) for x in range(lo, min(lo + block, stop))]
        zeros += _trace_zero_count(ctx, values, matrix)
    return zeros


def count_points_trace(spec: CurveSpec, n: int, budget: Optional[int] = None, workers: int = 1) -> int:
    """1 + p^g * #{x : Tr_{F_{Q^n}/F_{p^g}}(f(x)) = 0}, g = gcd(u, s*n)."""
    ctx = spec.extension(n)
    check_budget(ctx.size, budget)
    g = gcd(spec.u, spec.s * n)
    size = ctx.size
    workers = max(1, min(workers, size))
    if workers == 1:
        zeros = _count_chunk(spec.p, spec.u, spec.s, spec.coeffs, n, 0, size)
    else:
        step = -(-size // workers)
        bounds = [(lo, min(lo + step, size)) for lo in range(0, size, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_count_chunk, spec.p, spec.u, spec.s, spec.coeffs, n, lo, hi)
                       for lo, hi in bounds]
            zeros = sum(f.result() for f in futures)
    return 1 + spec.p ** g * zeros


@dataclass
class PointCountSeries:
    Q: int
    values: List[int]

    @property
    def signed_S(self) -> List[int]:
        return [N - self.Q ** n - 1 for n, N in enumerate(self.values, start=1)]


def point_count_series(spec: CurveSpec, n_max: int, budget: Optional[int] = None,
                       workers: int = 1, method: str = 'trace') -> PointCountSeries:
    """#X(F_{Q^n}) for n = 1..n_max; refuses up front when the largest field is over budget."""
    if n_max >= 1:
        if method == 'naive':
            check_budget(spec.Q ** (2 * n_max), budget, 'naive pair count')
        else:
            check_budget(spec.Q ** n_max, budget, 'point counting')
    counter = count_points_naive if method == 'naive' else count_points_trace
    values = []
    for n in range(1, n_max + 1):
        if method == 'naive':
            N = counter(spec, n, budget)
        else:
            N = counter(spec, n, budget, workers)
        logger.debug(f"#X(F_{spec.Q}^{n}) = {N} for {spec.to_string()}")
        values.append(N)
    return PointCountSeries(Q=spec.Q, values=values)


def weil_ok(S: int, g: int, Q: int, n: int) -> bool:
    return abs(S) <= 2 * g * isqrt(Q ** n) + 2 * g


def power_sums(coeffs: Sequence[int], n_max: int) -> List[int]:
    """S_1..S_{n_max} from L's coefficients via n c_n = sum_j S_j c_{n-j}."""
    deg = len(coeffs) - 1
    S: List[int] = []
    for n in range(1, n_max + 1):
        c_n = coeffs[n] if n <= deg else 0
        acc = n * c_n - sum(S[j - 1] * coeffs[n - j] for j in range(1, n) if n - j <= deg)
        S.append(acc)
    return S


def lpolynomial_from_counts(spec: CurveSpec, signed_S: Sequence[int]) -> LPolynomial:
    g = genus(spec)
    if len(signed_S) < g:
        raise ValueError(f"need S_1..S_{g}, got {len(signed_S)} values")
    c = [1]
    for n in range(1, g + 1):
        total = sum(signed_S[j - 1] * c[n - j] for j in range(1, n + 1))
        c_n, rem = divmod(total, n)
        if rem:
            raise CountingInconsistency(n, f"{total} is not divisible by {n}")
        c.append(c_n)
    Q = spec.Q
    for i in range(g - 1, -1, -1):
        c.append(Q ** (g - i) * c[i])
    return LPolynomial(coeffs=tuple(c), p=spec.p, s=spec.s, g=g)


def lpolynomial(spec: CurveSpec, verify_mode: bool = False, budget: Optional[int] = None,
                workers: int = 1) -> LPolynomial:
    """
    Recover L_X(T) from point counts over F_{Q^n}, n = 1..g.

    Args:
        verify_mode: also count n = g+1..2g and compare against the completed polynomial

    Returns:
        LPolynomial: c_0..c_2g
    """
    g = genus(spec)
    n_max = 2 * g if verify_mode else g
    if verify_mode and g == 0:
        n_max = 1
    series = point_count_series(spec, n_max, budget=budget, workers=workers)
    S = series.signed_S
    for n, value in enumerate(S, start=1):
        if not weil_ok(value, g, spec.Q, n):
            raise CountingInconsistency(n, f"|S_{n}| = {abs(value)} exceeds the Weil bound")
    L = lpolynomial_from_counts(spec, S[:g])
    if verify_mode:
        expected = power_sums(L.coeffs, n_max)
        for n in range(1, n_max + 1):
            if expected[n - 1] != S[n - 1]:
                raise CountingInconsistency(n, f"counted S_{n} = {S[n - 1]}, L predicts {expected[n - 1]}")
        logger.debug(f"Functional equation verified up to n={n_max}")
    logger.info(f"L(T) = {L} for {spec.to_string()}")
    return L
