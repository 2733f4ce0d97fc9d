# src/newton.py
"""
p-adic Newton polygons of L-polynomials over exact rationals.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import multiplicity

logger = logging.getLogger(__name__)


class NoSlopes(ValueError):
    pass


def ord_p(n: int, p: int) -> Optional[int]:
    """p-adic valuation of an integer; None stands for +infinity (n == 0)."""
    if n == 0:
        return None
    return int(multiplicity(p, abs(n)))


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class LPolynomial:
    coeffs: Tuple[int, ...]
    p: int
    s: int
    g: int

    def __post_init__(self):
        if len(self.coeffs) != 2 * self.g + 1:
            raise ValueError(f"L-polynomial of genus {self.g} needs {2 * self.g + 1} coefficients")
        if self.coeffs[0] != 1:
            raise ValueError("L-polynomial must have constant term 1")
        if self.coeffs[-1] != self.p ** (self.s * self.g):
            raise ValueError(f"leading coefficient must be {self.p}^{self.s * self.g}")

    @property
    def Q(self) -> int:
        return self.p ** self.s

    def valuations(self) -> List[Optional[int]]:
        return [ord_p(c, self.p) for c in self.coeffs]

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
                continue
            mono = 'T' if i == 1 else f'T^{i}'
            sign = '-' if c < 0 else '+'
            mag = abs(c)
            terms.append(f"{sign} {mono}" if mag == 1 else f"{sign} {mag}*{mono}")
        return ' '.join(terms)


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: Tuple[Tuple[int, Fraction], ...]
    slopes: Tuple[Fraction, ...]

    @property
    def first_slope(self) -> Fraction:
        return first_slope(self)

    def slope_groups(self) -> List[Tuple[Fraction, int]]:
        """Slopes with multiplicity, in increasing order."""
        groups: Dict[Fraction, int] = {}
        for slope in self.slopes:
            groups[slope] = groups.get(slope, 0) + 1
        return sorted(groups.items())

    def is_hodge_symmetric(self) -> bool:
        """Slope l occurs exactly as often as 1 - l."""
        groups = dict(self.slope_groups())
        return all(groups.get(1 - slope, 0) == mult for slope, mult in groups.items())

    def to_dict(self, coeffs: Sequence[int], supersingular: bool) -> dict:
        return {
            'coeffs': [str(c) for c in coeffs],
            'vertices': [[i, fraction_str(y)] for i, y in self.vertices],
            'slopes': [fraction_str(x) for x in self.slopes],
            'first_slope': fraction_str(self.first_slope) if self.slopes else None,
            'supersingular': supersingular,
        }


def _turns_up(o, a, b) -> bool:
    """True when a lies strictly below the chord from o to b."""
    # cross-multiplied slope comparison: (a - o) slope < (b - o) slope
    return (a[1] - o[1]) * (b[0] - o[0]) < (b[1] - o[1]) * (a[0] - o[0])


def newton_polygon(L: LPolynomial) -> NewtonPolygon:
    """Lower convex hull of (i, ord_p(c_i)/s) over the nonzero coefficients."""
    points = [(i, Fraction(v, L.s)) for i, v in enumerate(L.valuations()) if v is not None]
    hull: List[Tuple[int, Fraction]] = []
    for point in points:
        # pop while the last vertex is on or above the chord to the new point
        while len(hull) >= 2 and not _turns_up(hull[-2], hull[-1], point):
            hull.pop()
        hull.append(point)

    slopes: List[Fraction] = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        slope = (y1 - y0) / (x1 - x0)
        slopes.extend([slope] * (x1 - x0))
    return NewtonPolygon(vertices=tuple(hull), slopes=tuple(slopes))


def first_slope(np: NewtonPolygon) -> Fraction:
    if not np.slopes:
        raise NoSlopes("a genus-0 curve has no Newton slopes")
    return np.slopes[0]


def is_supersingular(L: LPolynomial) -> bool:
    """ord_p(c_i)/s >= i/2 for every i >= 1; vacuous when g = 0."""
    return all(v is None or 2 * v >= L.s * i for i, v in enumerate(L.valuations()) if i >= 1)


def check_coeff_divisibility(L: LPolynomial, sigma: int) -> bool:
    """p^ceil(s*i/sigma) divides c_i for every i >= 1."""
    if sigma < 1:
        raise ValueError("sigma must be positive")
    return all(v is None or v >= ceil(Fraction(L.s * i, sigma))
               for i, v in enumerate(L.valuations()) if i >= 1)


def p_rank(L: LPolynomial) -> int:
    """Degree of L reduced mod p, i.e. the number of slope-0 segments."""
    rank = 0
    for i, c in enumerate(L.coeffs):
        if c % L.p:
            rank = i
    return rank


@dataclass
class DivisibilityEntry:
    n: int
    S: int
    ord: Optional[int]
    required: int

    @property
    def ok(self) -> bool:
        return self.ord is None or self.ord >= self.required


@dataclass
class DivisibilityReport:
    bound: int
    entries: List[DivisibilityEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def first_failure(self) -> Optional[DivisibilityEntry]:
        return next((e for e in self.entries if not e.ok), None)

    def to_rows(self) -> List[dict]:
        return [
            {'n': e.n, 'S_n': str(e.S), 'ord_p': 'inf' if e.ord is None else e.ord,
             'required': e.required, 'ok': e.ok}
            for e in self.entries
        ]


def sn_divisibility(signed_S: Sequence[int], p: int, s: int, bound: int) -> DivisibilityReport:
    """p^ceil(s*n/bound) | S_n for each supplied S_1, S_2, ..."""
    report = DivisibilityReport(bound=bound)
    for n, S in enumerate(signed_S, start=1):
        report.entries.append(DivisibilityEntry(
            n=n, S=S, ord=ord_p(S, p), required=ceil(Fraction(s * n, bound))))
    return report


def check_Sn_divisibility(spec, sigma: int, n_max: int, budget: Optional[int] = None,
                          workers: int = 1) -> DivisibilityReport:
    """Count points over F_{Q^n}, n <= n_max, and test p^ceil(sn/sigma) | S_n."""
    from src.curve import point_count_series

    if sigma < 1:
        raise ValueError("sigma must be positive")
    series = point_count_series(spec, n_max, budget=budget, workers=workers)
    report = sn_divisibility(series.signed_S, spec.p, spec.s, sigma)
    if not report.passed:
        bad = report.first_failure
        logger.warning(f"S_{bad.n} = {bad.S} has ord {bad.ord} < {bad.required}")
    return report
