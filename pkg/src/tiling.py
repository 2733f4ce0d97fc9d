# src/tiling.py
"""
Partitions in K_r, p-adic boxes, digit weights and r-tiling sequences.

A tiling of r by multipliers S is a multiset of triples [a, b, l] with
l in S, 1 <= a <= p-1 and sum(a * l * p^b) = r, at most one triple per
(b, l). Its weight is sum(a). Sorting the triples by b ascending and l
descending gives the canonical sequence.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sympy.utilities.iterables import partitions

from src.field import digit_sum

logger = logging.getLogger(__name__)

INF = math.inf
MAX_R = 500
MAX_D = 12
# kbox minimizers are recomputed from K_r itself up to this r
DIRECT_R_MAX = 30


class GuardrailExceeded(ValueError):
    pass


def _guard(r: int, d: int, max_r: int = MAX_R, max_d: int = MAX_D) -> None:
    if r > max_r or d > max_d:
        raise GuardrailExceeded(f"r={r}, d={d} exceeds the guardrail r <= {max_r}, d <= {max_d}")


# -- partitions and boxes -------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    k: Tuple[int, ...]

    def __post_init__(self):
        k = tuple(self.k)
        object.__setattr__(self, 'k', k)
        if not k:
            raise ValueError("a partition vector needs d >= 1 entries")
        if any(x < 0 for x in k) or any(a < b for a, b in zip(k, k[1:])):
            raise ValueError(f"{k} is not a nonincreasing vector of nonnegative integers")

    @property
    def r(self) -> int:
        return sum(self.k)

    @property
    def d(self) -> int:
        return len(self.k)

    def differences(self) -> List[int]:
        """m_l = k_l - k_{l+1}, with k_{d+1} = 0."""
        return [a - b for a, b in zip(self.k, self.k[1:] + (0,))]


def iter_partitions(r: int, d: int) -> Iterator[Partition]:
    """Partitions of r into at most d parts, lexicographically decreasing."""
    if r == 0:
        yield Partition((0,) * d)
        return
    # sympy yields in reverse lexicographic order already; the dict is reused between steps
    for parts in partitions(r, m=d):
        vector = []
        for part in sorted(parts, reverse=True):
            vector.extend([part] * parts[part])
        vector.extend([0] * (d - len(vector)))
        yield Partition(tuple(vector))


def enumerate_partitions(r: int, d: int, max_r: int = MAX_R, max_d: int = MAX_D) -> List[Partition]:
    _guard(r, d, max_r, max_d)
    return sorted(iter_partitions(r, d), key=lambda part: part.k, reverse=True)


def count_partitions(r: int, d: int) -> int:
    """|K_r| for vectors of length d (partitions of r into parts of size <= d)."""
    ways = [1] + [0] * r
    for part in range(1, d + 1):
        for v in range(part, r + 1):
            ways[v] += ways[v - part]
    return ways[r]


def weight(k: Partition, p: int) -> int:
    """s_p(k) = sum of s_p(k_l - k_{l+1}) over l = 1..d."""
    return sum(digit_sum(m, p) for m in k.differences())


@dataclass
class PAdicBox:
    entries: np.ndarray
    p: int

    def rows(self) -> List[int]:
        """sum_v k_{l,v} p^v for every row l."""
        powers = [self.p ** v for v in range(self.entries.shape[1])]
        return [int(sum(int(x) * w for x, w in zip(row, powers))) for row in self.entries]

    def column_sums(self) -> List[int]:
        return [int(x) for x in self.entries.sum(axis=0)]

    def max_entry(self) -> int:
        return int(self.entries.max()) if self.entries.size else 0


def _digits(n: int, p: int, width: int) -> List[int]:
    out = []
    for _ in range(width):
        n, r = divmod(n, p)
        out.append(r)
    return out


def padic_box(k: Partition, p: int) -> PAdicBox:
    """k_{d,v} = digits of k_d; k_{l,v} = k_{l+1,v} + digit_v(k_l - k_{l+1})."""
    width = 1
    while p ** width <= k.k[0]:
        width += 1
    entries = np.zeros((k.d, width), dtype=np.int64)
    below = np.zeros(width, dtype=np.int64)
    for l in range(k.d - 1, -1, -1):
        below = below + np.array(_digits(k.differences()[l], p, width), dtype=np.int64)
        entries[l] = below
    return PAdicBox(entries=entries, p=p)


# -- tilings ---------------------------------------------------------------------

Triple = Tuple[int, int, int]


@dataclass(frozen=True)
class TilingSequence:
    triples: Tuple[Triple, ...]
    r: int
    S: FrozenSet[int]
    p: int

    @property
    def weight(self) -> int:
        return sum(a for a, _, _ in self.triples)

    def is_valid(self) -> bool:
        total = 0
        for idx, (a, b, l) in enumerate(self.triples):
            if l not in self.S or not 1 <= a <= self.p - 1 or b < 0:
                return False
            if idx:
                _, b_prev, l_prev = self.triples[idx - 1]
                if b < b_prev or (b == b_prev and l >= l_prev):
                    return False
            total += a * l * self.p ** b
        return total == self.r

    def to_partition(self, d: int) -> Partition:
        """k_l = sum over triples with l_i >= l of a_i p^b_i."""
        m = [0] * (d + 1)
        for a, b, l in self.triples:
            m[l] += a * self.p ** b
        k = []
        acc = 0
        for l in range(d, 0, -1):
            acc += m[l]
            k.append(acc)
        return Partition(tuple(reversed(k)))

    def box(self, d: int) -> np.ndarray:
        """k_{l,v} = sum of a_i over triples with b_i = v and l_i >= l."""
        width = max([b for _, b, _ in self.triples] + [0]) + 1
        entries = np.zeros((d, width), dtype=np.int64)
        for a, b, l in self.triples:
            entries[:l, b] += a
        return entries

    def to_list(self) -> List[List[int]]:
        return [list(t) for t in self.triples]


def _items(S: Iterable[int], p: int, r_max: int) -> List[Tuple[int, int, int]]:
    """(value, b, l) for l*p^b <= r_max, largest value first."""
    items = []
    for l in sorted(set(S)):
        if l < 1:
            raise ValueError("multipliers must be positive")
        b, value = 0, l
        while value <= r_max:
            items.append((value, b, l))
            b += 1
            value *= p
    items.sort(key=lambda item: (-item[0], item[1], -item[2]))
    return items


class TilingSolver:
    """
    Bounded knapsack over tiles l*p^b with multiplicity <= p-1.

    best[j][v] is the least weight reaching v exactly with items j..end, INF when
    unreachable; one table answers every r <= r_max.
    """

    def __init__(self, S: Iterable[int], p: int, r_max: int):
        self.S = frozenset(S)
        if not self.S:
            raise ValueError("S must be nonempty")
        self.p = p
        self.r_max = r_max
        self.items = _items(self.S, p, r_max)
        self.logger = logging.getLogger(__name__)
        self.best = self._tabulate()

    def _tabulate(self) -> List[List[float]]:
        n, p, R = len(self.items), self.p, self.r_max
        best = [[INF] * (R + 1) for _ in range(n + 1)]
        best[n][0] = 0
        for j in range(n - 1, -1, -1):
            value = self.items[j][0]
            nxt, row = best[j + 1], best[j]
            for v in range(R + 1):
                cost = nxt[v]
                for a in range(1, p):
                    rest = v - a * value
                    if rest < 0:
                        break
                    if nxt[rest] + a < cost:
                        cost = nxt[rest] + a
                row[v] = cost
        return best

    def minimum(self, r: int):
        if r > self.r_max:
            raise ValueError(f"r={r} beyond solver range {self.r_max}")
        value = self.best[0][r]
        return value if value == INF else int(value)

    def shortest(self, r: int) -> List[TilingSequence]:
        """All tilings of minimal weight, canonically ordered."""
        target = self.minimum(r)
        if target == INF:
            return []
        found: List[Tuple[Triple, ...]] = []
        n, p = len(self.items), self.p

        def walk(j: int, remaining: int, cost_left: int, chosen: List[Triple]):
            if remaining == 0 and cost_left == 0:
                found.append(tuple(sorted(chosen, key=lambda t: (t[1], -t[2]))))
                return
            if j == n:
                return
            value, b, l = self.items[j]
            for a in range(0, p):
                rest = remaining - a * value
                if rest < 0:
                    break
                if a + self.best[j + 1][rest] == cost_left:
                    if a:
                        chosen.append((a, b, l))
                    walk(j + 1, rest, cost_left - a, chosen)
                    if a:
                        chosen.pop()

        walk(0, r, target, [])
        found.sort()
        return [TilingSequence(t, r, self.S, p) for t in found]


@lru_cache(maxsize=64)
def _solver(S: FrozenSet[int], p: int, r_max: int) -> TilingSolver:
    return TilingSolver(S, p, r_max)


def tilde_s(r: int, S: Iterable[int], p: int):
    """Least weight of an r-tiling by S, or math.inf when none exists."""
    if r < 1:
        raise ValueError("r must be positive")
    return _solver(frozenset(S), p, r).minimum(r)


def shortest_tilings(r: int, S: Iterable[int], p: int, max_r: int = MAX_R) -> List[TilingSequence]:
    if r > max_r:
        raise GuardrailExceeded(f"r={r} exceeds the guardrail r <= {max_r}")
    return _solver(frozenset(S), p, r).shortest(r)


def enumerate_tilings(r: int, S: Iterable[int], p: int) -> Iterator[TilingSequence]:
    """Every r-tiling sequence by S, found by direct search."""
    S = frozenset(S)
    items = _items(S, p, r)

    def walk(j: int, remaining: int, chosen: List[Triple]):
        if remaining == 0:
            yield TilingSequence(tuple(sorted(chosen, key=lambda t: (t[1], -t[2]))), r, S, p)
            return
        if j == len(items):
            return
        value, b, l = items[j]
        for a in range(min(p - 1, remaining // value), -1, -1):
            if a:
                chosen.append((a, b, l))
            yield from walk(j + 1, remaining - a * value, chosen)
            if a:
                chosen.pop()

    yield from walk(0, r, [])


def exhaustive_minimum(r: int, S: Iterable[int], p: int):
    """Least tiling weight by branch-and-bound over all sequences."""
    items = _items(S, p, r)
    capacity = [0] * (len(items) + 1)
    for j in range(len(items) - 1, -1, -1):
        capacity[j] = capacity[j + 1] + (p - 1) * items[j][0]
    best = INF

    def walk(j: int, remaining: int, cost: int):
        nonlocal best
        if remaining == 0:
            best = min(best, cost)
            return
        if j == len(items) or remaining > capacity[j] or cost + 1 >= best:
            return
        value = items[j][0]
        for a in range(min(p - 1, remaining // value), -1, -1):
            walk(j + 1, remaining - a * value, cost + a)

    walk(0, r, 0)
    return best


# -- bijection between shortest tilings and minimal constrained partitions -------

@dataclass
class BijectionResult:
    ok: bool
    tilde_s: float
    tilings: int
    minimal_partitions: int
    reason: str = ''
    witness: Optional[object] = None


def constrained(k: Partition, S: FrozenSet[int]) -> bool:
    """k_l = k_{l+1} for every l not in S."""
    return all(m == 0 for l, m in enumerate(k.differences(), start=1) if l not in S)


def bijection_check(r: int, S: Iterable[int], p: int, d: int,
                    max_r: int = MAX_R, max_d: int = MAX_D) -> BijectionResult:
    S = frozenset(S)
    if max(S) > d:
        raise ValueError(f"max(S)={max(S)} exceeds d={d}")
    tilings = shortest_tilings(r, S, p, max_r=max_r)
    target = tilde_s(r, S, p)
    minimal = []
    for k in enumerate_partitions(r, d, max_r, max_d):
        if not constrained(k, S):
            continue
        w = weight(k, p)
        if w < target:
            return BijectionResult(False, target, len(tilings), 0,
                                   f"partition has weight {w} below the tiling minimum", k)
        if w == target:
            minimal.append(k)

    images = {}
    for tiling in tilings:
        k = tiling.to_partition(d)
        if k in images:
            return BijectionResult(False, target, len(tilings), len(minimal),
                                   "two tilings map to the same partition", tiling)
        if weight(k, p) != tiling.weight:
            return BijectionResult(False, target, len(tilings), len(minimal),
                                   "tiling weight differs from partition weight", tiling)
        if not np.array_equal(_pad(tiling.box(d)), _pad(padic_box(k, p).entries)):
            return BijectionResult(False, target, len(tilings), len(minimal),
                                   "tiling box differs from the p-adic box of its partition", tiling)
        images[k] = tiling
    if set(images) != set(minimal):
        missing = next(iter(set(minimal) - set(images)), None) or next(iter(set(images) - set(minimal)))
        return BijectionResult(False, target, len(tilings), len(minimal),
                               "image of the shortest tilings is not the minimal set", missing)
    return BijectionResult(True, target, len(tilings), len(minimal))


def _pad(entries: np.ndarray, width: int = 64) -> np.ndarray:
    out = np.zeros((entries.shape[0], width), dtype=np.int64)
    out[:, :entries.shape[1]] = entries
    return out


# -- the digit-sum bound for d = j(p^h - 1) ---------------------------------------

@dataclass
class KboxResult:
    r: int
    j: int
    h: int
    p: int
    bound: int
    minimum: float
    status: str
    reason: str = ''
    witness: Optional[Partition] = None
    cross_checked: bool = False


def column_estimate_holds(d: int, p: int, h: int) -> bool:
    """s_p(n) <= h(p-1) for every n <= d; the column bound in the proof needs this."""
    return all(digit_sum(n, p) <= h * (p - 1) for n in range(1, d + 1))


def minimal_partitions(r: int, d: int, p: int, solver: Optional[TilingSolver] = None) -> List[Partition]:
    """Least-weight vectors in K_r, through tilings by {1..d}."""
    solver = solver or _solver(frozenset(range(1, d + 1)), p, r)
    return [t.to_partition(d) for t in solver.shortest(r)]


def direct_minimal_partitions(r: int, d: int, p: int, max_r: int = MAX_R,
                              max_d: int = MAX_D) -> Tuple[float, List[Partition]]:
    """Least weight over K_r and every vector attaining it, by enumerating K_r."""
    least, found = INF, []
    for k in enumerate_partitions(r, d, max_r, max_d):
        w = weight(k, p)
        if w < least:
            least, found = w, [k]
        elif w == least:
            found.append(k)
    return least, found


def kbox_check(r: int, j: int, h: int, p: int, solver: Optional[TilingSolver] = None,
               max_r: int = MAX_R, max_d: int = MAX_D, direct_r_max: int = DIRECT_R_MAX) -> KboxResult:
    """
    s_p(k) >= ceil(s_p(r) / (h(p-1))) over K_r, d = j(p^h - 1), plus the structure of minimizers.

    Minimizers come from tilings by {1..d}; for r <= direct_r_max they are also
    recomputed by enumerating K_r and any disagreement is a failure.
    """
    d = j * (p ** h - 1)
    _guard(r, d, max_r, max_d)
    if r < 1:
        raise ValueError("r must be positive")
    bound = -(-digit_sum(r, p) // (h * (p - 1)))
    solver = solver or _solver(frozenset(range(1, d + 1)), p, r)
    least = solver.minimum(r)
    minimizers = minimal_partitions(r, d, p, solver)
    checked = r <= direct_r_max
    if checked:
        direct_least, direct = direct_minimal_partitions(r, d, p, max_r, max_d)
        if direct_least != least or set(direct) != set(minimizers):
            witness = next(iter(set(direct) ^ set(minimizers)), None)
            return KboxResult(r, j, h, p, bound, least, 'FAIL',
                              f"tilings give weight {least}, enumerating K_r gives {direct_least}",
                              witness, cross_checked=True)
    result = _kbox_verdict(r, j, h, p, bound, least, minimizers)
    result.cross_checked = checked
    return result


def _kbox_verdict(r: int, j: int, h: int, p: int, bound: int, least: float,
                  minimizers: List[Partition]) -> KboxResult:
    d = j * (p ** h - 1)
    hp = h * (p - 1)
    # a flagged result marks the d where the column estimate is known not to apply
    bad = 'FAIL' if column_estimate_holds(d, p, h) else 'FLAG'
    if least < bound:
        return KboxResult(r, j, h, p, bound, least, bad,
                          f"weight {least} below the bound {bound}", minimizers[0])
    if least > bound:
        return KboxResult(r, j, h, p, bound, least, 'PASS')

    cap = 2 if p * p - 1 <= 2 * d < 2 * (p * p - 1) else 1
    r_is_block = False
    block = j * (p ** h - 1)
    while block <= r:
        r_is_block = r_is_block or block == r
        block = block * p ** h + j * (p ** h - 1)
    exact = least * hp == digit_sum(r, p)
    for k in minimizers:
        box = padic_box(k, p)
        if box.max_entry() > cap:
            return KboxResult(r, j, h, p, bound, least, bad, f"box entry above {cap}", k)
        if r_is_block and box.max_entry() > 1:
            return KboxResult(r, j, h, p, bound, least, bad, "box of a block value is not 0/1", k)
        if exact:
            top = box.entries[0]
            for v, column in enumerate(box.column_sums()):
                if digit_sum(column, p) != int(top[v]) * hp:
                    return KboxResult(r, j, h, p, bound, least, bad,
                                      f"column {v} digit sum differs from k_1,v * h(p-1)", k)
    return KboxResult(r, j, h, p, bound, least, 'PASS')


# -- sweeps ------------------------------------------------------------------------

@dataclass
class TilingSweepReport:
    instances: int = 0
    bijections: int = 0
    violations: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def tiling_sweep(r_max: int, sets: Iterable[Sequence[int]], primes: Sequence[int] = (2, 3, 5),
                 bijection_r_max: int = 12) -> TilingSweepReport:
    """
    For each (p, S): knapsack optimum against exhaustive search for r <= r_max,
    superadditivity, the sigma chain, and the bijection for small r with d = max(S).
    """
    report = TilingSweepReport()
    for p in primes:
        for S in sets:
            S = frozenset(S)
            solver = _solver(S, p, r_max)
            sigma = max(digit_sum(l, p) for l in S)
            table = [None] + [solver.minimum(r) for r in range(1, r_max + 1)]
            for r in range(1, r_max + 1):
                report.instances += 1
                dp = table[r]
                ex = exhaustive_minimum(r, S, p)
                if dp != ex:
                    report.violations.append({'check': 'dp_vs_exhaustive', 'p': p, 'S': sorted(S),
                                              'r': r, 'dp': str(dp), 'exhaustive': str(ex)})
                if dp != INF and sigma * dp < digit_sum(r, p):
                    report.violations.append({'check': 'sigma_chain', 'p': p, 'S': sorted(S), 'r': r})
                for r1 in range(1, r // 2 + 1):
                    a, b = table[r1], table[r - r1]
                    if a != INF and b != INF and dp > a + b:
                        report.violations.append({'check': 'superadditivity', 'p': p, 'S': sorted(S),
                                                  'r': r, 'split': r1})
                        break
                if r <= bijection_r_max and max(S) <= MAX_D:
                    result = bijection_check(r, S, p, max(S))
                    report.bijections += 1
                    if not result.ok:
                        report.violations.append({'check': 'bijection', 'p': p, 'S': sorted(S), 'r': r,
                                                  'reason': result.reason})
    logger.info(f"Tiling sweep: {report.instances} instances, {report.bijections} bijections, "
                f"{len(report.violations)} violations")
    return report


def kbox_families(max_d: int = MAX_D) -> List[Tuple[int, int, int]]:
    """All (p, h, j) with d = j(p^h - 1) <= max_d."""
    out = []
    for p in (2, 3, 5, 7, 11, 13):
        h = 1
        while p ** h - 1 <= max_d:
            for j in range(1, p):
                if j * (p ** h - 1) <= max_d:
                    out.append((p, h, j))
            h += 1
    return out


def kbox_sweep(r_max: int, max_d: int = MAX_D, direct_r_max: int = DIRECT_R_MAX) -> List[KboxResult]:
    results = []
    for p, h, j in kbox_families(max_d):
        d = j * (p ** h - 1)
        solver = _solver(frozenset(range(1, d + 1)), p, r_max)
        for r in range(1, r_max + 1):
            results.append(kbox_check(r, j, h, p, solver=solver, direct_r_max=direct_r_max))
    flagged = sum(1 for res in results if res.status == 'FLAG')
    failed = sum(1 for res in results if res.status == 'FAIL')
    logger.info(f"kbox sweep: {len(results)} checks, {failed} failures, {flagged} flagged")
    return results
