# src/field.py
"""
Finite-field tower arithmetic in polynomial basis.

Elements are stored as canonical integer codes: an element of a degree-n
extension with coefficients c_0..c_{n-1} over its base has code
sum(code(c_i) * |base|**i), constant term least significant. Prime-field
codes are the residues themselves, so the base-p digits of any code are the
F_p coordinates of the element.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

from sympy import factorint

DEFAULT_PRIME_CAP = 1000
DEFAULT_ENUMERATION_BUDGET = 2 ** 26
# fields at most this large get add/mul tables once they serve as a base
TABLE_LIMIT = 256

logger = logging.getLogger(__name__)


class NotPrimeError(ValueError):
    def __init__(self, n: int, divisor: int):
        self.n = n
        self.divisor = divisor
        super().__init__(f"{n} is not prime, divisor {divisor}")

    def __reduce__(self):
        return type(self), (self.n, self.divisor)


class BudgetExceeded(ValueError):
    def __init__(self, required: int, budget: int, what: str = 'enumeration'):
        self.required = required
        self.budget = budget
        self.what = what
        super().__init__(f"{what} needs {required} elements, budget is {budget}")

    def __reduce__(self):
        return type(self), (self.required, self.budget, self.what)


class ContextMismatch(ValueError):
    pass


def smallest_divisor(n: int) -> Optional[int]:
    """Least prime divisor of a composite n, or None when n is prime."""
    if n < 2:
        return n
    factors = factorint(n)
    if len(factors) == 1 and next(iter(factors.values())) == 1:
        return None
    return min(factors)


def digit_sum(n: int, p: int) -> int:
    """s_p(n): sum of the base-p digits of n >= 0."""
    total = 0
    while n:
        n, r = divmod(n, p)
        total += r
    return total


def check_budget(required: int, budget: Optional[int], what: str = 'enumeration') -> None:
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    if required > budget:
        raise BudgetExceeded(required, budget, what)


class FieldCtx:
    """
    A finite field F_{p^m} built as a tower over F_p.

    Contexts are immutable once built; two constructions of the same tower
    share the same ctx_id and interoperate.
    """

    def __init__(self, p: int, base: Optional['FieldCtx'] = None, modulus: Optional[Sequence[int]] = None):
        self.p = p
        self.base = base
        if base is None:
            self.ext_degree = 1
            self.modulus = (0, 1)
            self.abs_degree = 1
            self.size = p
            self.ctx_id = (p,)
        else:
            if modulus is None or modulus[-1] != 1:
                raise ValueError("extension modulus must be monic")
            self.ext_degree = len(modulus) - 1
            self.modulus = tuple(modulus)
            self.abs_degree = base.abs_degree * self.ext_degree
            self.size = base.size ** self.ext_degree
            self.ctx_id = base.ctx_id + (self.modulus,)
            # t^n = -(m_0 + ... + m_{n-1} t^{n-1})
            self._reduction = tuple(base.neg(c) for c in self.modulus[:-1])
        self._add_table = None
        self._mul_table = None

    # -- identity -----------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and self.ctx_id == other.ctx_id

    def __hash__(self):
        return hash(self.ctx_id)

    def __repr__(self):
        return f"FieldCtx(F_{self.p}^{self.abs_degree}, ext_degree={self.ext_degree})"

    @property
    def is_prime(self) -> bool:
        return self.base is None

    @property
    def zero(self) -> 'FieldElement':
        return FieldElement(self, 0)

    @property
    def one(self) -> 'FieldElement':
        return FieldElement(self, 1)

    def element(self, coeffs) -> 'FieldElement':
        """Build an element from an int code or a coefficient vector (constant first)."""
        if isinstance(coeffs, int):
            return FieldElement(self, coeffs % self.size if self.is_prime else self._check_code(coeffs))
        return FieldElement(self, self.encode(coeffs))

    def _check_code(self, code: int) -> int:
        if not 0 <= code < self.size:
            raise ValueError(f"code {code} out of range for a field of size {self.size}")
        return code

    # -- codes --------------------------------------------------------------

    def digits(self, a: int) -> List[int]:
        """Coefficient codes of a over the base, constant term first."""
        if self.is_prime:
            return [a]
        bsize = self.base.size
        out = []
        for _ in range(self.ext_degree):
            a, r = divmod(a, bsize)
            out.append(r)
        return out

    def encode(self, coeffs: Sequence) -> int:
        """Inverse of digits(); entries may be base codes, FieldElements or nested vectors."""
        if self.is_prime:
            if len(coeffs) != 1:
                raise ValueError("prime-field elements have exactly one coefficient")
            c = coeffs[0]
            return (c.code if isinstance(c, FieldElement) else int(c)) % self.p
        if len(coeffs) != self.ext_degree:
            raise ValueError(f"expected {self.ext_degree} coefficients, got {len(coeffs)}")
        bsize = self.base.size
        code = 0
        for c in reversed(coeffs):
            if isinstance(c, FieldElement):
                if c.ctx != self.base:
                    raise ContextMismatch("coefficient does not belong to the base field")
                c = c.code
            elif not isinstance(c, int):
                c = self.base.encode(c)
            elif self.base.is_prime:
                c %= self.p
            else:
                self.base._check_code(c)
            code = code * bsize + c
        return code

    def flat_coordinates(self, a: int) -> List[int]:
        """The abs_degree F_p coordinates of a (base-p digits of its code)."""
        out = []
        for _ in range(self.abs_degree):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    # -- arithmetic on codes ------------------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.is_prime:
            s = a + b
            return s - self.p if s >= self.p else s
        if self.p == 2:
            return a ^ b
        if self._add_table is not None:
            return self._add_table[a * self.size + b]
        p = self.p
        out, scale = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            s = x + y
            out += (s - p if s >= p else s) * scale
            scale *= p
        return out

    def neg(self, a: int) -> int:
        if self.is_prime:
            return (-a) % self.p
        if self.p == 2:
            return a
        p = self.p
        out, scale = 0, 1
        while a:
            a, x = divmod(a, p)
            out += ((-x) % p) * scale
            scale *= p
        return out

    def sub(self, a: int, b: int) -> int:
        if self.is_prime:
            return (a - b) % self.p
        if self.p == 2:
            return a ^ b
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.is_prime:
            return a * b % self.p
        if self._mul_table is not None:
            return self._mul_table[a * self.size + b]
        if not a or not b:
            return 0
        return self._mul_slow(a, b)

    def _mul_slow(self, a: int, b: int) -> int:
        n = self.ext_degree
        da, db = self.digits(a), self.digits(b)
        prod = [0] * (2 * n - 1)
        red = self._reduction
        if self.base.is_prime:
            # integer convolution, one reduction mod p per coefficient at the end
            p = self.p
            for i, x in enumerate(da):
                if x:
                    for j, y in enumerate(db):
                        if y:
                            prod[i + j] += x * y
            for k in range(2 * n - 2, n - 1, -1):
                c = prod[k] % p
                if c:
                    for i in range(n):
                        if red[i]:
                            prod[k - n + i] += c * red[i]
            coeffs = [c % p for c in prod[:n]]
        else:
            badd, bmul = self.base.add, self.base.mul
            for i, x in enumerate(da):
                if x:
                    for j, y in enumerate(db):
                        if y:
                            prod[i + j] = badd(prod[i + j], bmul(x, y))
            for k in range(2 * n - 2, n - 1, -1):
                c = prod[k]
                if c:
                    for i in range(n):
                        if red[i]:
                            prod[k - n + i] = badd(prod[k - n + i], bmul(c, red[i]))
            coeffs = prod[:n]
        bsize = self.base.size
        code = 0
        for c in reversed(coeffs):
            code = code * bsize + c
        return code

    def pow(self, a: int, e: int) -> int:
        """Square-and-multiply; pow(a, 0) == 1 for every a, including 0."""
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.is_prime:
            return pow(a, e, self.p) if self.p > 1 else 0
        result = 1
        while e:
            if e & 1:
                result = self.mul(result, a)
            e >>= 1
            if e:
                a = self.mul(a, a)
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.is_prime:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.size - 2)

    def frobenius(self, a: int, k: int = 1) -> int:
        """a^(p^k), reducing the exponent mod p^m - 1 for nonzero a."""
        if a == 0:
            return 0
        order = self.size - 1
        e = pow(self.p, k, order) if order > 1 else 0
        if e == 0:
            e = order
        return self.pow(a, e)

    def relative_trace(self, a: int, g: int) -> int:
        """sum_{i < m/g} a^(p^(g i)), the trace from F_{p^m} down to F_{p^g}."""
        m = self.abs_degree
        if g <= 0 or m % g:
            raise ValueError(f"{g} does not divide the absolute degree {m}")
        total, x = 0, a
        for _ in range(m // g):
            total = self.add(total, x)
            x = self.frobenius(x, g)
        return total

    # -- tables -------------------------------------------------------------

    def ensure_tables(self) -> None:
        """Precompute add/mul tables when the field is small enough."""
        if self.is_prime or self._mul_table is not None or self.size > TABLE_LIMIT:
            return
        size = self.size
        mul_table = [0] * (size * size)
        add_table = None if self.p == 2 else [0] * (size * size)
        for a in range(size):
            row = a * size
            for b in range(size):
                mul_table[row + b] = self._mul_slow(a, b) if a and b else 0
                if add_table is not None:
                    add_table[row + b] = self.add(a, b)
        self._add_table = add_table
        self._mul_table = mul_table
        logger.debug(f"Built arithmetic tables for {self!r}")

    # -- enumeration --------------------------------------------------------

    def codes(self, budget: Optional[int] = None, start: int = 0, stop: Optional[int] = None) -> range:
        check_budget(self.size, budget)
        stop = self.size if stop is None else min(stop, self.size)
        return range(start, stop)

    def render(self, a: int) -> str:
        if self.is_prime:
            return str(a)
        if self.base.is_prime:
            return ','.join(str(c) for c in self.digits(a))
        return ','.join('[' + self.base.render(c) + ']' for c in self.digits(a))

    def __getstate__(self):
        state = self.__dict__.copy()
        # tables are rebuilt on demand in worker processes
        state['_add_table'] = None
        state['_mul_table'] = None
        return state


@dataclass(frozen=True)
class FieldElement:
    """An element of a FieldCtx, held as its canonical code."""
    ctx: FieldCtx
    code: int

    @property
    def ctx_id(self):
        return self.ctx.ctx_id

    @property
    def coeffs(self) -> Tuple[int, ...]:
        return tuple(self.ctx.digits(self.code))

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.ctx.ctx_id != self.ctx.ctx_id:
                raise ContextMismatch(f"{self.ctx!r} vs {other.ctx!r}")
            return other.code
        if isinstance(other, int):
            return _embed_int(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        return FieldElement(self.ctx, self.ctx.add(self.code, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.ctx, self.ctx.sub(self.code, self._other(other)))

    def __rsub__(self, other):
        return FieldElement(self.ctx, self.ctx.sub(self._other(other), self.code))

    def __neg__(self):
        return FieldElement(self.ctx, self.ctx.neg(self.code))

    def __mul__(self, other):
        return FieldElement(self.ctx, self.ctx.mul(self.code, self._other(other)))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return FieldElement(self.ctx, self.ctx.pow(self.code, e))

    def __truediv__(self, other):
        return self * FieldElement(self.ctx, self._other(other)).inverse()

    def inverse(self) -> 'FieldElement':
        return FieldElement(self.ctx, self.ctx.inv(self.code))

    def is_zero(self) -> bool:
        return self.code == 0

    def __bool__(self):
        return self.code != 0

    def __str__(self):
        return self.ctx.render(self.code)

    def __repr__(self):
        return f"FieldElement({self.ctx.render(self.code)} in {self.ctx!r})"


def _embed_int(ctx: FieldCtx, n: int) -> int:
    """Code of the integer n (i.e. n * 1) in ctx."""
    return n % ctx.p


# -- polynomials over a field, coefficient codes low degree first --------------

def _poly_trim(f: List[int]) -> List[int]:
    while f and f[-1] == 0:
        f.pop()
    return f


def poly_divmod(ctx: FieldCtx, f: Sequence[int], g: Sequence[int]) -> Tuple[List[int], List[int]]:
    g = _poly_trim(list(g))
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    r = _poly_trim(list(f))
    dg = len(g) - 1
    lead_inv = ctx.inv(g[-1])
    q = [0] * max(len(r) - dg, 0)
    while len(r) - 1 >= dg and r:
        shift = len(r) - 1 - dg
        c = ctx.mul(r[-1], lead_inv)
        q[shift] = c
        for i, gi in enumerate(g):
            if gi:
                r[shift + i] = ctx.sub(r[shift + i], ctx.mul(c, gi))
        _poly_trim(r)
    return q, r


def poly_mulmod(ctx: FieldCtx, f: Sequence[int], g: Sequence[int], modulus: Sequence[int]) -> List[int]:
    if not f or not g:
        return []
    prod = [0] * (len(f) + len(g) - 1)
    for i, x in enumerate(f):
        if x:
            for j, y in enumerate(g):
                if y:
                    prod[i + j] = ctx.add(prod[i + j], ctx.mul(x, y))
    return poly_divmod(ctx, prod, modulus)[1]


def poly_powmod(ctx: FieldCtx, f: Sequence[int], e: int, modulus: Sequence[int]) -> List[int]:
    result = [1]
    base = poly_divmod(ctx, f, modulus)[1]
    while e:
        if e & 1:
            result = poly_mulmod(ctx, result, base, modulus)
        e >>= 1
        if e:
            base = poly_mulmod(ctx, base, base, modulus)
    return result


def poly_gcd(ctx: FieldCtx, f: Sequence[int], g: Sequence[int]) -> List[int]:
    a, b = _poly_trim(list(f)), _poly_trim(list(g))
    while b:
        a, b = b, poly_divmod(ctx, a, b)[1]
    if a:
        lead_inv = ctx.inv(a[-1])
        a = [ctx.mul(c, lead_inv) for c in a]
    return a


def is_irreducible(ctx: FieldCtx, f: Sequence[int]) -> bool:
    """
    Distinct-degree test: a polynomial of degree n over F_B is irreducible iff
    gcd(f, t^(B^k) - t) = 1 for k = 1..n//2.
    """
    f = _poly_trim(list(f))
    n = len(f) - 1
    if n <= 1:
        return n == 1
    if f[0] == 0:
        return False
    t = [0, 1]
    h = t
    for _ in range(n // 2):
        h = poly_powmod(ctx, h, ctx.size, f)
        diff = list(h) + [0] * max(0, 2 - len(h))
        diff[1] = ctx.sub(diff[1], 1)
        if len(poly_gcd(ctx, f, diff)) != 1:
            return False
    return True


def canonical_modulus(base: FieldCtx, n: int) -> Tuple[int, ...]:
    """Least monic irreducible of degree n, ordering candidates by their code."""
    if n < 1:
        raise ValueError("extension degree must be positive")
    for code in range(base.size ** n):
        lower = []
        c = code
        for _ in range(n):
            c, r = divmod(c, base.size)
            lower.append(r)
        candidate = lower + [1]
        if is_irreducible(base, candidate):
            return tuple(candidate)
    raise ArithmeticError(f"no irreducible polynomial of degree {n} found")  # unreachable


# -- construction -------------------------------------------------------------

@lru_cache(maxsize=None)
def build_prime_field(p: int, prime_cap: int = DEFAULT_PRIME_CAP) -> FieldCtx:
    if p < 2:
        raise NotPrimeError(p, p)
    if p > prime_cap:
        raise ValueError(f"prime {p} exceeds the configured cap {prime_cap}")
    divisor = smallest_divisor(p)
    if divisor is not None:
        raise NotPrimeError(p, divisor)
    logger.debug(f"Built prime field F_{p}")
    return FieldCtx(p)


@lru_cache(maxsize=None)
def extend(base: FieldCtx, n: int) -> FieldCtx:
    """Degree-n extension of base by its canonical least irreducible modulus."""
    if n < 1:
        raise ValueError("extension degree must be positive")
    base.ensure_tables()
    modulus = canonical_modulus(base, n)
    ctx = FieldCtx(base.p, base, modulus)
    logger.debug(f"Extended {base!r} by degree {n}, modulus {modulus}")
    return ctx


def field_of_order(p: int, s: int) -> FieldCtx:
    """F_{p^s} as a single extension of F_p (F_p itself when s = 1)."""
    prime = build_prime_field(p)
    return prime if s == 1 else extend(prime, s)


def parse_field(description: str) -> Tuple[int, int]:
    """
    Parse a field description "q" or "p^s" into (p, s).

    Examples: "2" -> (2, 1), "4" -> (2, 2), "3^2" -> (3, 2).
    """
    text = description.strip()
    try:
        if '^' in text:
            p_text, s_text = text.split('^', 1)
            p, s = int(p_text), int(s_text)
            build_prime_field(p)
        else:
            q = int(text)
            factors = factorint(q)
            if len(factors) != 1:
                raise ValueError(f"{q} is not a prime power")
            (p, s), = factors.items()
    except ValueError as err:
        raise ValueError(f"invalid field description {description!r}: {err}") from err
    if s < 1:
        raise ValueError(f"invalid field description {description!r}")
    return p, s


def enumerate_field(ctx: FieldCtx, budget: Optional[int] = None) -> Iterator[FieldElement]:
    """All elements of ctx in canonical code order."""
    for code in ctx.codes(budget):
        yield FieldElement(ctx, code)


def frobenius_iter(a: FieldElement, k: int) -> FieldElement:
    """a^(p^k)."""
    return FieldElement(a.ctx, a.ctx.frobenius(a.code, k))


def trace_vanishes(c: FieldElement, g: int) -> bool:
    """Whether the sum of the conjugates c^(p^(g i)), i < m/g, is zero."""
    m = c.ctx.abs_degree
    if g <= 0 or m % g:
        raise ValueError(f"{g} does not divide the absolute degree {m}")
    total = c.ctx.zero
    for i in range(m // g):
        total = total + frobenius_iter(c, g * i)
    return total.is_zero()
