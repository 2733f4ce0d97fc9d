import json
import random
from fractions import Fraction

import pytest

import src.curve as curve_module
from src.bounds import random_curve
from src.curve import (
    _count_chunk,
    CountingInconsistency,
    CurveParseError,
    CurveSpec,
    count_points_naive,
    count_points_trace,
    genus,
    load_curve,
    lpolynomial,
    lpolynomial_from_counts,
    parse_curve,
    point_count_series,
    power_sums,
    support_sigma,
)
from src.field import BudgetExceeded
from src.newton import is_supersingular, newton_polygon

SMALL_CURVES = [
    'p=2 u=1 s=1 f=x^3',
    'p=2 u=1 s=1 f=x^5+x^3+x',
    'p=3 u=1 s=1 f=2*x^4+x+1',
    'p=2 u=2 s=2 f=x^3',
    'p=2 u=1 s=2 f=(0,1)*x^3+x',
    'p=5 u=1 s=1 f=x^2',
]


class TestParsing:
    def test_defaults_and_canonical_form(self):
        spec = parse_curve('p=3 f=x^4-x')
        assert (spec.p, spec.u, spec.s) == (3, 1, 1)
        assert spec.coeffs == (0, 2, 0, 0, 1)
        assert spec.to_string() == 'p=3 u=1 s=1 f=x^4+2*x'

    def test_extension_coefficient(self):
        spec = parse_curve('p=2 u=1 s=2 f=(0,1)*x^3')
        assert spec.coeffs[3] == 2
        assert spec.to_string() == 'p=2 u=1 s=2 f=(0,1)*x^3'
        assert parse_curve(spec.to_string()) == spec

    def test_like_terms_combine(self):
        spec = parse_curve('p=3 u=1 s=1 f=x^2 + x^2 + x^2 + x')
        assert spec.d == 1

    def test_json_form(self):
        spec = parse_curve('p=2 u=1 s=2 f=(1,1)*x^5+x')
        assert load_curve(json.dumps(spec.to_json())) == spec

    @pytest.mark.parametrize('text', [
        'f=x^3',
        'p=4 f=x^3',
        'p=2 f=x^2',
        'p=2 f=x^3 +',
        'p=2 f=x^3 ? x',
        'p=2 p=3 f=x',
        'p=2 s=2 f=(1,1,1)*x^3',
        'p=2 f=0',
    ])
    def test_rejects(self, text):
        with pytest.raises(CurveParseError) as info:
            parse_curve(text)
        assert info.value.column >= 1

    def test_bad_json(self):
        with pytest.raises(CurveParseError):
            load_curve('{"p": 2}')

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CurveSpec(2, 0, 1, (0, 0, 0, 1))
        with pytest.raises(ValueError):
            CurveSpec(3, 1, 1, (0, 0, 0, 1))


def test_genus_and_sigma():
    spec = parse_curve('p=2 u=1 s=1 f=x^5+x^3')
    assert genus(spec) == 2
    assert support_sigma(spec) == ([3, 5], 2)
    assert genus(parse_curve('p=3 u=1 s=1 f=x^4')) == 3
    assert genus(parse_curve('p=2 u=2 s=2 f=x^3')) == 3


@pytest.mark.parametrize('text', SMALL_CURVES)
def test_trace_count_matches_naive(text):
    spec = parse_curve(text)
    for n in (1, 2):
        assert count_points_trace(spec, n) == count_points_naive(spec, n)


def test_parallel_count_matches_serial():
    spec = parse_curve('p=3 u=1 s=1 f=x^5+x')
    assert count_points_trace(spec, 3, workers=3) == count_points_trace(spec, 3)


def test_budget_is_enforced(elliptic):
    with pytest.raises(BudgetExceeded):
        count_points_trace(elliptic, 3, budget=4)
    with pytest.raises(BudgetExceeded):
        count_points_naive(elliptic, 2, budget=8)


def test_elliptic_curve(elliptic):
    series = point_count_series(elliptic, 2)
    assert series.values == [3, 9]
    assert series.signed_S == [0, 4]
    L = lpolynomial(elliptic, verify_mode=True)
    assert L.coeffs == (1, 0, 2)


def test_power_sums_invert_lpolynomial():
    assert power_sums((1, 0, 2), 4) == [0, 4, 0, -8]


@pytest.mark.parametrize('text', ['p=2 u=1 s=1 f=x^5+x^3', 'p=2 u=2 s=2 f=x^3'])
def test_supersingular_examples(text):
    L = lpolynomial(parse_curve(text), verify_mode=True)
    assert is_supersingular(L)
    assert set(newton_polygon(L).slopes) == {Fraction(1, 2)}


@pytest.mark.parametrize('text, slope', [
    ('p=2 u=1 s=1 f=x^7', Fraction(1, 3)),
    ('p=3 u=1 s=1 f=x^8', Fraction(1, 4)),
])
def test_first_slopes(text, slope):
    L = lpolynomial(parse_curve(text))
    assert newton_polygon(L).slopes[0] == slope


def test_functional_equation(septic):
    L = lpolynomial(septic, verify_mode=True)
    g = L.g
    for i in range(g + 1):
        assert L.coeffs[2 * g - i] == 2 ** (g - i) * L.coeffs[i]


def test_non_integral_counts_raise():
    spec = parse_curve('p=2 u=1 s=1 f=x^5')
    with pytest.raises(CountingInconsistency) as info:
        lpolynomial_from_counts(spec, [0, 1])
    assert info.value.n == 2


def test_genus_zero_curve():
    L = lpolynomial(parse_curve('p=3 u=1 s=1 f=x'), verify_mode=True)
    assert L.coeffs == (1,)
    assert newton_polygon(L).slopes == ()


@pytest.mark.parametrize('seed', range(8))
def test_trace_count_matches_naive_on_random_curves(seed):
    spec = random_curve(random.Random(seed), primes=(2, 3, 5), exponents=(1, 2), max_d=7)
    for n in (1, 2):
        assert count_points_trace(spec, n) == count_points_naive(spec, n)


@pytest.mark.parametrize('block', [1, 5, 64])
def test_blocked_count_is_independent_of_the_block_size(block):
    spec = parse_curve('p=3 u=1 s=1 f=x^5+x')
    assert (_count_chunk(3, 1, 1, spec.coeffs, 3, 0, 27, block=block)
            == _count_chunk(3, 1, 1, spec.coeffs, 3, 0, 27))
    assert 1 + 3 * _count_chunk(3, 1, 1, spec.coeffs, 3, 0, 27, block=block) == count_points_trace(spec, 3)


def test_lpolynomial_refuses_before_counting(monkeypatch):
    def never(*args, **kwargs):
        raise AssertionError("a field was enumerated")

    monkeypatch.setattr(curve_module, 'count_points_trace', never)
    monkeypatch.setattr(curve_module, 'count_points_naive', never)
    spec = parse_curve('p=5 u=1 s=1 f=x^8+x^3')
    with pytest.raises(BudgetExceeded) as info:
        lpolynomial(spec, budget=5 ** 6)
    assert info.value.required == 5 ** 14
    with pytest.raises(BudgetExceeded) as info:
        lpolynomial(spec, verify_mode=True, budget=5 ** 20)
    assert info.value.required == 5 ** 28
    with pytest.raises(BudgetExceeded):
        point_count_series(spec, 2, budget=5 ** 3, method='naive')
