import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import phi_series
from piqos.calculus import compose_path, extract_decision_vector, on_time_probability, std_normal_cdf
from piqos.errors import MissingBinding, SchemaViolation
from piqos.model import LOGISTICS_SCHEMA, Normal, Scalar

ZERO = (Scalar(0), Scalar(0), Normal(0, 0))
C24 = (Scalar(80), Scalar(60), Normal(35, 12))
C46 = (Scalar(70), Scalar(50), Normal(25, 15))


def test_compose_costs_path():
    cv = compose_path([C24, C46], LOGISTICS_SCHEMA)
    assert cv.values == (Scalar(150), Scalar(110), Normal(60, 27))


def test_single_segment_identity():
    assert compose_path([C24], LOGISTICS_SCHEMA).values == C24


def test_zero_offering_is_identity():
    assert compose_path([ZERO, C24, C46], LOGISTICS_SCHEMA) == compose_path([C24, C46], LOGISTICS_SCHEMA)


def test_compose_errors():
    with pytest.raises(SchemaViolation):
        compose_path([], LOGISTICS_SCHEMA)
    with pytest.raises(SchemaViolation):
        compose_path([(Scalar(1), Scalar(1), Scalar(1))], LOGISTICS_SCHEMA)


def test_phi_known_points():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(-2.0) == pytest.approx(0.02275, abs=5e-6)
    assert std_normal_cdf((60 - 55) / math.sqrt(22)) == pytest.approx(0.8568, abs=5e-5)
    assert std_normal_cdf(1.0660) == pytest.approx(0.8568, abs=5e-5)


def test_phi_saturates():
    assert std_normal_cdf(-40) == 0.0
    assert std_normal_cdf(40) == 1.0


@pytest.mark.parametrize("z", [i / 10 for i in range(-60, 61, 7)])
def test_phi_against_series(z):
    assert abs(std_normal_cdf(z) - phi_series(z)) <= 1e-7


@given(st.floats(-12, 12), st.floats(-12, 12))
def test_phi_monotone(a, b):
    lo, hi = sorted((a, b))
    assert std_normal_cdf(lo) <= std_normal_cdf(hi)


@given(st.floats(-12, 12))
def test_phi_symmetry(z):
    assert abs(std_normal_cdf(-z) + std_normal_cdf(z) - 1.0) <= 1e-12


def test_extract_rank1():
    cv = compose_path([C24, C46], LOGISTICS_SCHEMA)
    dv = extract_decision_vector(cv, LOGISTICS_SCHEMA, 60)
    assert dv.x == (150, 110, 0.5)


def test_extract_rank2():
    cv = compose_path([(Scalar(80), Scalar(70), Normal(36, 16)), (Scalar(75), Scalar(40), Normal(22, 10))],
                      LOGISTICS_SCHEMA)
    dv = extract_decision_vector(cv, LOGISTICS_SCHEMA, 60)
    assert dv.x[:2] == (155, 110)
    assert dv.x[2] == pytest.approx(0.6526, abs=5e-5)


def test_degenerate_normal():
    assert on_time_probability(Normal(10, 0), 10) == 1.0
    assert on_time_probability(Normal(10.5, 0), 10) == 0.0


def test_missing_deadline():
    cv = compose_path([C24], LOGISTICS_SCHEMA)
    with pytest.raises(MissingBinding):
        extract_decision_vector(cv, LOGISTICS_SCHEMA)
    with pytest.raises(MissingBinding):
        extract_decision_vector(cv, LOGISTICS_SCHEMA, 0)


seg = st.tuples(st.integers(0, 500), st.integers(0, 500), st.integers(0, 80), st.integers(0, 30)).map(
    lambda t: (Scalar(t[0]), Scalar(t[1]), Normal(t[2], t[3])))


@given(st.lists(seg, min_size=1, max_size=5), st.lists(seg, min_size=1, max_size=5))
def test_compose_associative(left, right):
    whole = compose_path(left + right, LOGISTICS_SCHEMA)
    parts = compose_path([compose_path(left, LOGISTICS_SCHEMA).values,
                          compose_path(right, LOGISTICS_SCHEMA).values], LOGISTICS_SCHEMA)
    assert whole == parts


@given(st.lists(seg, min_size=2, max_size=6), st.randoms())
def test_compose_order_independent(segs, rnd):
    shuffled = list(segs)
    rnd.shuffle(shuffled)
    assert compose_path(segs, LOGISTICS_SCHEMA) == compose_path(shuffled, LOGISTICS_SCHEMA)


@given(st.lists(seg, min_size=1, max_size=4), st.integers(0, 3), st.floats(0, 50), st.floats(1, 200))
def test_later_mean_never_raises_probability(segs, idx, bump, deadline):
    idx %= len(segs)
    before = extract_decision_vector(compose_path(segs, LOGISTICS_SCHEMA), LOGISTICS_SCHEMA, deadline).x[2]
    c, e, t = segs[idx]
    bumped = list(segs)
    bumped[idx] = (c, e, Normal(t.mean + bump, t.variance))
    after = extract_decision_vector(compose_path(bumped, LOGISTICS_SCHEMA), LOGISTICS_SCHEMA, deadline).x[2]
    assert after <= before
