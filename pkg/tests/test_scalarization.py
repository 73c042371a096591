import math

import pytest

from atmpnet.instance import ObjectiveVector
from atmpnet.scalarization import EpsilonConstraint, WeightedSum, cap_slack, parse_weights


def test_weighted_sum_value():
    weights = WeightedSum(2.0, 1.0, 10.0)
    assert weights.score(ObjectiveVector(3.0, 4.0, 1)) == pytest.approx(0.0)
    assert weights.admits(ObjectiveVector(1e9, 1e9, 0))


@pytest.mark.parametrize("weights", [(0.0, 0.0, 0.0), (-1.0, 1.0, 0.0), (1.0, math.inf, 0.0)])
def test_weighted_sum_rejects_bad_weights(weights):
    with pytest.raises(ValueError):
        WeightedSum(*weights)


def test_parse_weights_negates_coverage():
    assert parse_weights("1,1,-1000") == WeightedSum(1.0, 1.0, 1000.0)
    assert parse_weights("0,1,0") == WeightedSum(0.0, 1.0, 0.0)


@pytest.mark.parametrize("text", ["1,2", "a,b,c", "1,1,5"])
def test_parse_weights_rejects(text):
    with pytest.raises(ValueError):
        parse_weights(text)


def test_epsilon_caps_allow_relative_slack():
    eps = EpsilonConstraint("waiting_time", cost_cap=1e6)
    assert eps.admits(ObjectiveVector(5.0, 1e6 + 0.5 * cap_slack(1e6), 0))
    assert not eps.admits(ObjectiveVector(5.0, 1e6 + 2 * cap_slack(1e6), 0))


def test_epsilon_coverage_floor():
    eps = EpsilonConstraint("cost", waiting_cap=10.0, coverage_floor=2)
    assert not eps.admits(ObjectiveVector(5.0, 1.0, 1))
    assert eps.admits(ObjectiveVector(10.0, 1.0, 2))
    assert not eps.admits(ObjectiveVector(10.5, 1.0, 3))


def test_epsilon_order_puts_primary_first():
    v = ObjectiveVector(3.0, 7.0, 2)
    assert EpsilonConstraint("waiting_time").key(v) == (3.0, 7.0, -2)
    assert EpsilonConstraint("cost").key(v) == (7.0, 3.0, -2)
    assert EpsilonConstraint("coverage").key(v) == (-2, 3.0, 7.0)
    assert EpsilonConstraint("coverage").score(v) == -2


@pytest.mark.parametrize(
    "kwargs",
    [
        {"primary": "waiting_time", "waiting_cap": 1.0},
        {"primary": "cost", "cost_cap": 1.0},
        {"primary": "coverage", "coverage_floor": 1},
        {"primary": "speed"},
        {"coverage_floor": -1},
        {"cost_cap": math.nan},
    ],
)
def test_epsilon_rejects_inconsistent_bounds(kwargs):
    with pytest.raises(ValueError):
        EpsilonConstraint(**kwargs)


def test_describe():
    assert EpsilonConstraint("waiting_time", cost_cap=5.0, coverage_floor=1).describe() == (
        "epsilon waiting_time s.t. C <= 5, V >= 1"
    )
    assert WeightedSum(1.0, 2.0, 0.0).describe() == "weighted-sum 1*W + 2*C - 0*V"
