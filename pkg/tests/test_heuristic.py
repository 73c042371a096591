import numpy as np
import pytest

from atmpnet.evaluator import check_feasible, is_feasible
from atmpnet.exact import CLOSED, CRYO, solve
from atmpnet.heuristic import (
    ConfigurationEvaluator,
    SearchParams,
    front_heuristic,
    local_search,
    neighbors,
    random_start,
    spread_levels,
)
from atmpnet.instance import generate
from atmpnet.pareto import default_reference, front_exact, hypervolume, nondominated_filter
from atmpnet.scalarization import EpsilonConstraint, WeightedSum

from conftest import tiny_suite

COVERING = WeightedSum(1.0, 1.0, 1000.0)


def test_search_is_deterministic(seeded):
    params = SearchParams(starts=3, max_no_improve=4, seed=9)
    first = local_search(seeded, COVERING, params)
    second = local_search(seeded, COVERING, params)
    threaded = local_search(seeded, COVERING, params, workers=3)
    assert first.configuration == second.configuration == threaded.configuration
    assert first.solution == second.solution == threaded.solution
    assert first.evaluations == threaded.evaluations
    assert first.histories == threaded.histories


@pytest.mark.parametrize("seed", range(5))
def test_result_is_a_local_optimum(seed):
    instance = generate(6, 4, 2, seed=seed)
    params = SearchParams(starts=2, max_no_improve=3, seed=seed)
    result = local_search(instance, COVERING, params)
    evaluator = ConfigurationEvaluator(instance, COVERING)
    for move in neighbors(result.configuration.states, instance.n_modes, params.neighborhood):
        assert evaluator(move) >= result.key
    assert check_feasible(instance, result.solution) == []


def test_cost_only_weights_open_nothing(seeded):
    result = local_search(seeded, WeightedSum(0.0, 1.0, 0.0))
    assert result.objective.as_tuple() == (0.0, 0.0, 0)
    assert result.best_start == 0


@pytest.mark.parametrize("seed", range(5))
def test_never_beats_the_exact_optimum(seed):
    instance = generate(4, 3, 2, seed=seed)
    for scalarization in (
        COVERING,
        EpsilonConstraint("cost", coverage_floor=2),
        EpsilonConstraint("waiting_time", cost_cap=900.0, coverage_floor=1),
    ):
        exact = solve(instance, scalarization)
        found = local_search(instance, scalarization)
        if exact.solution is None:
            assert found.solution is None
            continue
        if found.solution is None:
            continue
        assert is_feasible(instance, found.solution)
        assert scalarization.admits(found.objective)
        assert scalarization.key(found.objective) >= tuple(
            x - 1e-9 for x in scalarization.key(exact.objective)
        )


def test_inadmissible_configurations_sort_last(seeded):
    eps = EpsilonConstraint("cost", coverage_floor=seeded.n_orders)
    evaluator = ConfigurationEvaluator(seeded, eps)
    closed = evaluator(tuple([CLOSED] * seeded.n_locations))
    assert closed[0] >= 1.0
    result = local_search(seeded, eps)
    if result.admissible:
        assert result.key[0] == 0.0
        assert result.objective.coverage == seeded.n_orders


def test_evaluation_budget_is_respected(seeded):
    params = SearchParams(starts=2, max_no_improve=50, max_evaluations=5)
    result = local_search(seeded, COVERING, params)
    assert result.evaluations <= 2 * 5 + 2


def test_neighbors_in_fixed_order():
    moves = neighbors((CLOSED, CRYO, 1), 2, ("toggle-facility", "retype-facility", "change-mode", "swap-pair"))
    assert moves == [
        (0, CRYO, 1),
        (CLOSED, CLOSED, 1),
        (CLOSED, CRYO, CLOSED),
        (CLOSED, 0, 1),
        (CLOSED, CRYO, CRYO),
        (CLOSED, CRYO, 0),
        (CRYO, CLOSED, 1),
        (1, CRYO, CLOSED),
    ]
    assert neighbors((CLOSED, CRYO, 1), 2, ("change-mode",)) == [(CLOSED, CRYO, 0)]


def test_random_start_is_seeded(seeded):
    first = random_start(seeded, np.random.default_rng(4))
    second = random_start(seeded, np.random.default_rng(4))
    assert first == second
    assert all(s in (CLOSED, CRYO) or 0 <= s < seeded.n_modes for s in first)


def test_spread_levels():
    assert spread_levels(3, 11) == (0, 1, 2, 3)
    levels = spread_levels(100, 11)
    assert len(levels) == 11
    assert levels[0] == 0 and levels[-1] == 100


@pytest.mark.parametrize(
    "kwargs",
    [{"starts": 0}, {"max_no_improve": 0}, {"neighborhood": ()}, {"neighborhood": ("teleport",)}, {"max_evaluations": 0}],
)
def test_search_params_validation(kwargs):
    with pytest.raises(ValueError):
        SearchParams(**kwargs)


def test_heuristic_front_is_feasible_and_flagged(seeded):
    front = front_heuristic(seeded)
    assert len(front) > 0
    assert not any(point.optimal for point in front)
    assert nondominated_filter(front.vectors()) == front.vectors()
    assert front.vectors()[-1].as_tuple() == (0.0, 0.0, 0)
    for point in front:
        assert check_feasible(seeded, point.solution) == []


@pytest.mark.slow
def test_heuristic_front_covers_most_of_the_exact_hypervolume():
    ratios = []
    for instance in tiny_suite(seeds=range(5)):
        exact = front_exact(instance)
        approx = front_heuristic(instance)
        reference = default_reference(exact.vectors() + approx.vectors())
        exact_volume = hypervolume(exact, reference)
        ratios.append(hypervolume(approx, reference) / exact_volume)
    assert all(r <= 1.0 + 1e-9 for r in ratios)
    assert np.mean(ratios) >= 0.9


@pytest.mark.slow
def test_heuristic_front_on_a_large_instance():
    instance = generate(50, 15, 3, seed=1)
    params = SearchParams(starts=2, max_no_improve=2, max_evaluations=200)
    front = front_heuristic(instance, params=params, max_levels=6, time_limit=300.0)
    assert len(front) > 0
    for point in front:
        assert is_feasible(instance, point.solution)
