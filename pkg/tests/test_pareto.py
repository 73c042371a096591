import numpy as np
import pytest

from atmpnet.errors import SchemaError
from atmpnet.evaluator import evaluate
from atmpnet.exact import solve
from atmpnet.instance import ObjectiveVector, generate
from atmpnet.oracle import oracle_front
from atmpnet.pareto import (
    CSV_COLUMNS,
    GridSpec,
    default_reference,
    epsilon_front,
    front_exact,
    hypervolume,
    nondominated_filter,
    read_front_csv,
    read_front_solutions,
    write_front_csv,
    write_front_solutions,
)

from conftest import flat_vectors, tiny_suite


@pytest.mark.parametrize("instance", tiny_suite(seeds=range(4)), ids=lambda i: "x".join(map(str, i.sizes)))
def test_exact_front_matches_enumeration(instance):
    front = front_exact(instance)
    assert not front.approximate
    assert all(point.optimal for point in front)
    assert flat_vectors(front.vectors()) == pytest.approx(flat_vectors(oracle_front(instance).vectors()))


@pytest.mark.parametrize("seed", range(3))
def test_exact_front_in_strict_mode(seed):
    instance = generate(3, 2, 2, seed=seed)
    front = front_exact(instance, paper_strict=True)
    expected = oracle_front(instance, paper_strict=True)
    assert flat_vectors(front.vectors()) == pytest.approx(flat_vectors(expected.vectors()))


def test_front_is_sorted_nondominated_and_ends_at_the_empty_solution(seeded):
    front = front_exact(seeded)
    vectors = front.vectors()
    assert vectors == sorted(vectors, key=lambda v: v.front_order())
    assert nondominated_filter(vectors) == vectors
    assert vectors[-1].as_tuple() == (0.0, 0.0, 0)
    for point in front:
        assert evaluate(seeded, point.solution) == point.objective


@pytest.mark.parametrize("seed", range(3))
def test_unrefined_points_lie_on_the_front(seed):
    instance = generate(4, 3, 2, seed=seed)
    truth = oracle_front(instance).vectors()
    coarse = front_exact(instance, GridSpec(cost_levels=2, refine=False))
    assert len(coarse) <= len(truth)
    for vector in coarse.vectors():
        assert any(vector.is_close(t, tol=1e-6) for t in truth)


def test_workers_do_not_change_the_front(seeded):
    single = front_exact(seeded, workers=1)
    threaded = front_exact(seeded, workers=3)
    assert write_front_csv(single) == write_front_csv(threaded)
    assert write_front_solutions(single) == write_front_solutions(threaded)


def test_incomplete_cells_mark_the_front_approximate(seeded):
    def cell(eps):
        result = solve(seeded, eps)
        return result.solution, result.objective, False

    front = epsilon_front(seeded, cell, GridSpec(cost_levels=2))
    assert front.approximate
    assert not any(point.optimal for point in front)


def test_expired_budget_gives_an_empty_approximate_front(seeded):
    front = epsilon_front(seeded, lambda eps: (None, None, True), time_limit=-1.0)
    assert front.approximate
    assert len(front) == 0


def test_coverage_levels_restrict_the_floors(seeded):
    front = front_exact(seeded, GridSpec(coverage_levels=(0,)))
    assert len(front) >= 1
    assert front.vectors()[-1].as_tuple() == (0.0, 0.0, 0)


@pytest.mark.parametrize("kwargs", [{"cost_levels": 0}, {"refine_limit": 0}])
def test_grid_spec_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_hypervolume_of_known_points():
    single = [ObjectiveVector(1.0, 1.0, 1)]
    assert hypervolume(single, (2.0, 2.0, 0)) == pytest.approx(1.0)
    staircase = [ObjectiveVector(1.0, 2.0, 1), ObjectiveVector(2.0, 1.0, 1)]
    assert hypervolume(staircase, (3.0, 3.0, 0)) == pytest.approx(3.0)
    layered = [ObjectiveVector(1.0, 1.0, 1), ObjectiveVector(2.0, 2.0, 2)]
    assert hypervolume(layered, ObjectiveVector(3.0, 3.0, 0)) == pytest.approx(5.0)
    assert hypervolume([], (1.0, 1.0, 0)) == 0.0


def test_hypervolume_ignores_dominated_points():
    points = [ObjectiveVector(1.0, 2.0, 1), ObjectiveVector(2.0, 1.0, 1)]
    reference = default_reference(points)
    base = hypervolume(points, reference)
    assert hypervolume(points + [ObjectiveVector(2.0, 2.0, 1)], reference) == pytest.approx(base)
    assert hypervolume(points + [ObjectiveVector(0.5, 0.5, 1)], reference) > base


def test_hypervolume_rejects_undominated_reference():
    with pytest.raises(ValueError):
        hypervolume([ObjectiveVector(5.0, 1.0, 1)], (4.0, 2.0, 0))


def _grid_vectors(seed, count, high=10):
    rng = np.random.default_rng(seed)
    values = rng.integers(0, high, size=(count, 3))
    return [ObjectiveVector(float(w), float(c), int(v) % 6) for w, c, v in values]


@pytest.mark.parametrize("seed", range(2))
def test_filter_matches_pairwise_comparison(seed):
    vectors = _grid_vectors(seed, 1000)
    expected = [
        v
        for n, v in enumerate(vectors)
        if not any(other.dominates(v) for other in vectors) and v not in vectors[:n]
    ]
    assert nondominated_filter(vectors) == expected


@pytest.mark.parametrize("seed", range(3))
def test_hypervolume_agrees_with_sampling(seed):
    vectors = _grid_vectors(seed, 20)
    reference = (10.0, 10.0, 0)
    rng = np.random.default_rng(100 + seed)
    low = np.array([0.0, 0.0, -5.0])
    high = np.array([10.0, 10.0, 0.0])
    samples = low + (high - low) * rng.random((200_000, 3))
    corners = np.array([v.minimization_tuple() for v in vectors])
    covered = (corners[None, :, :] <= samples[:, None, :]).all(axis=2).any(axis=1)
    estimate = covered.mean() * float(np.prod(high - low))
    assert hypervolume(vectors, reference) == pytest.approx(estimate, abs=2.5)


def test_csv_rows_read_back(seeded):
    front = front_exact(seeded)
    text = write_front_csv(front)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    rows = read_front_csv(text)
    assert [row.objective for row in rows] == front.vectors()
    assert [row.solution_id for row in rows] == list(range(len(front)))
    assert all(row.optimal for row in rows)
    assert nondominated_filter(rows) == rows
    assert read_front_solutions(write_front_solutions(front), seeded) == [p.solution for p in front]


def test_front_output_is_reproducible():
    first = front_exact(generate(4, 3, 2, seed=5))
    second = front_exact(generate(4, 3, 2, seed=5))
    assert write_front_csv(first) == write_front_csv(second)
    assert write_front_solutions(first) == write_front_solutions(second)


def test_csv_errors_are_schema_errors():
    with pytest.raises(SchemaError) as info:
        read_front_csv("v,cost\n1,2\n")
    assert info.value.path == "waiting_hours"
    header = ",".join(CSV_COLUMNS)
    with pytest.raises(SchemaError) as info:
        read_front_csv(f"{header}\n1,cheap,3.0,0,optimal,3.0\n")
    assert info.value.path == "row 1"
    with pytest.raises(SchemaError):
        read_front_solutions(b"[]")
