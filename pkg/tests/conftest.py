"""Shared fixtures: hand-built instances and seeded tiny suites."""

import numpy as np
import pytest

from atmpnet.instance import Instance, Solution, generate

# (orders, locations, modes) of the tiny oracle-solvable suite
TINY_SIZES = [(1, 1, 1), (2, 2, 1), (3, 2, 2), (3, 3, 1), (4, 2, 2), (4, 3, 2)]
TINY_SEEDS = range(10)


def tiny_suite(seeds=TINY_SEEDS, sizes=TINY_SIZES):
    """Seeded instances small enough for full enumeration."""
    return [
        generate(n_i, n_j, n_k, seed=seed)
        for n_i, n_j, n_k in sizes
        for seed in seeds
    ]


def make_solution(instance: Instance, y_m=(), y_c=(), x_m=(), x_c=(), z=(), modes=()) -> Solution:
    """Solution from index lists: x_m/x_c as (i, j), modes as (j, k)."""
    n_i, n_j, n_k = instance.sizes
    solution = {
        "y_m": np.zeros(n_j, dtype=bool),
        "y_c": np.zeros(n_j, dtype=bool),
        "x_m": np.zeros((n_i, n_j), dtype=bool),
        "x_c": np.zeros((n_i, n_j), dtype=bool),
        "z": np.zeros(n_i, dtype=bool),
        "m": np.zeros((n_j, n_k), dtype=bool),
    }
    for j in y_m:
        solution["y_m"][j] = True
    for j in y_c:
        solution["y_c"][j] = True
    for i, j in x_m:
        solution["x_m"][i, j] = True
    for i, j in x_c:
        solution["x_c"][i, j] = True
    for i in z:
        solution["z"][i] = True
    for j, k in modes:
        solution["m"][j, k] = True
    return Solution(**solution)


def fresh_instance(failure_rate: float = 0.0) -> Instance:
    """One order, one location: d[i,j] = 2, d[j,i] = 3, fresh production 10h."""
    return Instance.build(
        shelf_life_hours=[5.0],
        setup_cost_manufacturing=[100.0],
        setup_cost_cryo=[40.0],
        p_fresh_hours=[10.0],
        p_frozen_hours=[12.0],
        travel=[[0.0, 2.0], [3.0, 0.0]],
        op_cost_fresh=[[[30.0]]],
        op_cost_frozen=[[[20.0]]],
        failure_rate=[[failure_rate]],
    )


def frozen_instance(failure_rate: float = 0.0) -> Instance:
    """One order, manufacturing at location 0, cryo at location 1.

    d[i,j'] = 1, d[j',j] = 2, d[j,i] = 3, frozen production 5h; the direct
    leg d[i,j] = 50 is far beyond the 1h shelf-life.
    """
    return Instance.build(
        shelf_life_hours=[1.0],
        setup_cost_manufacturing=[100.0, 300.0],
        setup_cost_cryo=[90.0, 40.0],
        p_fresh_hours=[4.0],
        p_frozen_hours=[5.0],
        travel=[
            [0.0, 50.0, 1.0],
            [3.0, 0.0, 2.0],
            [4.0, 2.0, 0.0],
        ],
        op_cost_fresh=[[[15.0], [15.0]]],
        op_cost_frozen=[[[20.0], [20.0]]],
        failure_rate=[[failure_rate]],
    )


def frozen_solution(instance: Instance) -> Solution:
    return make_solution(instance, y_m=[0], y_c=[1], x_m=[(0, 0)], x_c=[(0, 1)], z=[0], modes=[(0, 0)])


def two_order_instance() -> Instance:
    """Two orders sharing two locations; order 1 only reaches location 1 fresh."""
    return Instance.build(
        shelf_life_hours=[6.0, 3.0],
        setup_cost_manufacturing=[200.0, 250.0],
        setup_cost_cryo=[60.0, 50.0],
        p_fresh_hours=[48.0, 24.0],
        p_frozen_hours=[60.0, 36.0],
        travel=[
            [0.0, 4.0, 2.0, 5.0],
            [4.0, 0.0, 5.0, 2.0],
            [2.0, 5.0, 0.0, 3.0],
            [5.0, 2.0, 3.0, 0.0],
        ],
        op_cost_fresh=[[[50.0, 80.0], [55.0, 85.0]], [[52.0, 82.0], [50.0, 80.0]]],
        op_cost_frozen=[[[60.0, 95.0], [65.0, 99.0]], [[62.0, 96.0], [60.0, 94.0]]],
        failure_rate=[[0.15, 0.05], [0.12, 0.04]],
    )


@pytest.fixture
def fresh():
    return fresh_instance()


@pytest.fixture
def frozen():
    return frozen_instance()


@pytest.fixture
def two_orders():
    return two_order_instance()


@pytest.fixture
def seeded():
    return generate(3, 3, 2, seed=11)


def flat_vectors(vectors):
    """Objective vectors sorted coverage-first on rounded keys, flattened for pytest.approx."""
    ordered = sorted(vectors, key=lambda v: (v.coverage, round(v.cost, 6), round(v.waiting_time_hours, 6)))
    return [x for v in ordered for x in v.as_tuple()]
