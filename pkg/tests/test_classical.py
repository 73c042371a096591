import itertools

import numpy as np
import pytest

from atmpnet.classical import (
    BackupSpec,
    CoverSpec,
    backup_lscp,
    coverage_matrix,
    lscp,
    mclp,
    p_center,
    p_median,
)
from atmpnet.errors import CoverageInfeasibleError
from atmpnet.instance import generate

INSTANCES = [generate(8, 5, 1, seed=seed) for seed in range(30)]


def _radius(instance, quantile):
    return float(np.quantile(instance.travel.to_location, quantile))


def _subsets(n):
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)


@pytest.mark.parametrize("instance", INSTANCES)
def test_lscp_is_minimum_cover(instance):
    radius = float(instance.travel.to_location.min(axis=1).max())
    reach = coverage_matrix(instance, radius)
    result = lscp(instance, CoverSpec(coverage_radius_hours=radius))
    assert reach[:, list(result.open_locations)].any(axis=1).all()
    smallest = min(len(s) for s in _subsets(instance.n_locations) if reach[:, list(s)].any(axis=1).all())
    assert result.count == smallest
    assert result.value == float(smallest)
    assert all(reach[i, j] for i, j in enumerate(result.assignment))


def test_lscp_reports_uncoverable_orders():
    instance = INSTANCES[0]
    with pytest.raises(CoverageInfeasibleError) as info:
        lscp(instance, CoverSpec(coverage_radius_hours=0.0))
    assert info.value.order_ids == list(range(instance.n_orders))


@pytest.mark.parametrize("instance", INSTANCES)
def test_backup_cover_needs_at_least_as_many_sites(instance):
    primary = float(instance.travel.to_location.min(axis=1).max())
    backup = float(np.sort(instance.travel.to_location, axis=1)[:, 1].max())
    backup = max(primary, backup)
    double = backup_lscp(instance, BackupSpec(primary, backup))
    single = lscp(instance, CoverSpec(coverage_radius_hours=primary))
    assert double.count >= max(2, single.count)
    reach = coverage_matrix(instance, backup)
    assert (reach[:, list(double.open_locations)].sum(axis=1) >= 2).all()
    near = coverage_matrix(instance, primary)
    smallest = min(
        len(s)
        for s in _subsets(instance.n_locations)
        if near[:, list(s)].any(axis=1).all() and (reach[:, list(s)].sum(axis=1) >= 2).all()
    )
    assert double.count == smallest


@pytest.mark.parametrize("instance", INSTANCES)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_mclp_matches_brute_force(instance, p):
    radius = _radius(instance, 0.3)
    reach = coverage_matrix(instance, radius)
    result = mclp(instance, CoverSpec(radius, p))
    best = max(int(reach[:, list(s)].any(axis=1).sum()) for s in itertools.combinations(range(instance.n_locations), p))
    assert result.value == float(best)
    assert result.count == p
    assert float(reach[:, list(result.open_locations)].any(axis=1).sum()) == result.value


def test_backup_cover_infeasible_with_one_location():
    instance = generate(3, 1, 1, seed=0)
    with pytest.raises(CoverageInfeasibleError):
        backup_lscp(instance, BackupSpec(1e6, 1e6))


@pytest.mark.parametrize("instance", INSTANCES)
def test_mclp_monotone_in_p(instance):
    radius = _radius(instance, 0.3)
    values = [mclp(instance, CoverSpec(radius, p)).value for p in range(1, instance.n_locations + 1)]
    assert values == sorted(values)
    assert values[-1] == float(coverage_matrix(instance, radius).any(axis=1).sum())


def test_mclp_uses_demand_weights():
    instance = INSTANCES[1]
    radius = _radius(instance, 0.3)
    weights = tuple(float(i + 1) for i in range(instance.n_orders))
    result = mclp(instance, CoverSpec(radius, 2, weights))
    reach = coverage_matrix(instance, radius)
    best = max(
        sum(w for i, w in enumerate(weights) if reach[i, list(s)].any())
        for s in itertools.combinations(range(instance.n_locations), 2)
    )
    assert result.value == pytest.approx(best)
    with pytest.raises(ValueError):
        mclp(instance, CoverSpec(radius, 2, (1.0,)))


@pytest.mark.parametrize("instance", INSTANCES)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_median_and_center_match_brute_force(instance, p):
    travel = instance.travel.to_location
    subsets = list(itertools.combinations(range(instance.n_locations), p))
    median = p_median(instance, CoverSpec(p=p))
    center = p_center(instance, CoverSpec(p=p))
    assert median.value == pytest.approx(min(travel[:, list(s)].min(axis=1).sum() for s in subsets))
    assert center.value == pytest.approx(min(travel[:, list(s)].min(axis=1).max() for s in subsets))
    assert median.count == center.count == p
    nearest = travel[np.arange(instance.n_orders), list(median.assignment)]
    assert nearest == pytest.approx(travel[:, list(median.open_locations)].min(axis=1))


@pytest.mark.parametrize("instance", INSTANCES[:3])
def test_median_never_worsens_with_more_sites(instance):
    values = [p_median(instance, CoverSpec(p=p)).value for p in range(1, instance.n_locations + 1)]
    assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(instance.travel.to_location.min(axis=1).sum())


@pytest.mark.parametrize(
    "factory",
    [
        lambda: CoverSpec(coverage_radius_hours=-1.0),
        lambda: CoverSpec(p=0),
        lambda: CoverSpec(demand_weights=(1.0, -2.0)),
        lambda: BackupSpec(5.0, 2.0),
        lambda: p_median(INSTANCES[0], CoverSpec(p=6)),
    ],
)
def test_bad_arguments_are_rejected(factory):
    with pytest.raises(ValueError):
        factory()


def test_result_to_dict():
    result = p_center(INSTANCES[0], CoverSpec(p=2))
    record = result.to_dict()
    assert record["model"] == "pcenter"
    assert record["count"] == 2
    assert record["open_locations"] == list(result.open_locations)
