import math

import pytest
from hypothesis import given, strategies as st

from kgraph_kms.bratteli import BratteliPath, BratteliWeight, bratteli_paths, sample_admissible
from kgraph_kms.functors import WeightFunctor, zero_functor
from kgraph_kms.hausdorff import (
    ClassificationError,
    PathCountError,
    cover_sum,
    cover_sum_enumerated,
    dimension_estimate,
    hausdorff_measure,
    write_cover_grid,
)
from kgraph_kms.spectral import spectral_data


def _flat(g, theta=1.0):
    return BratteliWeight(spectral_data(g, zero_functor(g), theta))


@given(st.integers(0, 8), st.floats(0.1, 3.0))
def test_closed_form(mcnamara, M, s):
    w = _flat(mcnamara)
    assert cover_sum(M, s, w) == pytest.approx(2.0 ** (M * (1 - s)), rel=1e-12)


def test_zero_level(eyeglasses):
    w = _flat(eyeglasses, 1.3)
    for s in (0.5, 1.3, 2.0):
        expect = sum(w(BratteliPath(v, ())) ** s for v in eyeglasses.vertices)
        assert cover_sum(0, s, w) == pytest.approx(expect, rel=1e-14)


def test_transfer_matches_enumeration(fixture_graph):
    for y, theta in sample_admissible(fixture_graph, 3, seed=4):
        w = BratteliWeight(spectral_data(fixture_graph, y, theta))
        for M in range(0, 8):
            for s in (0.5 * theta, theta, 1.6 * theta):
                assert cover_sum(M, s, w) == pytest.approx(cover_sum_enumerated(M, s, w), rel=1e-11)
        direct = math.fsum(w(p) ** 0.9 for p in bratteli_paths(fixture_graph, 4))
        assert cover_sum(4, 0.9, w) == pytest.approx(direct, rel=1e-12)


def test_enumeration_guard(mcnamara):
    with pytest.raises(PathCountError):
        cover_sum_enumerated(30, 1.0, _flat(mcnamara), max_paths=1000)


def test_bad_arguments(mcnamara):
    w = _flat(mcnamara)
    with pytest.raises(ValueError):
        cover_sum(-1, 1.0, w)
    with pytest.raises(ValueError):
        cover_sum(3, 0.0, w)
    with pytest.raises(ValueError):
        dimension_estimate(w, M_max=1)


def test_sum_at_theta_is_one(fixture_graph):
    for y, theta in sample_admissible(fixture_graph, 10, seed=6):
        w = BratteliWeight(spectral_data(fixture_graph, y, theta))
        for M in range(9):
            assert abs(cover_sum(M, theta, w) - 1) < 1e-12


def test_monotone_around_theta(fixture_graph):
    for y, theta in sample_admissible(fixture_graph, 3, seed=7):
        w = BratteliWeight(spectral_data(fixture_graph, y, theta))
        below = [cover_sum(M, theta - 0.1, w) for M in range(2, 12)]
        above = [cover_sum(M, theta + 0.1, w) for M in range(2, 12)]
        assert below[-1] > below[0] and above[-1] < above[0]


@pytest.mark.parametrize("theta", [0.6, 1.0, 1.7])
def test_dimension(fixture_graph, theta):
    w = _flat(fixture_graph, theta)
    assert dimension_estimate(w, M_max=10) == pytest.approx(theta, abs=1e-4)


def test_dimension_stable_under_doubling(eyeglasses):
    for y, theta in sample_admissible(eyeglasses, 2, seed=8):
        w = BratteliWeight(spectral_data(eyeglasses, y, theta))
        a = dimension_estimate(w, M_max=10)
        b = dimension_estimate(w, M_max=20)
        assert a == pytest.approx(theta, abs=1e-3) and b == pytest.approx(theta, abs=1e-3)
        assert abs(a - b) < 1e-3


def test_dimension_needs_admissible_weight(mcnamara):
    heavy = WeightFunctor({"e1": 5, "e2": 5, "f1": 5, "f2": 5})
    w = BratteliWeight(spectral_data(mcnamara, heavy, 1.0))
    with pytest.raises(ValueError):
        dimension_estimate(w)


def test_dimension_search_bounds(mcnamara):
    with pytest.raises(ClassificationError):
        dimension_estimate(_flat(mcnamara, 3.0), s_max=2.0)


def test_hausdorff_measure(eyeglasses):
    w = _flat(eyeglasses, 1.0)
    p = BratteliPath.from_path(eyeglasses, eyeglasses.path("a0", "b0"))
    h, gap = hausdorff_measure(p, w)
    assert h == pytest.approx(1 / (2 * (2 + math.sqrt(2))), abs=1e-12)
    assert gap < 1e-12
    for v in eyeglasses.vertices:
        assert hausdorff_measure(BratteliPath(v, ()), w)[0] == pytest.approx(w.sd.xi_at(v), abs=1e-14)


def test_cover_grid(tmp_path, mcnamara):
    path = tmp_path / "grid.csv"
    write_cover_grid(_flat(mcnamara), [0, 1], [0.5, 1.0], path)
    rows = path.read_text().splitlines()
    assert rows[0] == "M,s,S_M" and len(rows) == 5
