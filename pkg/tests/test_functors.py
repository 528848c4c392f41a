from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgraph_kms.functors import (
    SamplingError,
    WeightFunctor,
    constraint_matrix,
    load_functor,
    sample_nonnegative,
    solve_constraints,
    template,
    write_functor,
    zero_functor,
)
from kgraph_kms.kgraph import validate

from conftest import loops_1graph, one_vertex_raw


def test_free_counts(mcnamara, eyeglasses):
    assert solve_constraints(mcnamara).free_count == 3
    assert solve_constraints(eyeglasses).free_count == 4


@pytest.mark.parametrize("name", ["mcnamara", "eyeglasses", "loops", "cube3"])
def test_free_count_matches_float_rank(name, mcnamara, eyeglasses, loops2, cube3):
    g = {"mcnamara": mcnamara, "eyeglasses": eyeglasses, "loops": loops2, "cube3": cube3}[name]
    M = np.array(constraint_matrix(g).tolist(), dtype=float)
    rank = np.linalg.matrix_rank(M) if M.size else 0
    space = solve_constraints(g)
    assert space.free_count == len(g.edges) - rank
    assert space.rank == rank


def test_one_graph_is_unconstrained(loops2):
    space = solve_constraints(loops2)
    assert space.free_count == 2 and space.rank == 0


def test_mcnamara_relation(mcnamara):
    # e1 f2 = f1 e2 forces y(e1) + y(f2) = y(f1) + y(e2)
    space = solve_constraints(mcnamara)
    for b in space.basis:
        v = dict(zip(space.edges, b))
        assert v["e1"] + v["f2"] == v["f1"] + v["e2"]


@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=7), min_size=4, max_size=4))
def test_combinations_satisfy_squares(eyeglasses, coeffs):
    y = solve_constraints(eyeglasses).combine(coeffs)
    assert y.is_exact()
    assert y.violations(eyeglasses) == []


@given(st.integers(min_value=0, max_value=10_000))
def test_samples_are_nonnegative_functors(fixture_graph, seed):
    space = solve_constraints(fixture_graph)
    y = sample_nonnegative(space, seed)
    assert all(v >= 0 for v in y.values.values())
    y.check(fixture_graph)
    assert y == sample_nonnegative(space, seed)


def test_functor_is_additive(mcnamara):
    y = sample_nonnegative(solve_constraints(mcnamara), 5)
    for lam in mcnamara.paths_of_degree((2, 1)):
        assert y(lam) == sum(y.values[e] for e in lam.edges)
    assert zero_functor(mcnamara)(mcnamara.path("e1", "f2")) == 0
    assert y(mcnamara.vertex("v")) == 0


def test_check_rejects_bad_functors(mcnamara):
    with pytest.raises(ValueError, match="no value"):
        WeightFunctor({"e1": 1}).check(mcnamara)
    with pytest.raises(ValueError, match="nonnegative"):
        WeightFunctor({"e1": -1, "e2": 0, "f1": 0, "f2": 0}).check(mcnamara)
    with pytest.raises(ValueError, match="square"):
        WeightFunctor({"e1": 1, "e2": 0, "f1": 0, "f2": 0}).check(mcnamara)


def test_sampling_error():
    g = validate(one_vertex_raw(2, 2))
    space = solve_constraints(g)
    # a space whose only nonzero direction is negative cannot be sampled above zero
    negative = type(space)(
        edges=space.edges,
        particular=tuple(Fraction(-1) for _ in space.edges),
        basis=(),
        free_variables=(),
    )
    with pytest.raises(SamplingError):
        sample_nonnegative(negative, 0, attempts=5)


def test_round_trip(tmp_path, eyeglasses):
    y = sample_nonnegative(solve_constraints(eyeglasses), 3)
    path = tmp_path / "y.txt"
    write_functor(y, path, header="sample")
    back = load_functor(path, eyeglasses)
    assert {e: float(v) for e, v in back.values.items()} == {e: float(v) for e, v in y.values.items()}


def test_load_errors(tmp_path, mcnamara):
    bad = tmp_path / "bad.txt"
    bad.write_text("e1 1 2\n")
    with pytest.raises(ValueError, match="expected"):
        load_functor(bad)
    bad.write_text("e1 inf\n")
    with pytest.raises(ValueError, match="non-finite"):
        load_functor(bad)
    ok = tmp_path / "ok.txt"
    ok.write_text("# comment\ne1 = 0.5\ne2 1/2\nf1 0.5  # trailing\nf2 = 1/2\n")
    y = load_functor(ok, mcnamara)
    assert y.values["e1"] == Fraction(1, 2)


def test_template_lists_free_variables(mcnamara):
    text = template(solve_constraints(mcnamara))
    assert "free variables (3)" in text
    assert text.count(" = 0") == 4


def test_unconstrained_loops():
    g = validate(loops_1graph(3))
    assert solve_constraints(g).free_variables == ("a0", "a1", "a2")
