import itertools
import math
import time

import numpy as np
import sympy
import pytest
from hypothesis import given, strategies as st

from kgraph_kms.functors import sample_nonnegative, solve_constraints, zero_functor
from kgraph_kms.periodicity import (
    PeriodicityOracle,
    aperiodicity_criterion,
    character_group,
    check_periodic,
    default_depth,
    hermite_basis,
    modified_weight,
    per_group,
    periodic_pair,
)
from kgraph_kms.spectral import spectral_data


def test_per_groups(mcnamara, eyeglasses):
    for g, expect in [(mcnamara, ((1, -1),)), (eyeglasses, ((2, -2),))]:
        start = time.perf_counter()
        grp = per_group(g, (2, 2), depth=default_depth(g))
        assert time.perf_counter() - start < 10
        assert grp.basis == expect
        assert grp.depth == len(g.vertices) + 1


@pytest.mark.parametrize("v", ["u", "v", "w"])
def test_per_group_any_vertex(eyeglasses, v):
    assert per_group(eyeglasses, (2, 2), vertex=v).basis == ((2, -2),)


def test_one_graph_is_aperiodic(loops2, cube3):
    assert per_group(loops2, (3,)).is_trivial
    # flip squares make the 3-graph a product: shifts never coincide
    assert per_group(cube3, (1, 1, 1)).is_trivial


def test_check_periodic(mcnamara, eyeglasses):
    assert check_periodic(mcnamara, "v", (1, 0), (0, 1), 4)
    assert check_periodic(mcnamara, "v", (2, 0), (1, 1), 3)
    refuted = check_periodic(mcnamara, "v", (1, 0), (0, 0), 3)
    assert not refuted and refuted.depth == 1 and refuted.witness[0] != refuted.witness[1]
    assert check_periodic(eyeglasses, "u", (2, 0), (0, 2), 4)
    assert not check_periodic(eyeglasses, "u", (1, 0), (0, 1), 4)


@pytest.mark.parametrize("m,n", [((1, 0), (0, 1)), ((2, 0), (0, 2)), ((1, 0), (0, 0)), ((2, 1), (0, 1))])
def test_verified_depth_is_monotone(eyeglasses, m, n):
    results = [bool(check_periodic(eyeglasses, "v", m, n, c)) for c in range(1, 5)]
    assert results == sorted(results, reverse=True)


def test_periodic_pairs(mcnamara, eyeglasses):
    e = eyeglasses
    lam = e.path("a0")
    assert periodic_pair(e, lam, lam, 3)
    assert periodic_pair(mcnamara, mcnamara.path("e1"), mcnamara.path("f1"), 4)
    refuted = periodic_pair(e, e.path("a0"), e.path("d0"), 3)
    assert not refuted and refuted.depth == 1
    with pytest.raises(ValueError):
        periodic_pair(e, e.path("a0"), e.path("c0"), 2)


def test_oracle(eyeglasses):
    e = eyeglasses
    oracle = PeriodicityOracle(e, group=per_group(e, (2, 2)))
    assert not oracle(e.path("a0"), e.path("d0"))
    assert not oracle(e.path("a0"), e.path("c0"))
    # paths of degree (2,0) and (0,2) between the same vertices
    for lam in e.paths_of_degree((2, 0)):
        partner = oracle.partner(lam, (0, 2))
        assert partner.rng == lam.rng and partner.src == lam.src
        assert oracle(lam, partner)
        assert oracle(partner, lam)


def _in_lattice(basis, p):
    # exact rational coordinates in a basis of independent rows, then integrality
    if not basis:
        return not any(p)
    A = sympy.Matrix([list(b) for b in basis]).T
    sol, _ = A.gauss_jordan_solve(sympy.Matrix(list(p)))
    return all(x.is_integer for x in sol)


def _index(rows):
    # rank and gcd of the maximal nonzero minors determine a sublattice's index
    M = sympy.Matrix([list(r) for r in rows])
    r = M.rank()
    if r == 0:
        return 0, 0
    minors = [
        int(M.extract(list(ix), list(jx)).det())
        for ix in itertools.combinations(range(M.rows), r)
        for jx in itertools.combinations(range(M.cols), r)
    ]
    return r, math.gcd(*minors)


vectors = st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=3)


@given(vectors)
def test_hermite_spans_same_lattice(rows):
    basis = hermite_basis(rows, 2)
    for r in rows:
        assert _in_lattice(basis, r) or not any(r)
    # rows lie in the basis lattice with the same rank and minor gcd, so the lattices agree
    assert _index(rows) == _index(basis)
    assert hermite_basis(list(basis), 2) == basis
    assert hermite_basis(rows[::-1], 2) == basis


def test_hermite_examples():
    assert hermite_basis([(4, 6), (6, 9), (2, 0)], 2) == ((2, 0), (0, 3))
    assert hermite_basis([(-2, 2)], 2) == ((2, -2),)
    assert hermite_basis([(0, 0)], 2) == ()


@given(vectors)
def test_annihilator_is_saturated_lattice(rows):
    basis = hermite_basis(rows, 2)
    N = character_group(basis, 2)
    assert hermite_basis(N.annihilator(), 2) == basis
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert N.contains(N.sample(rng))


def test_character_group_shapes():
    N = character_group(((2, -2),), 2)
    assert N.invariant_factors == (2,) and N.free_dimension == 1
    assert N.contains([0.5, 0.0]) and N.contains([0.3, 0.3]) and not N.contains([0.25, 0.0])
    T = character_group((), 3)
    assert T.rank == 0 and T.annihilator() == ()


def test_group_report(eyeglasses):
    grp = per_group(eyeglasses, (2, 2))
    assert grp.contains((4, -4)) and not grp.contains((1, -1))
    text = grp.report()
    assert "basis: [(2, -2)]" in text and "verified_depth: 4" in text


def test_criterion_mcnamara(mcnamara):
    space = solve_constraints(mcnamara)
    for seed, beta in zip(range(5), [0.5, 0.9, 1.3, 2.0, 3.1]):
        sd = spectral_data(mcnamara, sample_nonnegative(space, seed), beta)
        res = aperiodicity_criterion(sd, (1, 1))
        w = res.witness
        assert (str(w.lam), str(w.nu)) == ("e1", "f1")
        assert w.gap < 1e-12
        assert not res.cleared


def test_criterion_eyeglasses(eyeglasses):
    sd = spectral_data(eyeglasses, zero_functor(eyeglasses), 1.0)
    res = aperiodicity_criterion(sd, (1, 1))
    assert res.witness.lam.degree != res.witness.nu.degree
    assert modified_weight(res.witness.lam, sd) == pytest.approx(modified_weight(res.witness.nu, sd))


def test_criterion_one_graph(loops2):
    sd = spectral_data(loops2, zero_functor(loops2), 1.0)
    res = aperiodicity_criterion(sd, (4,))
    assert res.cleared and res.searched == 1 + 2 + 4 + 8 + 16
