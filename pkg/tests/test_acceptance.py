"""The twelve acceptance criteria, one test each.

Every test records a one-line verdict (``criterion``) that the terminal
summary prints as a PASS/FAIL table, together with its runtime.
"""

import math
import time

import numpy as np
import pytest

from kgraph_kms.bratteli import BratteliWeight, bratteli_degree, bratteli_paths, sample_admissible
from kgraph_kms.functors import sample_nonnegative, solve_constraints, zero_functor
from kgraph_kms.hausdorff import cover_sum, dimension_estimate, hausdorff_measure
from kgraph_kms.kgraph import load_fixture
from kgraph_kms.kms import Monomial, PsiState, kms_residual, kms_sweep, sample_characters
from kgraph_kms.measure import binary_word, markov_eval, markov_from_x, mu, quasi_invariance_spread
from kgraph_kms.periodicity import aperiodicity_criterion, default_depth, per_group
from kgraph_kms.spectral import spectral_data, theta_profile

SQRT2 = math.sqrt(2)


@pytest.fixture
def verdict(record_property, request):
    """Call with (number, ok, detail); records the line and fails the test when ok is false."""
    start = time.perf_counter()

    def record(number, ok, detail):
        seconds = time.perf_counter() - start
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f} s]"
        record_property("criterion", line)
        print(line)
        assert ok, line

    return record


def _sampled(g, seed):
    return sample_nonnegative(solve_constraints(g), seed)


def test_01_eyeglasses_spectrum(verdict):
    start = time.perf_counter()
    g = load_fixture("eyeglasses")
    sd = spectral_data(g, zero_functor(g), 1.0)
    seconds = time.perf_counter() - start
    rho_err = float(np.abs(sd.rho - SQRT2).max())
    xi_err = float(np.abs(sd.xi - np.array([1, SQRT2, 1]) / (2 + SQRT2)).max())
    prod_err = abs(sd.rho[0] * sd.rho[1] - 2)
    ok = max(rho_err, xi_err, prod_err) <= 1e-10 and seconds < 1
    verdict(1, ok, f"|rho - sqrt2| {rho_err:.1e}, |xi - xi*| {xi_err:.1e}, |rho1 rho2 - 2| {prod_err:.1e}")


def test_02_cylinder_a0b0(verdict):
    g = load_fixture("eyeglasses")
    sd = spectral_data(g, zero_functor(g), 1.0)
    err = abs(mu(g.path("a0", "b0"), sd) - 0.5 * sd.xi_at("u"))
    verdict(2, err <= 1e-12, f"|mu(a0b0) - xi_u/2| {err:.1e}")


def test_03_functor_spaces(verdict):
    counts = tuple(solve_constraints(load_fixture(n)).free_count for n in ("mcnamara", "eyeglasses"))
    verdict(3, counts == (3, 4), f"free variables {counts}")


def test_04_markov_correspondence(verdict):
    g = load_fixture("mcnamara")
    y, theta = markov_from_x(0.3, 1.0)
    sd = spectral_data(g, y, theta)
    e1_err = abs(mu(g.path("e1"), sd) - 0.3)
    worst = 0.0
    count = 0
    for n in range(1, 9):
        for v in g.vertices:
            for lam in g.enumerate_paths(v, bratteli_degree(n, g.k)):
                worst = max(worst, abs(mu(lam, sd) - markov_eval(binary_word(g, lam.edges), 0.3)))
                count += 1
    ok = theta == 1.0 and e1_err <= 1e-12 and worst <= 1e-12
    verdict(4, ok, f"|mu(e1) - 0.3| {e1_err:.1e}, max cylinder gap {worst:.1e} over {count} words")


def test_05_periodicity_groups(verdict):
    found, times = [], []
    for name in ("mcnamara", "eyeglasses"):
        g = load_fixture(name)
        start = time.perf_counter()
        found.append(per_group(g, (2, 2), default_depth(g)).basis)
        times.append(time.perf_counter() - start)
    ok = found == [((1, -1),), ((2, -2),)] and max(times) < 10
    verdict(5, ok, f"bases {found}, slowest {max(times):.3f} s")


def test_06_kms_suite(verdict):
    start = time.perf_counter()
    worst, pairs = 0.0, 0
    for name in ("mcnamara", "eyeglasses"):
        g = load_fixture(name)
        sd = spectral_data(g, _sampled(g, 1), 1.0)
        for r in kms_sweep(sd, max_degree=(2, 2), characters=sample_characters(g.k, 8, seed=0)):
            worst = max(worst, r.max_residual)
            pairs += r.pairs
    seconds = time.perf_counter() - start
    ok = worst <= 1e-10 and seconds < 60
    verdict(6, ok, f"max residual {worst:.1e} over {pairs} state-pairs (psi + 8 omega_z per fixture)")


def test_07_beta_must_equal_theta(verdict):
    g = load_fixture("mcnamara")
    y = _sampled(g, 2)
    assert any(v != 0 for v in y.values.values())
    theta = 1.0
    sd = spectral_data(g, y, theta)
    v, e1 = g.vertex("v"), g.path("e1")
    a, b = Monomial(e1, v), Monomial(v, e1)
    residuals = []
    for beta in (theta - 0.2, theta + 0.2):
        # psi from the spectral data at theta, and the psi one would build at beta
        own = spectral_data(g, y, beta)
        residuals.append(min(kms_residual(PsiState(sd), a, b, beta, sd), kms_residual(PsiState(own), a, b, beta, sd)))
    verdict(7, min(residuals) > 1e-6, f"witness (s_e1, s_e1^*) residuals {[f'{r:.3g}' for r in residuals]}")


def test_08_quasi_invariance(verdict):
    worst = 0.0
    for name in ("mcnamara", "eyeglasses"):
        g = load_fixture(name)
        sd = spectral_data(g, _sampled(g, 3), 1.3)
        worst = max(worst, quasi_invariance_spread(g.paths_upto((3, 3)), sd, sd.theta))
    verdict(8, worst <= 1e-12, f"max residual {worst:.1e} over all same-source pairs to (3,3)")


def test_09_self_similarity(verdict):
    worst, cases = 0.0, 0
    for name in ("mcnamara", "eyeglasses"):
        g = load_fixture(name)
        for y, theta in sample_admissible(g, 10, seed=9):
            w = BratteliWeight(spectral_data(g, y, theta))
            worst = max(worst, max(abs(cover_sum(M, theta, w) - 1) for M in range(9)))
            cases += 1
    verdict(9, worst <= 1e-12, f"max |S_M(theta) - 1| {worst:.1e}, M <= 8, {cases} admissible (y, theta)")


def test_10_hausdorff_dimension(verdict):
    start = time.perf_counter()
    dim_err, meas_err = 0.0, 0.0
    for name in ("mcnamara", "eyeglasses"):
        g = load_fixture(name)
        for theta in (0.6, 1.0, 1.7):
            w = BratteliWeight(spectral_data(g, zero_functor(g), theta))
            dim_err = max(dim_err, abs(dimension_estimate(w, M_max=10) - theta))
            for n in range(7):
                for p in bratteli_paths(g, n):
                    meas_err = max(meas_err, hausdorff_measure(p, w)[1])
    seconds = time.perf_counter() - start
    ok = dim_err <= 0.01 and meas_err <= 1e-12 and seconds < 120
    verdict(10, ok, f"max |dim - theta| {dim_err:.1e}, max |H^theta - mu| {meas_err:.1e} to length 6")


def test_11_smoothness(verdict):
    grid = np.linspace(0.5, 2.0, 50)
    worst = 0.0
    for name, seed in (("mcnamara", 4), ("eyeglasses", 4)):
        g = load_fixture(name)
        y = _sampled(g, seed)
        coarse = theta_profile(g, y, grid, h=1e-3)
        fine = theta_profile(g, y, grid, h=5e-4)
        for field in ("drho", "d2rho", "dxi", "d2xi"):
            a, b = getattr(coarse, field), getattr(fine, field)
            gap = np.abs(a - b)
            rel = np.divide(gap, np.abs(b), out=np.zeros_like(gap), where=gap > 0)
            worst = max(worst, float(rel.max()))
    g = load_fixture("mcnamara")
    y = _sampled(g, 4)
    assert any(v != 0 for v in y.values.values())
    psi = theta_profile(g, y, grid).psi
    decreasing = bool(np.all(np.diff(psi, axis=0) < 0))
    verdict(11, worst <= 1e-4 and decreasing, f"max relative change under step halving {worst:.1e}, psi decreasing {decreasing}")


def test_12_aperiodicity_witness(verdict):
    g = load_fixture("mcnamara")
    found = []
    for seed, beta in zip(range(5), (0.5, 0.8, 1.2, 1.9, 3.0)):
        sd = spectral_data(g, _sampled(g, seed), beta)
        w = aperiodicity_criterion(sd, (1, 1), beta=beta).witness
        found.append((str(w.lam), str(w.nu), w.gap))
    ok = all(lam == "e1" and nu == "f1" and gap <= 1e-12 for lam, nu, gap in found)
    verdict(12, ok, f"witnesses {sorted({(a, b) for a, b, _ in found})}, max gap {max(g for *_, g in found):.1e}")
