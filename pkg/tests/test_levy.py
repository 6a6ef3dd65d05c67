import math

import numpy as np
import pytest
from scipy.integrate import quad

from trapsim import levy, rng


def test_arcsine_endpoints_exact():
    for alpha in (0.3, 0.5, 0.9):
        assert levy.arcsine_cdf(alpha, 0.0) == 0.0
        assert levy.arcsine_cdf(alpha, 1.0) == 1.0


def test_arcsine_half_symmetry():
    assert levy.arcsine_cdf(0.5, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_arcsine_quarter_closed_form():
    # alpha = 1/2 closed form (2/pi) arcsin(sqrt(z)) gives 1/3 at z = 1/4
    assert levy.arcsine_cdf(0.5, 0.25) == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert levy.arcsine_cdf_quadrature(0.5, 0.25) == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_arcsine_against_quadrature_oracle():
    zs = np.linspace(0.02, 0.98, 17)
    for alpha in (0.3, 0.6, 0.9):
        for z in zs:
            oracle = levy.arcsine_cdf_quadrature(alpha, float(z))
            assert levy.arcsine_cdf(alpha, float(z)) == pytest.approx(oracle, abs=1e-8)


def test_arcsine_is_cdf():
    z = np.linspace(0.0, 1.0, 10**4)
    for alpha in (0.25, 0.6, 0.85):
        vals = levy.arcsine_cdf(alpha, z)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))
        # grid increments shrink like the endpoint singularity allows
        step_cap = 2.0 * (1.0 / z.size) ** min(alpha, 1.0 - alpha)
        assert np.max(np.abs(np.diff(vals))) < step_cap


def test_arcsine_rejects_bad_input():
    with pytest.raises(ValueError):
        levy.arcsine_cdf(0.5, 1.5)
    with pytest.raises(ValueError):
        levy.arcsine_cdf(1.2, 0.5)


def test_depth_cdf_boundaries_and_value():
    p = levy.LevyParams(0.5, eps=1.0, M=4.0)
    assert levy.depth_cdf(p, 1.0) == 0.0
    assert levy.depth_cdf(p, 4.0) == 1.0
    expected = (1 - 2 ** -0.5) / (1 - 4 ** -0.5)
    assert levy.depth_cdf(p, 2.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.585786, abs=1e-6)


def test_depth_sampler_matches_cdf():
    p = levy.LevyParams(0.7, eps=0.05, M=50.0)
    g = rng.stream(1)
    draws = levy.sample_depth(p, 10**6, g)
    assert draws.min() >= p.eps and draws.max() <= p.M
    xs = np.sort(draws)
    emp = np.arange(1, xs.size + 1) / xs.size
    ks = np.max(np.abs(emp - levy.depth_cdf(p, xs)))
    assert ks < 0.002


def test_jump_positive_and_mean_matches_quadrature():
    p = levy.LevyParams(0.6, eps=0.1, M=20.0)
    g = rng.stream(2)
    draws = levy.sample_jump(p, 10**6, g)
    assert draws.min() > 0.0
    mean_depth, _ = quad(lambda u: u * p.alpha * u ** (-p.alpha - 1.0) / p.jump_rate,
                         p.eps, p.M)
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - mean_depth) < 3 * se


def test_jump_density_histogram_chi_square():
    p = levy.LevyParams(0.5, eps=0.1, M=10.0)
    g = rng.stream(3)
    draws = levy.sample_jump(p, 10**6, g)
    edges = np.concatenate([np.linspace(0.01, 2.0, 30), np.linspace(2.5, 25.0, 10)])
    counts, _ = np.histogram(draws, bins=edges)
    probs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda v: levy.jump_density(p, v), lo, hi, limit=200)
        probs.append(val)
    probs = np.array(probs)
    keep = probs * draws.size >= 20
    expected = probs[keep] * draws.size
    chi2 = float(np.sum((counts[keep] - expected) ** 2 / expected))
    dof = int(keep.sum()) - 1
    assert chi2 < dof + 5 * math.sqrt(2 * dof)


def test_jump_density_normalized():
    p = levy.LevyParams(0.4, eps=0.2, M=30.0)
    val, _ = quad(lambda v: levy.jump_density(p, v), 1e-9, 2000.0, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_laplace_exponent_basics():
    p = levy.LevyParams(0.5, eps=1e-3, M=1e3)
    assert levy.laplace_exponent(p, 0.0) == 0.0
    assert levy.stable_exponent(0.5, 0.0) == 0.0
    grid = np.linspace(0.1, 5.0, 40)
    vals = np.array([levy.laplace_exponent(p, l) for l in grid])
    assert np.all(np.diff(vals) > 0.0)           # increasing
    assert np.all(np.diff(vals, 2) < 1e-9)       # concave


def test_laplace_exponent_against_nested_quadrature():
    p = levy.LevyParams(0.6, eps=0.05, M=20.0)
    for lam in (0.5, 2.0):
        inner = quad(
            lambda z: p.alpha * z ** (-p.alpha - 2.0)
            * quad(lambda v: (1.0 - math.exp(-lam * v)) * math.exp(-v / z), 0.0, np.inf)[0],
            p.eps, p.M, limit=300)[0]
        assert levy.laplace_exponent(p, lam) == pytest.approx(inner, rel=1e-7)


def test_laplace_exponent_mc_identity():
    # psi(lam) = jump_rate * E[1 - exp(-lam jump)]
    p = levy.LevyParams(0.5, eps=0.2, M=10.0)
    g = rng.stream(4)
    draws = levy.sample_jump(p, 10**6, g)
    for lam in (0.5, 1.0):
        vals = 1.0 - np.exp(-lam * draws)
        mc = p.jump_rate * vals.mean()
        se = p.jump_rate * vals.std() / math.sqrt(vals.size)
        assert abs(mc - levy.laplace_exponent(p, lam)) < 3 * se


def test_truncated_exponent_converges_to_stable():
    # the honest gap at (1e-3, 1e3), alpha = 0.5, lam = 1 is about 4%:
    # lam alpha eps^(1-alpha)/(1-alpha) + M^-alpha of relative deficit
    st = levy.stable_exponent(0.5, 1.0)
    gaps = []
    for eps, M in ((1e-2, 1e2), (1e-3, 1e3), (1e-6, 1e6)):
        tr = levy.laplace_exponent(levy.LevyParams(0.5, eps=eps, M=M), 1.0)
        gaps.append(abs(tr - st) / st)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] < 0.05
    assert gaps[2] < 0.005


def test_stable_exponent_closed_form():
    # alpha = 1/2: Gamma(3/2) Gamma(1/2) = pi/2
    assert levy.stable_exponent(0.5, 1.0) == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert levy.stable_exponent(0.5, 4.0) == pytest.approx(math.pi, rel=1e-12)


def test_range_avoidance_degenerate_point():
    p = levy.LevyParams(0.5, eps=0.1, M=10.0)
    g = rng.stream(5)
    assert levy.range_avoidance(p, 1.0, 1.0, 20000, g) == 1.0


def test_range_avoidance_midpoint_and_asl_grid():
    g = rng.stream(6)
    p = levy.LevyParams(0.5, eps=1e-3, M=1e3)
    est = levy.range_avoidance(p, 1.0, 2.0, 5 * 10**5, g)
    assert abs(est - 0.5) < 0.01
    for ratio in (0.2, 0.4, 0.6, 0.8):
        est = levy.range_avoidance(p, ratio, 1.0, 2 * 10**5, g)
        target = levy.arcsine_cdf(0.5, ratio)
        assert abs(est - target) < 0.012


def test_range_avoidance_monotone_in_a():
    p = levy.LevyParams(0.6, eps=0.05, M=50.0)
    vals = [levy.range_avoidance(p, a, 2.0, 10**5, rng.stream(7))
            for a in (0.5, 1.0, 1.5, 2.0)]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))


def test_levy_params_validation():
    with pytest.raises(ValueError):
        levy.LevyParams(0.5, eps=2.0, M=1.5)
    with pytest.raises(ValueError):
        levy.LevyParams(1.1)
    assert levy.LevyParams(0.5, eps=1.0, M=4.0).jump_rate == pytest.approx(0.5)
