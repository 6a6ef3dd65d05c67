import math

import numpy as np
import pytest

from trapsim import graphs, landscape, rng


def test_pareto_inverse_cdf_example():
    # u = 0.25 at alpha = 0.5 inverts to 0.25^(-2) = 16
    assert landscape.pareto_from_uniform(0.25, 0.5) == pytest.approx(16.0, abs=1e-12)


def test_tau_deterministic_and_vector_consistent():
    spec = landscape.LandscapeSpec("pareto", 99, alpha=0.7)
    arr = landscape.tau(spec, np.arange(50))
    again = landscape.tau(spec, np.arange(50))
    assert np.array_equal(arr, again)
    for i in (0, 7, 49):
        assert landscape.tau(spec, i) == arr[i]


def test_pareto_tail_within_binomial_ci():
    spec = landscape.LandscapeSpec("pareto", 5, alpha=0.8)
    draws = landscape.tau(spec, np.arange(10**6))
    assert draws.min() >= 1.0
    for u in (2.0, 10.0, 100.0):
        p = u ** -0.8
        emp = float(np.mean(draws >= u))
        sigma = math.sqrt(p * (1 - p) / draws.size)
        assert abs(emp - p) < 4 * sigma


def test_rem_energies_standard_normal():
    n, beta = 16, 1.2
    spec = landscape.LandscapeSpec("rem", 11, beta=beta, n=n)
    draws = landscape.tau(spec, np.arange(2 * 10**5))
    z = np.log(draws) / (beta * math.sqrt(n))
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.std() - 1.0) < 4 / math.sqrt(z.size)


def test_tau_rows_matches_per_seed_tau():
    law = landscape.LandscapeSpec("pareto", 0, alpha=0.6)
    seeds = np.array([3, 1 << 60, 7], dtype=np.uint64)
    labels = np.arange(30, dtype=np.int64).reshape(3, 10)
    rows = landscape.tau_rows(law, seeds, labels)
    for i, s in enumerate(seeds):
        assert np.array_equal(rows[i], landscape.tau(law.with_seed(int(s)), labels[i]))


def test_const_and_table_laws():
    c = landscape.LandscapeSpec("const", 0, value=2.5)
    assert landscape.tau(c, 17) == 2.5
    t = landscape.LandscapeSpec("table", 0, values=(1.0, 4.0, 9.0))
    assert landscape.tau(t, np.array([2, 0])).tolist() == [9.0, 1.0]


def test_parse_landscape():
    p = landscape.parse_landscape("pareto:alpha=0.5", seed=3)
    assert p.law == "pareto" and p.alpha == 0.5 and p.seed == 3
    r = landscape.parse_landscape("rem:beta=1.25,n=20")
    assert r.law == "rem" and r.beta == 1.25 and r.n == 20
    with pytest.raises(ValueError):
        landscape.parse_landscape("pareto:alpha=1.5")
    with pytest.raises(ValueError):
        landscape.parse_landscape("gumbel:a=1")


def test_scale_identities_all_models():
    combos = [
        landscape.scales("complete", alpha=0.6, N=10**5),
        landscape.scales("rem", alpha=0.8, beta=1.3165, n=20),
        landscape.scales("torus", alpha=0.5, n=8, gamma=0.1),
    ]
    for sc in combos:
        assert sc.f == pytest.approx(sc.t / sc.g, rel=1e-12)
        assert sc.xi == pytest.approx(sc.m * sc.r, rel=1e-12)
    torus = combos[2]
    assert torus.rho * torus.r == pytest.approx(torus.f, rel=1e-12)
    assert torus.f == pytest.approx(8.0, rel=1e-12)


def test_rem_step_scale_plugin():
    # alpha^2 beta^2 n / 2 = 16 log 2 makes the step scale exactly 2^16
    alpha = 0.8
    beta = math.sqrt(1.6 * math.log(2.0)) / alpha
    sc = landscape.scales("rem", alpha=alpha, beta=beta, n=20)
    assert sc.r == pytest.approx(65536.0, rel=1e-9)
    assert sc.rho == pytest.approx(1.0 / 65536.0, rel=1e-9)


def test_scales_reject_overflow():
    with pytest.raises(ValueError):
        landscape.scales("rem", alpha=0.9, beta=3.0, n=500)
    with pytest.raises(ValueError):
        landscape.scales("torus", alpha=0.01, n=20, gamma=0.1)


def test_aging_window():
    assert landscape.aging_window("rem", alpha=0.8, beta=1.3165)["in_window"]
    assert not landscape.aging_window("rem", alpha=0.5, beta=1.0)["in_window"]
    assert landscape.aging_window("torus", gamma=0.1)["in_window"]
    assert not landscape.aging_window("torus", gamma=0.3)["in_window"]


def test_classification_boundaries():
    w = landscape.TrapWindow(eps=0.1, M=8.0)
    g = 100.0
    assert landscape.classify(0.1 * g, w, g) == "deep"
    assert landscape.classify(8.0 * g, w, g) == "very_deep"
    assert landscape.classify(1.0, w, 10**6) == "shallow"
    assert landscape.classify(0.1 * g - 1e-9, w, g) == "shallow"
    mask = landscape.deep_mask(np.array([5.0, 10.0, 800.0, 801.0]), w, g)
    assert mask.tolist() == [False, True, False, False]


def test_rate_function_values_and_convexity():
    log2 = math.log(2.0)
    assert landscape.rate_function(0.5) == pytest.approx(0.0, abs=1e-15)
    assert landscape.rate_function(0.0) == pytest.approx(log2, abs=1e-15)
    assert landscape.rate_function(1.0) == pytest.approx(log2, abs=1e-15)
    xs = np.linspace(0.0, 1.0, 101)
    vals = [landscape.rate_function(x) for x in xs]
    second = np.diff(vals, 2)
    assert np.all(second > -1e-12)


def test_rate_function_inverse_round_trip():
    log2 = math.log(2.0)
    for omega in np.linspace(0.01, 0.49, 25):
        level = landscape.rate_function(float(omega))
        back = landscape.rate_function_inverse(level)
        assert abs(back - omega) < 1e-10
    gamma = 0.9
    om = landscape.rate_function_inverse((2 * gamma - 1) * log2)
    assert abs(landscape.rate_function(om) - 0.8 * log2) < 1e-10
    with pytest.raises(ValueError):
        landscape.rate_function_inverse(0.0)
    with pytest.raises(ValueError):
        landscape.rate_function_inverse(log2 + 0.1)


def test_min_distance_audit():
    top = graphs.Topology("hypercube", 12)
    assert landscape.min_distance_audit(top, [5], 100).passed
    audit = landscape.min_distance_audit(top, [0, 7], 2)
    assert audit.min_distance == 3 and audit.passed
    assert not landscape.min_distance_audit(top, [0, 1, 7], 2).passed


def test_cloud_minimal_distance_monte_carlo():
    # sparse clouds keep pairwise distance above (omega' - delta) n in almost
    # every seeded trial; delta = 0.1 keeps the finite-n violation rate
    # (close pairs appear with probability ~1e-3 per cloud) inside 1/100
    n, gamma, delta = 20, 0.85, 0.1
    top = graphs.Topology("hypercube", n)
    omega_p = landscape.rate_function_inverse(2 * (1 - gamma) * math.log(2.0))
    bound = (omega_p - delta) * n
    density = 2.0 ** (-gamma * n)
    passes = 0
    for trial in range(100):
        cloud = landscape.sample_cloud(top, density, rng.stream(12, trial))
        if landscape.min_distance_audit(top, cloud, bound).passed:
            passes += 1
    assert passes >= 99


def test_sample_cloud_size_and_uniqueness():
    top = graphs.Topology("torus2d", 6)
    expected = 12.4
    density = expected / graphs.vertex_count(top)
    sizes = []
    for trial in range(60):
        cloud = landscape.sample_cloud(top, density, rng.stream(1, trial))
        assert len(set(cloud.tolist())) == cloud.size
        assert cloud.min() >= 0 and cloud.max() < graphs.vertex_count(top)
        sizes.append(cloud.size)
        assert cloud.size in (12, 13)
    assert abs(np.mean(sizes) - expected) < 4 * 0.5 / math.sqrt(60) + 0.2


def test_condition_a_exact_for_pareto_scales():
    # rho^-1 P[tau >= u g] equals u^-alpha identically when the tail is an
    # exact power law and rho = g^-alpha
    for model, kw in (("torus", dict(alpha=0.5, n=8, gamma=0.1)),
                      ("complete", dict(alpha=0.6, N=10**5))):
        sc = landscape.scales(model, **kw)
        alpha = kw["alpha"]
        for u in (1.0, 2.0, 4.0):
            lhs = (u * sc.g) ** (-alpha) / sc.rho
            assert lhs == pytest.approx(u ** (-alpha), rel=1e-12)


def test_rem_tail_check_monotone_and_consistent():
    alpha = 0.8
    beta = math.sqrt(1.6 * math.log(2.0)) / alpha
    exact2 = []
    for n in (12, 16, 20):
        out = landscape.rem_tail_check(alpha, beta, n, samples=2 * 10**5, seed=4)
        exact2.append(out[2.0][1])
    # exact scaled tail approaches 2^-0.8 monotonely from below
    target = 2.0 ** -0.8
    assert exact2[0] < exact2[1] < exact2[2] < target
    # empirical agrees with exact at n = 12 where counts are meaningful
    out12 = landscape.rem_tail_check(alpha, beta, 12, samples=10**6, seed=4)
    emp, exact, _ = out12[2.0]
    sc = landscape.scales("rem", alpha=alpha, beta=beta, n=12)
    p = exact / sc.r
    sigma = sc.r * math.sqrt(p * (1 - p) / 10**6)
    assert abs(emp - exact) < 4 * sigma


def test_deep_trap_set_matches_classify():
    top = graphs.Topology("torus2d", 4)
    spec = landscape.LandscapeSpec("pareto", 8, alpha=0.5)
    w = landscape.TrapWindow(eps=0.5, M=4.0)
    g = 30.0
    deep = landscape.deep_trap_set(spec, top, w, g)
    depths = landscape.tau(spec, np.arange(graphs.vertex_count(top)))
    for v in range(graphs.vertex_count(top)):
        expect = landscape.classify(float(depths[v]), w, g) == "deep"
        assert (v in set(deep.tolist())) == expect
