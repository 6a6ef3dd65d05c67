"""Random trap depths, observation scales, and deep-trap geometry.

Depth fields are generated lazily: tau(v) is a pure hash of (seed, label),
so environments over 2^20+ vertices cost nothing to "create" and are
bit-identical across processes.  Two marginal laws are supported: an exact
Pareto tail P[tau >= u] = u^(-alpha) on [1, inf), and exponential-of-Gaussian
depths tau = exp(beta * E) with E ~ Normal(0, n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import graphs
from .rng import hash_uniform, normal_quantile

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class LandscapeSpec:
    """Depth law plus the seed that freezes one environment.

    law "pareto": needs `alpha` in (0, 1).
    law "rem": needs `beta` > 0 and the spin dimension `n`.
    law "const" / "table": deterministic depths for fixtures and oracles.
    """

    law: str
    seed: int
    alpha: float | None = None
    beta: float | None = None
    n: int | None = None
    value: float | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.law == "pareto":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValueError("pareto landscape needs alpha in (0, 1)")
        elif self.law == "rem":
            if self.beta is None or self.beta <= 0.0 or self.n is None or self.n < 1:
                raise ValueError("rem landscape needs beta > 0 and n >= 1")
        elif self.law == "const":
            if self.value is None or self.value <= 0.0:
                raise ValueError("const landscape needs a positive value")
        elif self.law == "table":
            if not self.values or any(v <= 0.0 for v in self.values):
                raise ValueError("table landscape needs positive per-vertex depths")
        else:
            raise ValueError(f"unknown landscape law {self.law!r}")

    def with_seed(self, seed):
        return LandscapeSpec(self.law, int(seed), alpha=self.alpha, beta=self.beta,
                             n=self.n, value=self.value, values=self.values)


def parse_landscape(text, seed=0):
    """Parse config strings like "pareto:alpha=0.5" or "rem:beta=1.3,n=20"."""
    law, _, rest = text.partition(":")
    law = law.strip()
    kv = {}
    if rest.strip():
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError(f"bad landscape parameter {item!r} in {text!r}")
            kv[key.strip()] = float(val)
    if law == "pareto":
        return LandscapeSpec("pareto", seed, alpha=kv.pop("alpha", None))
    if law == "rem":
        n = kv.pop("n", None)
        return LandscapeSpec("rem", seed, beta=kv.pop("beta", None),
                             n=None if n is None else int(n))
    raise ValueError(f"unknown landscape law in {text!r}")


def pareto_from_uniform(u, alpha):
    """Inverse-CDF transform: u in (0,1) -> tau with P[tau >= v] = v^(-alpha)."""
    u = np.asarray(u, dtype=np.float64)
    if alpha == 0.5:  # keep the fast path and the generic one bit-identical
        return 1.0 / (u * u)
    return u ** (-1.0 / alpha)


def tau(spec, labels):
    """Trap depths for one label or an array of labels.

    Deterministic in (spec.seed, label); the marginal law over labels is the
    spec's law.  Returns a float for scalar input, an ndarray otherwise.
    """
    if spec.law == "const":
        out = np.full(np.shape(labels), spec.value, dtype=np.float64)
    elif spec.law == "table":
        out = np.asarray(spec.values, dtype=np.float64)[np.asarray(labels, dtype=np.int64)]
    else:
        u = hash_uniform(spec.seed, labels)
        if spec.law == "pareto":
            out = pareto_from_uniform(u, spec.alpha)
        else:
            out = np.exp(spec.beta * math.sqrt(spec.n) * normal_quantile(u))
    if np.ndim(out) == 0:
        return float(out)
    return out


def tau_table(spec, top):
    """Materialized depth field over all vertices (memoization of `tau`)."""
    count = graphs.vertex_count(top)
    if count > 1 << 24:
        raise ValueError("refusing to materialize more than 2^24 depths")
    return tau(spec, np.arange(count, dtype=np.int64))


def tau_rows(law, row_seeds, labels):
    """Depths for a block of labels whose rows live in different environments.

    `row_seeds` has shape (W,) and broadcasts against `labels` of shape
    (W, K); row i is evaluated in the environment seeded by row_seeds[i].
    Values agree bit-for-bit with `tau` at the same (seed, label).
    """
    if law.law == "const":
        return np.full(labels.shape, law.value, dtype=np.float64)
    if law.law == "table":
        return np.asarray(law.values, dtype=np.float64)[labels]
    seeds = row_seeds[:, None] if np.ndim(labels) == 2 else row_seeds
    u = hash_uniform(seeds, labels)
    if law.law == "pareto":
        return pareto_from_uniform(u, law.alpha)
    return np.exp(law.beta * math.sqrt(law.n) * normal_quantile(u))


@dataclass(frozen=True)
class ScaleSet:
    """Observation scales: time t, depth g, density rho, steps r, Green f,
    walk horizon xi = m * r."""

    t: float
    g: float
    rho: float
    r: float
    f: float
    xi: float
    m: float

    def __post_init__(self):
        for name in ("t", "g", "rho", "r", "f", "xi", "m"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"scale {name} must be positive and finite, got {v}")
        if abs(self.f - self.t / self.g) > 1e-12 * self.f:
            raise ValueError("scale identity f = t/g violated")


def scales(model, *, alpha=None, beta=None, n=None, N=None, gamma=None, m=8.0):
    """Canonical scale set per model.

    complete: rho = N^(-1/2), r = N^(1/2), g = N^(1/(2 alpha)), t = g, f = 1.
    rem: t = g = (alpha beta sqrt(2 pi n))^(-1/alpha) e^(alpha beta^2 n),
         r = 1/rho = e^(alpha^2 beta^2 n / 2), f = 1.
    torus: t = 2^(2n/alpha) n^(1-gamma/alpha), g = t/n, rho = g^(-alpha),
           r = 2^(2n) n^(1-gamma), f = n.
    """
    if m <= 0:
        raise ValueError("horizon multiplier m must be positive")
    if model == "complete":
        if alpha is None or N is None:
            raise ValueError("complete scales need alpha and N")
        g = float(N) ** (1.0 / (2.0 * alpha))
        r = math.sqrt(float(N))
        return ScaleSet(t=g, g=g, rho=1.0 / r, r=r, f=1.0, xi=m * r, m=m)
    if model == "rem":
        if alpha is None or beta is None or n is None:
            raise ValueError("rem scales need alpha, beta, n")
        ex = alpha * beta * beta * n
        ex_r = alpha * alpha * beta * beta * n / 2.0
        if ex > 700.0 or ex_r > 700.0:
            raise ValueError("rem scales overflow float range for these parameters")
        g = (alpha * beta * math.sqrt(2.0 * math.pi * n)) ** (-1.0 / alpha) * math.exp(ex)
        r = math.exp(ex_r)
        return ScaleSet(t=g, g=g, rho=1.0 / r, r=r, f=1.0, xi=m * r, m=m)
    if model == "torus":
        if alpha is None or n is None or gamma is None:
            raise ValueError("torus scales need alpha, n, gamma")
        if 2.0 * n / alpha > 1022.0:
            raise ValueError("torus scales overflow float range for these parameters")
        t = 2.0 ** (2.0 * n / alpha) * float(n) ** (1.0 - gamma / alpha)
        g = 2.0 ** (2.0 * n / alpha) * float(n) ** (-gamma / alpha)
        rho = g ** (-alpha)
        r = 2.0 ** (2.0 * n) * float(n) ** (1.0 - gamma)
        return ScaleSet(t=t, g=g, rho=rho, r=r, f=t / g, xi=m * r, m=m)
    raise ValueError(f"unknown scale model {model!r}")


def override_scales(sc, *, t=None, g=None, rho=None, r=None, m=None):
    """Scale set with selected entries replaced (sensitivity studies).

    The derived entries stay consistent: f is recomputed as t/g and the
    horizon as m * r.
    """
    t = sc.t if t is None else float(t)
    g = sc.g if g is None else float(g)
    rho = sc.rho if rho is None else float(rho)
    r = sc.r if r is None else float(r)
    m = sc.m if m is None else float(m)
    return ScaleSet(t=t, g=g, rho=rho, r=r, f=t / g, xi=m * r, m=m)


def aging_window(model, *, alpha=None, beta=None, gamma=None):
    """Report whether parameters sit in the window where aging is expected.

    rem: 3/4 < alpha^2 beta^2 / (2 log 2) < 1.  torus: gamma in (0, 1/6).
    """
    if model == "rem":
        x = alpha * alpha * beta * beta / (2.0 * _LOG2)
        return {"statistic": x, "in_window": 0.75 < x < 1.0}
    if model == "torus":
        return {"statistic": gamma, "in_window": 0.0 < gamma < 1.0 / 6.0}
    if model == "complete":
        return {"statistic": alpha, "in_window": 0.0 < alpha < 1.0}
    raise ValueError(f"unknown scale model {model!r}")


@dataclass(frozen=True)
class TrapWindow:
    """Depth window [eps*g, M*g) that defines the deep traps."""

    eps: float
    M: float

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0 < self.M):
            raise ValueError("trap window needs 0 < eps < 1 < M")


def classify(tau_value, window, g):
    """shallow: tau < eps*g; deep: eps*g <= tau < M*g; very_deep: tau >= M*g."""
    if g <= 0.0:
        raise ValueError("depth scale g must be positive")
    if tau_value < window.eps * g:
        return "shallow"
    if tau_value < window.M * g:
        return "deep"
    return "very_deep"


def deep_mask(tau_values, window, g):
    t = np.asarray(tau_values)
    return (t >= window.eps * g) & (t < window.M * g)


def rate_function(x):
    """I(x) = x log x + (1-x) log(1-x) + log 2, with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("rate function argument must lie in [0, 1]")
    acc = _LOG2
    if x > 0.0:
        acc += x * math.log(x)
    if x < 1.0:
        acc += (1.0 - x) * math.log(1.0 - x)
    return acc


def rate_function_inverse(level, tol=1e-12):
    """The unique omega in [0, 1/2] with I(omega) = level, by bisection.

    I decreases from log 2 at 0 to 0 at 1/2, so `level` must lie in
    (0, log 2].
    """
    if not (0.0 < level <= _LOG2):
        raise ValueError("level must lie in (0, log 2]")
    lo, hi = 0.0, 0.5  # I(lo) >= level >= I(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rate_function(mid) >= level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MinDistanceAudit:
    min_distance: float
    passed: bool


def min_distance_audit(top, cloud, bound):
    """Exact pairwise minimum distance of a point cloud against a bound.

    Fewer than two points makes the condition vacuous (min = inf, pass).
    """
    cloud = [int(v) for v in cloud]
    if len(cloud) < 2:
        return MinDistanceAudit(math.inf, True)
    best = math.inf
    arr = np.asarray(cloud, dtype=np.int64)
    for i in range(len(cloud) - 1):
        d = graphs.distance_array(top, cloud[i], arr[i + 1:])
        m = int(d.min())
        if m < best:
            best = m
    return MinDistanceAudit(float(best), best >= bound)


def sample_cloud(top, density, rng):
    """Site-percolation sample: each vertex kept with probability `density`.

    The count is drawn as the integer neighbor pair of the expected size
    (randomized rounding), which keeps the mean density exact while pinning
    the size to its almost-sure concentration value; labels are then uniform
    without replacement.  Suitable for densities with expected size well
    below the vertex count.
    """
    count = graphs.vertex_count(top)
    expected = density * count
    if expected > 1e7:
        raise ValueError("cloud too dense to sample by label list")
    k = int(math.floor(expected))
    if rng.random() < expected - k:
        k += 1
    labels = set()
    while len(labels) < k:
        need = k - len(labels)
        for v in rng.integers(0, count, size=max(need, 16), dtype=np.int64):
            labels.add(int(v))
            if len(labels) == k:
                break
    return np.array(sorted(labels), dtype=np.int64)


def deep_trap_set(spec, top, window, g, max_vertices=1 << 24):
    """Labels of all deep traps, by scanning the (small) vertex range."""
    count = graphs.vertex_count(top)
    if count > max_vertices:
        raise ValueError("vertex range too large to scan for deep traps")
    depths = tau(spec, np.arange(count, dtype=np.int64))
    return np.nonzero(deep_mask(depths, window, g))[0].astype(np.int64)


def rem_tail_exact(alpha, beta, n, u):
    """r(n) * P[tau >= u * g(n)] for the exponential-of-Gaussian law, exactly.

    P[tau >= x] = P[E >= log(x)/beta] with E ~ Normal(0, n), evaluated with
    erfc; the limit as n grows is u^(-alpha).
    """
    sc = scales("rem", alpha=alpha, beta=beta, n=n)
    x = math.log(u * sc.g) / (beta * math.sqrt(n))
    return sc.r * 0.5 * erfc(x / math.sqrt(2.0))


def rem_tail_check(alpha, beta, n, samples, seed=0, u_values=(1.0, 2.0, 4.0)):
    """Empirical and exact scaled tails r(n) * P[tau >= u g(n)].

    Returns {u: (empirical, exact, target u^(-alpha))}.  `samples` lazy draws
    are taken from a fresh environment keyed by `seed`.
    """
    if samples < 10**5:
        raise ValueError("tail check needs at least 1e5 samples")
    sc = scales("rem", alpha=alpha, beta=beta, n=n)
    spec = LandscapeSpec("rem", seed, beta=beta, n=n)
    draws = tau(spec, np.arange(samples, dtype=np.int64))
    out = {}
    for u in u_values:
        emp = sc.r * float(np.mean(draws >= u * sc.g))
        out[u] = (emp, rem_tail_exact(alpha, beta, n, u), u ** (-alpha))
    return out
