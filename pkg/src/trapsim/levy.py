"""Limit objects for heavy-tailed clocks: the generalized arcsine law, the
truncated jump law, its Levy measure, and range-avoidance probabilities.

The truncation window [eps, M] mirrors the deep-trap window; as eps -> 0 and
M -> inf every object here converges to its alpha-stable counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc, gamma as gamma_fn, gammainc


def arcsine_cdf(alpha, z):
    """Generalized arcsine distribution function with parameter alpha.

    (sin(alpha pi) / pi) * Integral_0^z u^(alpha-1) (1-u)^(-alpha) du,
    which is the regularized incomplete beta I_z(alpha, 1-alpha).  Also the
    probability that the range of an alpha-stable subordinator misses an
    interval [a, b] with a/b = z.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    zarr = np.asarray(z, dtype=np.float64)
    if np.any((zarr < 0.0) | (zarr > 1.0)):
        raise ValueError("z must lie in [0, 1]")
    out = betainc(alpha, 1.0 - alpha, zarr)
    if out.ndim == 0:
        return float(out)
    return out


def arcsine_cdf_quadrature(alpha, z, tol=1e-12):
    """Adaptive-quadrature evaluation of the arcsine integral (oracle route).

    Integrates the density with its endpoint singularities split out; slower
    than `arcsine_cdf` but entirely independent of the beta-function path.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return 1.0
    val, _ = quad(lambda u: u ** (alpha - 1.0) * (1.0 - u) ** (-alpha), 0.0, z,
                  epsabs=tol, epsrel=tol, limit=400,
                  points=[0.0, z] if z < 1.0 else [0.0])
    return math.sin(alpha * math.pi) / math.pi * val


@dataclass(frozen=True)
class LevyParams:
    """Tail exponent alpha with the truncation window [eps, M]."""

    alpha: float
    eps: float = 1e-3
    M: float = 1e3

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        # eps = 1 is admitted so closed-form spot checks at round windows work
        if not (0.0 < self.eps < self.M and self.M > 1.0):
            raise ValueError("truncation window needs 0 < eps < M, M > 1")

    @property
    def jump_rate(self):
        """Total mass eps^(-alpha) - M^(-alpha) of the truncated Levy measure."""
        return self.eps ** (-self.alpha) - self.M ** (-self.alpha)


def depth_cdf(params, u):
    """CDF of the limiting visited-depth law on [eps, M]:
    (eps^(-alpha) - u^(-alpha)) / (eps^(-alpha) - M^(-alpha))."""
    u = np.asarray(u, dtype=np.float64)
    u = np.clip(u, params.eps, params.M)
    out = (params.eps ** (-params.alpha) - u ** (-params.alpha)) / params.jump_rate
    if out.ndim == 0:
        return float(out)
    return out


def sample_depth(params, size, rng):
    """Inverse-CDF sampler for the truncated depth law."""
    u = rng.random(size)
    return (params.eps ** (-params.alpha) - u * params.jump_rate) ** (-1.0 / params.alpha)


def sample_jump(params, size, rng):
    """Jump sizes of the truncated clock limit: Exp(1) times a depth draw."""
    return rng.standard_exponential(size) * sample_depth(params, size, rng)


def jump_density(params, v):
    """Probability density of a jump, nu(v)/jump_rate.

    The depth mixture integrates in closed form to regularized lower
    incomplete gammas:
    alpha Gamma(1+alpha) v^(-1-alpha) [P(1+alpha, v/eps) - P(1+alpha, v/M)].
    """
    v = np.asarray(v, dtype=np.float64)
    a = params.alpha
    dens = (a * gamma_fn(1.0 + a) * v ** (-1.0 - a)
            * (gammainc(1.0 + a, v / params.eps) - gammainc(1.0 + a, v / params.M)))
    return dens / params.jump_rate


def laplace_exponent(params, lam):
    """psi(lam) = Integral (1 - e^(-lam v)) nu(dv) over the truncated measure.

    The v-integral is exact (Integral_0^inf (1-e^(-lam v)) e^(-v/z)/z dv
    = lam z / (1 + lam z)), leaving one smooth depth integral evaluated
    adaptively to relative accuracy well below 1e-8.
    """
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    if lam == 0.0:
        return 0.0
    a = params.alpha
    # Integrate in log depth: the window can span many decades, and the
    # integrand has a knee where lam * z = 1.
    lo, hi = math.log(params.eps), math.log(params.M)
    knee = -math.log(lam)
    pts = [knee] if lo < knee < hi else None
    val, _ = quad(lambda x: a * math.exp((1.0 - a) * x) * lam / (1.0 + lam * math.exp(x)),
                  lo, hi, epsabs=0.0, epsrel=1e-11, limit=400, points=pts)
    return val


def stable_exponent(alpha, lam):
    """Laplace exponent Gamma(1+alpha) Gamma(1-alpha) lam^alpha of the
    untruncated alpha-stable subordinator (Levy density alpha Gamma(1+alpha)
    v^(-1-alpha))."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    return gamma_fn(1.0 + alpha) * gamma_fn(1.0 - alpha) * lam ** alpha


def range_avoidance(params, a, b, reps, rng, batch=32):
    """Fraction of replicas whose jump partial sums miss [a, b].

    The subordinator's range is the set of its partial-sum values, so the
    avoidance event depends only on the jump sequence: draw jumps until the
    running sum first reaches a, and check whether it overshoots past b.
    As eps -> 0, M -> inf this tends to arcsine_cdf(alpha, a/b).
    """
    if not 0.0 < a <= b:
        raise ValueError("need 0 < a <= b")
    reps = int(reps)
    totals = np.zeros(reps)
    avoided = np.zeros(reps, dtype=bool)
    active = np.arange(reps)
    while active.size:
        jumps = sample_jump(params, (active.size, batch), rng)
        sums = totals[active, None] + np.cumsum(jumps, axis=1)
        crossed = sums >= a
        has_crossed = crossed.any(axis=1)
        idx = np.argmax(crossed, axis=1)
        first = sums[np.arange(active.size), idx]
        done = active[has_crossed]
        avoided[done] = first[has_crossed] > b
        totals[active] = sums[:, -1]
        active = active[~has_crossed]
    return float(np.mean(avoided))
