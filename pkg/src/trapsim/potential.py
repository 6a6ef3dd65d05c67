"""Exact potential theory: hypercube hitting-time transforms by Fourier sums,
Matthews' gamma-function sandwich, torus Green functions by eigenvalue sums,
and a dense linear-algebra oracle for small graphs.

The hypercube transforms are alternating sums whose terms are exponentially
larger than the result, so Krawtchouk coefficients are carried as exact
integers and the weighted sums are accumulated in extended precision with an
explicit cancellation budget.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm, solve

from . import graphs

_LD = np.longdouble
_LD_EPS = float(np.finfo(np.longdouble).eps)


def krawtchouk(n, i, k):
    """Binary Krawtchouk value K_i(k; n) = sum_j (-1)^j C(k,j) C(n-k,i-j).

    Exact integer, by the three-term recurrence in i.
    """
    if not (0 <= i <= n and 0 <= k <= n):
        raise ValueError("need 0 <= i, k <= n")
    return krawtchouk_table(n, k)[i]


def krawtchouk_table(n, k):
    """All K_i(k; n) for i = 0..n as exact Python integers."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    vals = [0] * (n + 1)
    vals[0] = 1
    if n >= 1:
        vals[1] = n - 2 * k
    for i in range(1, n):
        num = (n - 2 * k) * vals[i] - (n - i + 1) * vals[i - 1]
        q, rem = divmod(num, i + 1)
        if rem:
            raise AssertionError("Krawtchouk recurrence lost integrality")
        vals[i + 1] = q
    return vals


def _hypercube_weights(n, s, gamma):
    """Spectral weights w_i = 1 / (1 - e^(-lam) (1 - 2i/n)), lam = s 2^(-gamma n).

    Returned in extended precision; the i = 0 weight carries the 1/lam
    blow-up that dominates both sums.
    """
    lam = _LD(s) * np.exp2(_LD(-gamma) * _LD(n))
    i = np.arange(n + 1, dtype=np.int64)
    one_minus_q = -np.expm1(-lam)  # 1 - e^(-lam), stable for tiny lam
    q = np.exp(-lam)
    denom = one_minus_q + q * (_LD(2.0) * i / _LD(n))
    return _LD(1.0) / denom


def hypercube_hitting_transform(n, k, s, gamma, rel_budget=1e-9):
    """E[e^(-s 2^(-gamma n) H)] for the walk started at Hamming distance k
    from the target vertex of an n-hypercube; H counts steps to the target.

    Ratio of the Krawtchouk-weighted spectral sum to the binomial-weighted
    one.  Raises when alternating cancellation eats past `rel_budget` of
    relative accuracy (k near n/2 with n beyond ~50).
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 1.0
    w = _hypercube_weights(n, s, gamma)
    kraw = np.array([_LD(v) for v in krawtchouk_table(n, k)])
    binom = np.array([_LD(math.comb(n, i)) for i in range(n + 1)])
    num_terms = kraw * w
    num = float(num_terms.sum())
    den = float((binom * w).sum())
    abs_err = _LD_EPS * float(np.abs(num_terms).sum()) * (n + 1)
    if abs_err > rel_budget * abs(num):
        raise ValueError(
            f"cancellation too severe at n={n}, k={k}: estimated relative error "
            f"{abs_err / abs(num):.2e} exceeds budget {rel_budget:.1e}")
    return num / den


def matthews_bounds(f_plus, f_minus, set_size):
    """Gamma-ratio sandwich for the transform of the hitting time of a set,
    from the best/worst point-to-point transforms over the set.

    Returns (lower, upper) bounds for E[e^(-s H(A minus start))] given
    f_minus <= f_plus, the extreme pairwise transforms at the same s, and
    |A| = set_size >= 2.
    """
    if not (0.0 < f_minus <= f_plus < 1.0):
        raise ValueError("need 0 < f_minus <= f_plus < 1")
    if set_size < 2:
        raise ValueError("set_size must be at least 2")
    lg = math.lgamma
    a = set_size
    ip, im = 1.0 / f_plus, 1.0 / f_minus
    base = lg(a) - lg(a - 1.0)
    lower = math.exp(lg(im) - lg(ip) + base + lg(a - 2.0 + ip) - lg(a - 1.0 + im))
    upper = math.exp(lg(ip) - lg(im) + base + lg(a - 2.0 + im) - lg(a - 1.0 + ip))
    return lower, upper


def harmonic_number(n):
    return math.fsum(1.0 / i for i in range(1, n + 1))


def alternating_harmonic(n, method="integral"):
    """sum_{i=1}^n (-1)^i C(n,i) / i, which equals -(1 + 1/2 + ... + 1/n).

    method "integral" evaluates Integral_0^1 (v^n - 1)/(1 - v) dv by
    adaptive quadrature (usable to n ~ 10^3 and beyond); method "direct"
    computes the alternating sum in exact rational arithmetic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "direct":
        acc = Fraction(0)
        c = 1
        for i in range(1, n + 1):
            c = c * (n - i + 1) // i  # C(n, i)
            acc += Fraction((-1) ** i * c, i)
        return float(acc)
    if method != "integral":
        raise ValueError("method must be 'integral' or 'direct'")

    def integrand(v):
        if v >= 1.0:
            return -float(n)
        return (v**n - 1.0) / (1.0 - v)

    # The integrand climbs from -1 to -n inside a 1/n neighborhood of 1;
    # the breakpoint steers the subdivision there.
    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=800,
                  points=[1.0 - 1.0 / max(n, 2)])
    return val


# ---------------------------------------------------------------------------
# Torus Green functions.

def _torus_multiplier(n, s, gamma):
    """Spectral multiplier M(theta) of the smoothed, killed Green kernel."""
    L = 1 << n
    h = 4.0**n * float(n) ** (1.0 - gamma)
    q = math.exp(-s / h)
    one_minus_q = -math.expm1(-s / h)
    ks = np.arange(L)
    # 1 - cos(2 pi k / L) = 2 sin^2(pi k / L), exact at the parity mode
    vers = 2.0 * np.sin(np.pi * ks / L) ** 2
    gap = 0.5 * (vers[:, None] + vers[None, :])  # = 1 - lambda(theta)
    smooth = 1.0 - 0.5 * gap                     # = (1 + lambda)/2
    return smooth / (one_minus_q + q * gap)


def torus_green_field(n, s, gamma):
    """G(x; s) for every vertex of the 2^n x 2^n torus, as an (L, L) array.

    G(x; s) = L^-2 sum_theta cos(2 pi theta . x / L) (1+lambda)/2
              / (1 - e^(-s/h) lambda),
    lambda(theta) = (cos(2 pi theta_1/L) + cos(2 pi theta_2/L))/2,
    h = 2^(2n) n^(1-gamma).  Evaluated for all x at once by inverse FFT.
    """
    if not 1 <= n <= 12:
        raise ValueError("torus Green field supports 1 <= n <= 12")
    if s <= 0.0:
        raise ValueError("s must be positive")
    mult = _torus_multiplier(n, s, gamma)
    field = np.fft.ifft2(mult)
    return np.ascontiguousarray(field.real)


def torus_green(n, x, s, gamma):
    """Single-point eigenvalue sum for G(x; s); x = (x1, x2) lattice point."""
    if not 1 <= n <= 12:
        raise ValueError("torus Green supports 1 <= n <= 12")
    if s <= 0.0:
        raise ValueError("s must be positive")
    L = 1 << n
    x1, x2 = int(x[0]) % L, int(x[1]) % L
    mult = _torus_multiplier(n, s, gamma)
    ks = np.arange(L)
    phase = np.cos(2.0 * np.pi * ((ks[:, None] * x1 + ks[None, :] * x2) % L) / L)
    return float((mult * phase).sum() / L**2)


def torus_green_pathsum(n, x, s, gamma, tol=1e-12):
    """Direct path-sum oracle: sum_k e^(-s k / h) q_k(0, x) with the smoothed
    step kernel q_k = (p_k + p_{k+1})/2, truncated once the geometric tail
    drops below `tol`.  Only sensible for small tori.
    """
    if n > 5:
        raise ValueError("path-sum oracle is for L <= 32")
    L = 1 << n
    h = 4.0**n * float(n) ** (1.0 - gamma)
    decay = math.exp(-s / h)
    x1, x2 = int(x[0]) % L, int(x[1]) % L

    p = np.zeros((L, L))
    p[0, 0] = 1.0

    def step_kernel(arr):
        return 0.25 * (np.roll(arr, 1, axis=0) + np.roll(arr, -1, axis=0)
                       + np.roll(arr, 1, axis=1) + np.roll(arr, -1, axis=1))

    total = 0.0
    weight = 1.0
    p_next = step_kernel(p)
    k = 0
    while weight / (1.0 - decay) > tol:
        total += weight * 0.5 * (p[x1, x2] + p_next[x1, x2])
        p, p_next = p_next, step_kernel(p_next)
        weight *= decay
        k += 1
        if k > 10**7:
            raise RuntimeError("path-sum oracle failed to converge")
    return total


def torus_distance_grid(n):
    """Wraparound L1 distance from the origin for every vertex, (L, L)."""
    L = 1 << n
    ks = np.arange(L)
    axis = np.minimum(ks, L - ks)
    return axis[:, None] + axis[None, :]


def torus_hitting_profile(n, gamma, s, kappa=None, cloud_size=None):
    """Extreme Green ratios over far vertices and the implied hitting law.

    f_plus / f_minus are sup / inf of G(x; s)/G(0; s) over x at distance at
    least 2^n n^(-kappa); they bound the pairwise hitting transforms of any
    cloud obeying that minimal distance.  When `cloud_size` >= 2 the
    Matthews sandwich for the cloud hitting transform is included.  The
    per-point scale estimates kr_plus / kr_minus are s n^gamma / (1/f - 1),
    whose large-n limit is pi/(2 log 2).
    """
    if kappa is None:
        kappa = 2.0 + gamma
    field = torus_green_field(n, s, gamma)
    g0 = field[0, 0]
    r_min = 2.0**n * float(n) ** (-kappa)
    mask = torus_distance_grid(n) >= r_min
    if not mask.any():
        raise ValueError("minimal-distance shell is empty; decrease kappa")
    ratios = field[mask] / g0
    f_plus = float(ratios.max())
    f_minus = float(ratios.min())
    out = {
        "f_plus": f_plus,
        "f_minus": f_minus,
        "kr_plus": s * n**gamma / (1.0 / f_plus - 1.0),
        "kr_minus": s * n**gamma / (1.0 / f_minus - 1.0),
        "green_origin": float(g0),
        "r_min": r_min,
    }
    if cloud_size is not None and cloud_size >= 2:
        out["sandwich"] = matthews_bounds(f_plus, f_minus, float(cloud_size))
    else:
        out["sandwich"] = None
    return out


def fit_torus_kr(n_values, gamma, s_grid, kappa=None):
    """Scale constant of the torus hitting law from an n-sweep.

    For each n, (1/f_minus(s) - 1) * n^(1-gamma) / s estimates
    K^-1 n + O(1); regressing on n across `n_values` cancels the O(1)
    offset and returns 1/slope, the fitted constant whose limit is
    pi / (2 log 2).
    """
    ys = []
    for n in n_values:
        vals = []
        for s in s_grid:
            prof = torus_hitting_profile(n, gamma, s, kappa=kappa)
            vals.append((1.0 / prof["f_minus"] - 1.0) * float(n) ** (1.0 - gamma) / s)
        ys.append(np.mean(vals))
    slope = np.polyfit(np.asarray(n_values, dtype=float), np.asarray(ys), 1)[0]
    return {"kr": 1.0 / slope, "per_n": dict(zip(n_values, ys))}


# ---------------------------------------------------------------------------
# Dense oracle for graphs small enough to enumerate.

class DenseOracle:
    """Brute-force answers on graphs with at most 1024 vertices.

    Builds the full walk matrix and the continuous-time generator for a
    fixed depth field, then answers hitting-transform, Green-function and
    two-time questions by dense linear algebra.
    """

    def __init__(self, top, tau_field):
        count = graphs.vertex_count(top)
        if count > 1024:
            raise ValueError("dense oracle supports at most 1024 vertices")
        tau_field = np.asarray(tau_field, dtype=np.float64)
        if tau_field.shape != (count,) or np.any(tau_field <= 0.0):
            raise ValueError("tau_field must hold a positive depth per vertex")
        self.top = top
        self.count = count
        self.tau = tau_field
        P = np.zeros((count, count))
        for v in range(count):
            for w in graphs.neighbors(top, v):
                P[v, w] += 1.0 / graphs.degree(top)
        self.P = P

    def generator(self):
        """Continuous-time generator: rate 1/(d_x tau_x) along each edge."""
        return (self.P - np.eye(self.count)) / self.tau[:, None]

    def hitting_transform(self, targets, lam):
        """phi(x) = E_x[e^(-lam H)], H = first step index >= 0 in `targets`."""
        targets = sorted({int(t) for t in targets})
        if not targets:
            raise ValueError("targets must be nonempty")
        phi = np.zeros(self.count)
        phi[targets] = 1.0
        free = np.array([v for v in range(self.count) if v not in set(targets)])
        if free.size:
            q = math.exp(-lam)
            A = np.eye(free.size) - q * self.P[np.ix_(free, free)]
            b = q * self.P[np.ix_(free, np.array(targets))].sum(axis=1) if len(targets) == 1 \
                else q * self.P[np.ix_(free, np.array(targets))] @ phi[targets]
            phi[free] = solve(A, b)
        return phi

    def green(self, absorbing):
        """Green matrix G(x, y): expected visits to y strictly before hitting
        `absorbing`, for x, y outside the absorbing set.

        Returns (free_labels, G) with G[i, j] indexed by free_labels.
        """
        absorbing = {int(a) for a in absorbing}
        free = np.array([v for v in range(self.count) if v not in absorbing])
        A = np.eye(free.size) - self.P[np.ix_(free, free)]
        return free, np.linalg.inv(A)

    def green_at(self, absorbing, x, y):
        free, G = self.green(absorbing)
        ix = {int(v): i for i, v in enumerate(free)}
        return G[ix[int(x)], ix[int(y)]]

    def mean_hitting(self, targets):
        """E_x[H(targets)] for every x, by the Green row sums."""
        free, G = self.green(targets)
        out = np.zeros(self.count)
        out[free] = G.sum(axis=1)
        return out

    def escape_probability(self, x, targets):
        """P_x[hit `targets` minus x strictly before returning to x]."""
        x = int(x)
        targets = {int(t) for t in targets} - {x}
        if not targets:
            return 0.0
        hit = np.zeros(self.count)
        for t in targets:
            hit[t] = 1.0
        free = np.array([v for v in range(self.count) if v != x and v not in targets])
        if free.size:
            A = np.eye(free.size) - self.P[np.ix_(free, free)]
            b = self.P[np.ix_(free, np.array(sorted(targets)))].sum(axis=1)
            hit[free] = solve(A, b)
        hit[x] = 0.0
        return float(self.P[x] @ hit)

    def occupation(self, start, t):
        """Distribution of the continuous-time chain at time t from `start`."""
        Q = self.generator()
        row = np.zeros(self.count)
        row[int(start)] = 1.0
        return row @ expm(Q * t)

    def two_time_same_prob(self, t_w, t2, start=0):
        """P[X(t2) = X(t_w)] for the chain from `start`, exactly."""
        if not 0.0 <= t_w <= t2:
            raise ValueError("need 0 <= t_w <= t2")
        Q = self.generator()
        at_tw = self.occupation(start, t_w)
        trans = expm(Q * (t2 - t_w))
        return float(at_tw @ np.diag(trans))
