"""Compiled trajectory kernels for high-precision annealed estimates.

The quenched spread of two-time estimates across environments is large on
tori and hypercubes (each environment is dominated by a handful of deep
traps), so pinning the pooled estimate to a few-per-mille accuracy takes
tens of thousands of environments with a trajectory or two each.  These
kernels run one environment per trajectory in nopython loops, with the same
(seed, label) depth hash as the vectorized engine, bit for bit.

Each replica owns a private counter-based stream, so results never depend
on thread count or scheduling; reductions are integer sums.
"""

from __future__ import annotations

import math

import numpy as np
from numba import config as _numba_config
from numba import njit, prange, set_num_threads

from .dynamics import env_seed
from .rng import _GAMMA, _LABEL_SALT, _MIX1, _MIX2

_MAX_THREADS = int(_numba_config.NUMBA_NUM_THREADS)

_U53 = 1.0 / 9007199254740992.0
_ENV_SALT = np.uint64(0xA5A5A5A5DEADBEE1)
_TRAJ_SALT = np.uint64(0x5C5C5C5C12345679)

_FAM = {"complete": 0, "hypercube": 1, "torus2d": 2}
_LAW = {"pareto": 0, "rem": 1, "const": 2}


@njit(inline="always")
def _mix(x):
    z = (x + _GAMMA)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _uniform(h):
    return (np.float64(h >> np.uint64(11)) + 0.5) * _U53


@njit(inline="always")
def _ppnd16(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(inline="always")
def _tau_at(env_mixed, label, law, p1, p2):
    u = _uniform(_mix((np.uint64(label) ^ _LABEL_SALT) ^ env_mixed))
    if law == 0:  # pareto; p1 = -1/alpha, p2 flags the alpha = 1/2 fast path
        if p2 > 0.5:
            return 1.0 / (u * u)
        return u ** p1
    if law == 1:  # exp-of-Gaussian; p1 = beta * sqrt(n)
        return math.exp(p1 * _ppnd16(u))
    return p1  # const


@njit(inline="always")
def _move(fam, size, pos, word):
    if fam == 2:  # torus: two low bits pick the direction (disjoint from the
        # 53 high bits that built the holding time, so the word is shared)
        d = word & np.uint64(3)
        mask = (np.int64(1) << size) - 1
        x = pos & mask
        y = pos >> size
        if d == np.uint64(0):
            x = (x + 1) & mask
        elif d == np.uint64(1):
            x = (x - 1) & mask
        elif d == np.uint64(2):
            y = (y + 1) & mask
        else:
            y = (y - 1) & mask
        return (y << size) | x
    if fam == 1:  # hypercube: flip one of n spins
        bit = np.int64(word % np.uint64(size))
        return pos ^ (np.int64(1) << bit)
    c = np.int64(word % np.uint64(size - 1))  # complete
    if c >= pos:
        c += 1
    return c


_FIX = 2.0**40  # fixed-point scale for order-free integer reductions


@njit(parallel=True, cache=True, fastmath=True)
def _two_time_kernel(fam, size, law, p1, p2, t_w, t2, reps, seed_env_base,
                     seed_traj_base, env_stride, cap_steps):
    # Per replica the contribution is z = w + (1-w) b: at the first clock
    # crossing of t_w the residual holding time is memoryless, so the same
    # interval covers t2 with probability w = exp(-(t2-t_w)/tau) exactly;
    # the walk then continues with the residual drawn conditioned on ending
    # before t2, and b says whether the state at t2 equals the one at t_w.
    # z is accumulated in fixed point so sums are exact integers and the
    # result is independent of thread count.
    z_sum = 0
    z2_sum = 0
    fin = 0
    tmo = 0
    for rpl in prange(reps):
        env_mixed = _mix(seed_env_base + np.uint64(rpl) * env_stride)
        st = seed_traj_base ^ _mix(np.uint64(rpl) ^ _TRAJ_SALT)
        pos = np.int64(0)
        clock = 0.0
        x1 = np.int64(-1)
        w = 0.0
        done = 0  # 1 finished, 2 timeout
        b = 0
        tau_cur = _tau_at(env_mixed, pos, law, p1, p2)
        steps = 0
        while done == 0:
            st += _GAMMA
            word = _mix(st)
            e = -math.log(_uniform(word))
            nxt = clock + e * tau_cur
            if x1 < 0:
                if nxt > t_w:
                    x1 = pos
                    w = math.exp(-(t2 - t_w) / tau_cur)
                    st += _GAMMA
                    u = _uniform(_mix(st))
                    clock = t_w - tau_cur * math.log1p(-u * (1.0 - w))
                else:
                    clock = nxt
            else:
                if nxt > t2:
                    b = 1 if pos == x1 else 0
                    done = 1
                    break
                clock = nxt
            if fam != 2:
                st += _GAMMA
                word = _mix(st)
            pos = _move(fam, size, pos, word)
            tau_cur = _tau_at(env_mixed, pos, law, p1, p2)
            steps += 1
            if steps >= cap_steps:
                done = 2
        if done == 2:
            tmo += 1
        else:
            fin += 1
            z = w + (1.0 - w) * b
            z_sum += np.int64(z * _FIX + 0.5)
            z2_sum += np.int64(z * z * _FIX + 0.5)
    return z_sum, z2_sum, fin, tmo


@njit(parallel=True, cache=True, fastmath=True)
def _fresh_kernel(fam, size, law, p1, p2, lo, hi, t_w, t2, reps,
                  seed_env_base, seed_traj_base, env_stride, cap_steps):
    clean = 0
    fresh = 0
    tmo = 0
    for rpl in prange(reps):
        env_mixed = _mix(seed_env_base + np.uint64(rpl) * env_stride)
        st = seed_traj_base ^ _mix(np.uint64(rpl) ^ _TRAJ_SALT)
        pos = np.int64(0)
        clock = 0.0
        tau_cur = _tau_at(env_mixed, pos, law, p1, p2)
        last = pos if (tau_cur >= lo and tau_cur < hi) else np.int64(-1)
        outcome = 0  # 0 pending/clean, 1 fresh, 2 timeout
        steps = 0
        while True:
            st += _GAMMA
            word = _mix(st)
            e = -math.log(_uniform(word))
            nxt = clock + e * tau_cur
            if nxt > t2:
                break
            clock = nxt
            if fam != 2:
                st += _GAMMA
                word = _mix(st)
            pos = _move(fam, size, pos, word)
            tau_cur = _tau_at(env_mixed, pos, law, p1, p2)
            if tau_cur >= lo and tau_cur < hi:
                if clock <= t_w:
                    last = pos
                elif pos != last:
                    outcome = 1
                    break
            steps += 1
            if steps >= cap_steps:
                outcome = 2
                break
        if outcome == 0:
            clean += 1
        elif outcome == 1:
            fresh += 1
        else:
            tmo += 1
    return clean, fresh, tmo


def _law_params(law):
    if law.law == "pareto":
        return 0, -1.0 / law.alpha, 1.0 if law.alpha == 0.5 else 0.0
    if law.law == "rem":
        return 1, law.beta * math.sqrt(law.n), 0.0
    if law.law == "const":
        return 2, float(law.value), 0.0
    raise ValueError(f"fast path does not support the {law.law!r} law")


def _seed_words(seed, fixed_env_seed):
    if fixed_env_seed is None:
        env_base = np.uint64(env_seed(seed, 0xE) & 0xFFFFFFFFFFFFFFFF)
        stride = _ENV_SALT
    else:
        env_base = np.uint64(int(fixed_env_seed) & 0xFFFFFFFFFFFFFFFF)
        stride = np.uint64(0)
    traj_base = np.uint64(env_seed(seed, 0x7) & 0xFFFFFFFFFFFFFFFF)
    return env_base, stride, traj_base


def annealed_two_time(top, law, t_w, theta, reps, seed=0, threads=2,
                      cap_steps=10**10, fixed_env_seed=None):
    """P[X((1+theta) t_w) = X(t_w)] with a fresh environment per trajectory.

    Most precise per unit work when estimates are environment-noise bound;
    with `fixed_env_seed` the whole run is quenched in one environment
    (oracle comparisons).  Returns (estimate, stderr, finished, timeouts).
    """
    if t_w <= 0.0 or theta < 0.0:
        raise ValueError("need t_w > 0 and theta >= 0")
    fam = _FAM[top.family]
    lawc, p1, p2 = _law_params(law)
    env_base, stride, traj_base = _seed_words(seed, fixed_env_seed)
    set_num_threads(max(1, min(int(threads), _MAX_THREADS)))
    z_sum, z2_sum, fin, tmo = _two_time_kernel(
        fam, top.size, lawc, p1, p2, float(t_w), float(t_w) * (1.0 + theta),
        int(reps), env_base, traj_base, stride, int(cap_steps))
    if not fin:
        return math.nan, math.nan, 0, tmo
    mean = z_sum / _FIX / fin
    second = z2_sum / _FIX / fin
    var = max(second - mean * mean, 0.0)
    se = math.sqrt(var / fin)
    return mean, se, fin, tmo


def annealed_no_fresh_hit(top, law, window, g, t_w, theta, reps, seed=0,
                          threads=2, cap_steps=10**10, fixed_env_seed=None):
    """Deep-window avoidance probability with a fresh environment per
    trajectory; the set A is {eps g <= tau < M g}."""
    if t_w <= 0.0 or theta < 0.0:
        raise ValueError("need t_w > 0 and theta >= 0")
    fam = _FAM[top.family]
    lawc, p1, p2 = _law_params(law)
    env_base, stride, traj_base = _seed_words(seed, fixed_env_seed)
    set_num_threads(max(1, min(int(threads), _MAX_THREADS)))
    clean, fresh, tmo = _fresh_kernel(
        fam, top.size, lawc, p1, p2, window.eps * g, window.M * g,
        float(t_w), float(t_w) * (1.0 + theta), int(reps), env_base,
        traj_base, stride, int(cap_steps))
    fin = clean + fresh
    p = clean / fin if fin else math.nan
    se = math.sqrt(p * (1.0 - p) / fin) if fin else math.nan
    return p, se, fin, tmo
