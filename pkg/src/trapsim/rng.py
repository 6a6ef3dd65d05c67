"""Deterministic randomness: counter-based hashing and keyed parallel streams.

Two needs are served here.  First, random environments are *functions* of
(seed, vertex label): the same pair must give the same variate in every
process, on every platform.  That rules out stateful generators and is done
with a splitmix64-style integer hash.  Second, Monte Carlo replicas need
independent streams addressable by (seed, path of indices), which numpy's
Philox counter-based generator provides once we derive a key per path.
"""

from __future__ import annotations

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_LABEL_SALT = np.uint64(0xD1B54A32D192ED03)

# 2^-53, used to map 53 high bits to a uniform in (0, 1)
_U53 = 1.0 / 9007199254740992.0


def splitmix64(x):
    """Finalizing 64-bit mixer; accepts uint64 scalars or arrays.

    Multiplication wraps modulo 2^64 by design.
    """
    with np.errstate(over="ignore"):
        z = (np.asarray(x, dtype=np.uint64) + _GAMMA) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK64
        return z ^ (z >> np.uint64(31))


def hash_u64(seed, labels):
    """Hash (seed, label) pairs to uniform 64-bit words.

    `seed` is an integer or an array broadcastable against `labels` (rows of
    a label block may carry different environment seeds); the result is a
    pure function of the inputs.  One finalizer round on the salted label
    xored with the mixed seed: splitmix64 is built to whiten counter-like
    input, and the seed word is already uniform.
    """
    if np.ndim(seed) == 0:
        s = splitmix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    else:
        s = splitmix64(np.asarray(seed, dtype=np.uint64))
    lab = np.asarray(labels, dtype=np.uint64)
    return splitmix64((lab ^ _LABEL_SALT) ^ s)


def hash_uniform(seed, labels):
    """Uniform variates in the open interval (0, 1), one per label.

    The half-offset keeps both endpoints strictly excluded so inverse-CDF
    transforms (Pareto, Gaussian) never see 0 or 1.
    """
    bits = hash_u64(seed, labels) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * _U53


def derive_key(seed, *path):
    """Two 64-bit key words for a Philox stream addressed by an index path."""
    k = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    for part in path:
        k = splitmix64(k ^ splitmix64(np.uint64(int(part) & 0xFFFFFFFFFFFFFFFF)))
    k2 = splitmix64(k ^ _GAMMA)
    return np.array([k, k2], dtype=np.uint64)


def stream(seed, *path):
    """Independent Generator for the replica addressed by (seed, *path).

    Streams with distinct paths are statistically independent and their
    draws do not depend on scheduling, so parallel reductions done in a
    fixed path order are reproducible across worker counts.
    """
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))


# ---------------------------------------------------------------------------
# Inverse standard normal CDF (Wichura's PPND16 rational approximation).
# Absolute error is below 1e-15 over (0, 1), far inside the 1e-9 budget the
# exponential-of-Gaussian landscapes require.  Coefficients are the published
# ones for the central and two tail branches.

_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coeffs, r):
    acc = np.full_like(r, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * r + c
    return acc


def normal_quantile(p):
    """Inverse CDF of the standard normal, vectorized.

    Rational minimax approximation evaluated branch-wise on the central
    region and the two tails; inputs must lie strictly inside (0, 1).
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("normal_quantile needs probabilities strictly inside (0, 1)")
    q = p - 0.5
    central = np.abs(q) <= 0.425

    r_c = 0.180625 - q * q
    val_c = q * _poly(_A, r_c) / _poly(_B, r_c)

    pt = np.where(q < 0.0, p, 1.0 - p)
    pt = np.clip(pt, 1e-320, 0.5)
    r_t = np.sqrt(-np.log(pt))
    near = r_t <= 5.0
    r1 = r_t - 1.6
    r2 = r_t - 5.0
    val_t = np.where(near, _poly(_C, r1) / _poly(_D, r1), _poly(_E, r2) / _poly(_F, r2))
    val_t = np.where(q < 0.0, -val_t, val_t)

    out = np.where(central, val_c, val_t)
    if out.ndim == 0:
        return float(out)
    return out
