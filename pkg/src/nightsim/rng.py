"""Counter-based deterministic random numbers.

Every stochastic operation in the pipeline (light activation, sensor noise,
render sampling) draws from a stateless hash of (seed, key...) instead of a
shared sequential generator.  Equal keys give equal draws regardless of call
order or thread count, which is what makes whole runs reproducible.

The mixer is the splitmix64 finalizer, applied once per key word.  All
arithmetic is modulo 2**64; numpy uint64 wraps natively.
"""

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# scale for mapping the top 53 bits to a float in [0, 1)
_INV_2_53 = 1.0 / float(1 << 53)


def mix64(x):
    """splitmix64 finalizer; accepts uint64 scalars or arrays."""
    z = np.uint64(x) if np.isscalar(x) else np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def hash_keys(seed, *keys):
    """Combine a seed and integer keys into one uint64 hash.

    Keys may be scalars or broadcastable integer arrays; the result has the
    broadcast shape.
    """
    with np.errstate(over="ignore"):
        state = mix64(np.uint64(seed) ^ _GOLDEN)
        for k in keys:
            k = np.asarray(k).astype(np.uint64) if not np.isscalar(k) else np.uint64(int(k) & 0xFFFFFFFFFFFFFFFF)
            state = mix64(state ^ (k + _GOLDEN))
    return state


def uniform(seed, *keys):
    """Uniform draw(s) in [0, 1) keyed by (seed, keys...)."""
    h = hash_keys(seed, *keys)
    return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normal(seed, *keys):
    """Standard normal draw(s) via Box-Muller.

    Two sub-draws are derived from the key by appending counters 0 and 1,
    so callers spend one key per Gaussian.
    """
    u1 = uniform(seed, *keys, 0)
    u2 = uniform(seed, *keys, 1)
    # shift u1 into (0, 1] so the log is finite
    u1 = 1.0 - u1
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
