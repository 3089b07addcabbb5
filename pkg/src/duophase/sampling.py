"""Deterministic sample generators for the structure checks.

All samplers are driven by an explicit integer seed and a Kronecker
(additive-recurrence) lattice: point ``k`` has coordinates
``frac(offset + k * alpha)`` with ``alpha_j = frac(sqrt(prime_j))`` and a
seeded offset.  The lattice is low-discrepancy (it fills space much more
evenly than i.i.d. draws), streamable (windows ``[start, start+count)``
never overlap), and bit-reproducible for a fixed seed.

On top of the lattice this module builds the special sample families the
checks need: points in boxes and balls, gradient matrices spread across a
magnitude ladder, and pairs of points that straddle weight discontinuities
at gaps shrinking down to one floating-point ulp — the pairs that make or
break a discontinuous comparison constant.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .fields import Ball


def _primes(count: int) -> np.ndarray:
    """First ``count`` primes via a small sieve."""
    if count < 1:
        raise UsageError("need at least one prime")
    bound = max(16, int(count * (np.log(count + 2) + np.log(np.log(count + 3)) + 2)))
    sieve = np.ones(bound, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(bound ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    primes = np.flatnonzero(sieve)
    if len(primes) < count:  # pragma: no cover - bound is generous
        return _primes_fallback(count)
    return primes[:count]


def _primes_fallback(count: int) -> np.ndarray:  # pragma: no cover
    out, candidate = [], 2
    while len(out) < count:
        if all(candidate % p for p in out):
            out.append(candidate)
        candidate += 1
    return np.array(out)


def lattice_window(start: int, count: int, dim: int, seed: int) -> np.ndarray:
    """Points ``start .. start+count-1`` of the seeded lattice in [0,1)^dim."""
    if count < 0:
        raise UsageError("sample count must be nonnegative")
    alpha = np.sqrt(_primes(dim).astype(float)) % 1.0
    offset = np.random.default_rng(seed).random(dim)
    k = np.arange(start, start + count, dtype=float)[:, None]
    return (offset + k * alpha) % 1.0


def box_points(
    count: int,
    lower,
    upper,
    seed: int,
    start: int = 0,
) -> np.ndarray:
    """``count`` lattice points mapped affinely into the box, shape (count, n)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    u = lattice_window(start, count, len(lower), seed)
    return lower + u * (upper - lower)


def ball_points(count: int, ball: Ball, seed: int) -> np.ndarray:
    """``count`` lattice points inside the closed ball, shape (count, dim).

    Rejection from the bounding box, consuming successive lattice windows;
    deterministic for a fixed seed.
    """
    center = np.asarray(ball.center)
    lower = center - ball.radius
    upper = center + ball.radius
    out: list[np.ndarray] = []
    have, start = 0, 0
    chunk = max(64, int(count * 2.5))
    while have < count:
        pts = box_points(chunk, lower, upper, seed, start=start)
        start += chunk
        keep = pts[ball.contains(pts)]
        out.append(keep)
        have += len(keep)
        if start > 1000 * (count + chunk):  # pragma: no cover
            raise RuntimeError("ball sampling failed to fill its quota")
    return np.concatenate(out)[:count]


def magnitude_ladder(
    count: int,
    low: float = 1e-3,
    high: float = 1e3,
) -> np.ndarray:
    """Geometric magnitude ladder from ``low`` to ``high`` (inclusive)."""
    if count < 2 or low <= 0 or high <= low:
        raise UsageError("magnitude ladder needs count >= 2 and 0 < low < high")
    return np.geomspace(low, high, count)


def gradient_matrices(
    count: int,
    N: int,
    n: int,
    seed: int,
    magnitudes: np.ndarray | None = None,
) -> np.ndarray:
    """``count`` gradient matrices, shape (count, N, n), spread over magnitudes.

    Directions come from the lattice mapped to [-1, 1]^{N*n} and normalized
    to unit Frobenius norm; each direction is scaled by a ladder magnitude
    (cycled).  The first few entries are fixed anchors: the zero matrix and
    ``±1`` in the single entries (1, n) and (1, 1) — the entries the
    one-sided densities read.
    """
    if count < 8:
        raise UsageError("gradient sampler needs count >= 8")
    if magnitudes is None:
        magnitudes = magnitude_ladder(12)
    anchors = np.zeros((5, N, n))
    anchors[1, 0, n - 1] = 1.0
    anchors[2, 0, n - 1] = -1.0
    anchors[3, 0, 0] = 1.0
    anchors[4, 0, 0] = -1.0
    rest = count - len(anchors)
    u = lattice_window(0, rest, N * n, seed).reshape(rest, N, n)
    direction = 2.0 * u - 1.0
    norms = np.sqrt(np.einsum("kai,kai->k", direction, direction))
    norms = np.where(norms > 0, norms, 1.0)
    direction /= norms[:, None, None]
    mags = np.asarray(magnitudes, dtype=float)
    scale = mags[np.arange(rest) % len(mags)]
    return np.concatenate([anchors, direction * scale[:, None, None]])


def gap_ladder(scale: float = 1.0, anchor: float = 0.0) -> np.ndarray:
    """Gaps from ``0.1 * scale`` down to one ulp at ``anchor``, geometric."""
    decades = 10.0 ** (-np.arange(1, 14, dtype=float)) * scale
    ulp = np.spacing(max(abs(anchor), 1.0))
    fine = ulp * np.array([8.0, 4.0, 2.0, 1.0])
    return np.concatenate([decades[decades > fine[0]], fine])


def straddle_pairs_1d(
    jumps,
    lo: float,
    hi: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(t, s)`` straddling each jump position at shrinking gaps.

    For every jump ``j`` in ``(lo, hi)`` and every gap ``d`` of the ladder
    the pairs include ``(j+d, j-d)``, ``(j+d, j)`` (second point exactly at
    the jump, which sits on the *lower* branch), ``(j, j-d)`` and both
    mirror orders — the configurations where discontinuous weights are
    hardest to compare.
    """
    ts, ss = [], []
    for j in jumps:
        if not (lo < j < hi):
            continue
        gaps = gap_ladder(scale=min(j - lo, hi - j), anchor=j)
        for d in gaps:
            up, down = j + d, j - d
            for t, s in (
                (up, down),
                (down, up),
                (up, j),
                (j, up),
                (j, down),
                (down, j),
            ):
                ts.append(t)
                ss.append(s)
    if not ts:
        return np.empty(0), np.empty(0)
    return np.asarray(ts), np.asarray(ss)


def interval_pairs_1d(
    count: int,
    lo: float,
    hi: float,
    jumps,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """``>= count`` pairs ``(t, s)`` in [lo, hi]: lattice pairs + straddles."""
    base = box_points(count, (lo, lo), (hi, hi), seed)
    t, s = base[:, 0], base[:, 1]
    st, ss = straddle_pairs_1d(jumps, lo, hi, seed)
    return np.concatenate([t, st]), np.concatenate([s, ss])


def domain_point_pairs(
    domain: Ball,
    jumps,
    count: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(x, x~)`` in the closed ball, including jump-straddling pairs.

    Straddling pairs share every coordinate except the first, which takes
    values ``j ± gap`` around each weight jump ``j`` the ball crosses.
    """
    x = ball_points(count, domain, seed)
    xt = ball_points(count, domain, seed + 1)
    extra_x, extra_xt = [], []
    center = np.asarray(domain.center)
    # carrier points for straddles: stay well inside along the other axes
    carriers = ball_points(8, Ball(domain.center, domain.radius / 4.0), seed + 2)
    r = domain.radius
    for j in jumps:
        if not (center[0] - r < j < center[0] + r):
            continue
        room = min(j - (center[0] - r), (center[0] + r) - j)
        gaps = gap_ladder(scale=room / 2.0, anchor=j)
        for d in gaps:
            for carrier in carriers:
                for t, s in ((j + d, j - d), (j + d, j), (j, j - d)):
                    a = carrier.copy()
                    b = carrier.copy()
                    a[0] = t
                    b[0] = s
                    if domain.contains(a) and domain.contains(b):
                        extra_x.append(a)
                        extra_xt.append(b)
                        extra_x.append(b)  # both orders
                        extra_xt.append(a)
    if extra_x:
        x = np.concatenate([x, np.asarray(extra_x)])
        xt = np.concatenate([xt, np.asarray(extra_xt)])
    return x, xt
