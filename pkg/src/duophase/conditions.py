"""Sampled structure checks for densities with unbalanced growth.

The toolkit verifies four structural properties of a density ``f(x, z)``
with ``|z|^p <= f(x, z) <= c1 |z|^q + c2``:

1. an exponent balance ``q <= p (1 + sigma/n)`` tying the growth gap to
   the spatial comparison exponent (:func:`check_F1`);
2. a pairwise spatial comparison
   ``f(x, z) <= K1 f(x~, z) + K2 |x - x~|^sigma |z|^q + K3``
   (:func:`check_F2_sampled`), whose weight-level analogue
   ``a(x) <= c6 a(x~) + c5 |x - x~|^sigma`` is :func:`check_Zsigma`;
3. convexity in the gradient argument (:func:`check_convexity_sampled`);
4. a *common minimizer*: one point ``y*`` in each closed ball minimizing
   ``f(., z)`` simultaneously for every ``z`` (:func:`find_min_point_F4`,
   :func:`check_F4_sampled`).

Together these imply a localization property: for every ball and every
``z`` passing the natural energy threshold ``|z|^alpha + m(z) <= L e^{-n}``
(with ``m(z)`` the essential infimum of ``f(., z)`` over the ball), the
density is controlled by ``A (m(z) + b + |z|^alpha)`` with
``A = K1 + K2 L^{(q-p)/p}``, ``alpha = p`` and ``b = K3``
(:func:`check_H_property` verifies the full chain on samples).

All checks are sampled: a ``pass-on-samples`` verdict is evidence, never a
proof, while a ``fail`` verdict carries a re-evaluable witness.  Sampling
is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import Density, ExponentConfig, Weight
from .errors import UsageError
from .fields import ALGEBRAIC_TOL, Ball
from .reports import FAIL, PASS, ConditionReport
from .sampling import (
    ball_points,
    domain_point_pairs,
    gradient_matrices,
    interval_pairs_1d,
    magnitude_ladder,
)

#: Relative tolerance for oracle-grade comparisons (hulls, quadrature identities).
ORACLE_TOL = 1e-9


@dataclass(frozen=True)
class StructureConstants:
    """Constants of the pairwise comparison ``f(x,z) <= K1 f(x~,z) + K2 |x-x~|^sigma |z|^q + K3``."""

    K1: float
    K2: float
    K3: float
    sigma: float

    def __post_init__(self):
        if self.K1 < 1:
            raise UsageError(f"need K1 >= 1, got {self.K1}")
        if self.K2 < 0 or self.K3 < 0:
            raise UsageError(f"need K2, K3 >= 0, got K2={self.K2}, K3={self.K3}")
        if self.sigma <= 0:
            raise UsageError(f"need sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class ZsigmaConstants:
    """Constants of the weight comparison ``a(x) <= c6 a(x~) + c5 |x-x~|^sigma``."""

    c5: float
    c6: float
    sigma: float

    def __post_init__(self):
        if self.c5 < 0:
            raise UsageError(f"need c5 >= 0, got {self.c5}")
        if self.c6 < 1:
            raise UsageError(f"need c6 >= 1, got {self.c6}")
        if self.sigma <= 0:
            raise UsageError(f"need sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class HPropertyParams:
    """Parameters of the localization property.

    For every interior point, radius ``eps < eps_star`` and matrix ``z``
    with ``|z|^alpha + m(z) <= L * eps^{-n}`` (``m(z)`` = essential infimum
    of ``f(., z)`` over the closed ball), the property asserts
    ``f(x, z) <= A (m(z) + b + |z|^alpha)``.  Only the trivial modulating
    weight (identically 1) is supported; it is not a parameter.
    """

    alpha: float
    L: float
    A: float
    b: float
    eps_star: float = 0.5

    def __post_init__(self):
        if self.alpha < 1:
            raise UsageError(f"need alpha >= 1, got {self.alpha}")
        if self.L <= 0 or self.A <= 0:
            raise UsageError(f"need L, A > 0, got L={self.L}, A={self.A}")
        if self.b < 0:
            raise UsageError(f"need b >= 0, got {self.b}")
        if not (0 < self.eps_star < 1):
            raise UsageError(f"need eps_star in (0, 1), got {self.eps_star}")


@dataclass(frozen=True)
class EnvelopeBracket:
    """Two-sided bracket ``lower <= true value <= upper``."""

    lower: float
    upper: float

    def __post_init__(self):
        scale = max(1.0, abs(self.lower), abs(self.upper))
        if self.lower > self.upper + 1e-9 * scale:
            raise UsageError(
                f"inverted bracket [{self.lower}, {self.upper}] — the "
                "common-minimizer structure this bracket relies on is violated"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _violates(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Strict violation mask with relative algebraic slack."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs > rhs + ALGEBRAIC_TOL * scale


# ---------------------------------------------------------------------------
# (1) exponent balance


def check_F1(exponents: ExponentConfig) -> bool:
    """``q <= p (1 + sigma/n)``, decided by the sign of ``sigma - n (q-p)/p``."""
    e = exponents
    return e.sigma - e.n * (e.q - e.p) / e.p >= 0.0


# ---------------------------------------------------------------------------
# (2) spatial comparisons


def check_Zsigma(
    weight: Weight,
    constants: ZsigmaConstants,
    lo: float,
    hi: float,
    pair_count: int,
    seed: int,
) -> ConditionReport:
    """Sampled weight comparison on first-coordinate pairs in ``[lo, hi]``.

    Pairs include jump-straddling configurations at gaps down to one ulp —
    the regime where a discontinuous weight actually stresses ``(c5, c6)``.
    """
    if hi <= lo:
        raise UsageError(f"need lo < hi, got [{lo}, {hi}]")
    t, s = interval_pairs_1d(pair_count, lo, hi, weight.jumps(), seed)
    at = weight.value_1d(t)
    a_s = weight.value_1d(s)
    rhs = constants.c6 * a_s + constants.c5 * np.abs(t - s) ** constants.sigma
    bad = _violates(at, rhs)
    details = {
        "c5": constants.c5,
        "c6": constants.c6,
        "sigma": constants.sigma,
        "worst_margin": float(np.min(rhs - at)),
        "weight": weight.describe(),
    }
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        witness = {
            "t": float(t[i]),
            "s": float(s[i]),
            "lhs_weight_at_t": float(at[i]),
            "weight_at_s": float(a_s[i]),
            "rhs": float(rhs[i]),
            "c5": constants.c5,
            "c6": constants.c6,
            "sigma": constants.sigma,
        }
        return ConditionReport(
            "sigma-comparison-weight", FAIL, len(t), seed, details, witness
        )
    return ConditionReport("sigma-comparison-weight", PASS, len(t), seed, details)


def check_F2_sampled(
    density: Density,
    constants: StructureConstants,
    domain: Ball,
    seed: int,
    pair_count: int = 4096,
    z_count: int = 96,
) -> ConditionReport:
    """Sampled pairwise comparison over point pairs in the domain ball.

    Point pairs include jump-straddling configurations around the density's
    spatial discontinuities; matrices sweep a geometric magnitude ladder.
    """
    e = density.exponents
    if domain.dim != e.n:
        raise UsageError(f"domain dimension {domain.dim} != n={e.n}")
    x, xt = domain_point_pairs(domain, _spatial_jumps(density), pair_count, seed)
    z = gradient_matrices(z_count, e.N, e.n, seed + 7)
    fx = density.value(x[:, None, :], z[None])
    fxt = density.value(xt[:, None, :], z[None])
    dist = np.sqrt(np.sum((x - xt) ** 2, axis=-1))
    zq = np.sqrt(np.einsum("kai,kai->k", z, z)) ** e.q
    rhs = (
        constants.K1 * fxt
        + constants.K2 * (dist[:, None] ** constants.sigma) * zq[None, :]
        + constants.K3
    )
    bad = _violates(fx, rhs)
    details = {
        "K1": constants.K1,
        "K2": constants.K2,
        "K3": constants.K3,
        "sigma": constants.sigma,
        "worst_margin": float(np.min(rhs - fx)),
        "density": density.describe(),
    }
    if np.any(bad):
        ip, iz = (int(v[0]) for v in np.nonzero(bad))
        witness = {
            "x": x[ip],
            "x_tilde": xt[ip],
            "z": z[iz],
            "lhs_f_x": float(fx[ip, iz]),
            "f_x_tilde": float(fxt[ip, iz]),
            "distance": float(dist[ip]),
            "rhs": float(rhs[ip, iz]),
            "K1": constants.K1,
            "K2": constants.K2,
            "K3": constants.K3,
            "sigma": constants.sigma,
        }
        return ConditionReport(
            "pairwise-comparison", FAIL, int(fx.size), seed, details, witness
        )
    return ConditionReport("pairwise-comparison", PASS, int(fx.size), seed, details)


def _spatial_jumps(density: Density) -> tuple[float, ...]:
    """First-coordinate positions where the density is spatially non-smooth."""
    jumps: set[float] = set()
    w = density.weight
    if w is not None:
        jumps.update(w.jumps())
    if density.kind == "threshold-phase":
        jumps.add(0.0)
    if hasattr(density, "terms"):
        for weight, _ in density.terms:
            jumps.update(weight.jumps())
    return tuple(sorted(jumps))


# ---------------------------------------------------------------------------
# (3) convexity in z


def check_convexity_sampled(
    density: Density,
    domain: Ball,
    seed: int,
    x_count: int = 64,
    z_pair_count: int = 512,
) -> ConditionReport:
    """Midpoint convexity ``f(x, (z1+z2)/2) <= (f(x,z1) + f(x,z2)) / 2`` on samples."""
    e = density.exponents
    x = ball_points(x_count, domain, seed)
    z1 = gradient_matrices(z_pair_count, e.N, e.n, seed + 11)
    z2 = gradient_matrices(z_pair_count, e.N, e.n, seed + 13)[::-1]
    mid = 0.5 * (z1 + z2)
    f_mid = density.value(x[:, None, :], mid[None])
    f_avg = 0.5 * (
        density.value(x[:, None, :], z1[None])
        + density.value(x[:, None, :], z2[None])
    )
    bad = _violates(f_mid, f_avg)
    details = {
        "worst_margin": float(np.min(f_avg - f_mid)),
        "density": density.describe(),
    }
    if np.any(bad):
        ix, iz = (int(v[0]) for v in np.nonzero(bad))
        witness = {
            "x": x[ix],
            "z1": z1[iz],
            "z2": z2[iz],
            "lhs_f_midpoint": float(f_mid[ix, iz]),
            "rhs_average": float(f_avg[ix, iz]),
        }
        return ConditionReport(
            "z-convexity", FAIL, int(f_mid.size), seed, details, witness
        )
    return ConditionReport("z-convexity", PASS, int(f_mid.size), seed, details)


# ---------------------------------------------------------------------------
# (4) common minimizer


def _minimizer_samples(x: np.ndarray, eps: float, seed: int, y_count: int) -> np.ndarray:
    """Sample points of the closed ball around x: lattice + center/axis anchors."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    anchors = [x]
    for i in range(n):
        for sign in (-1.0, 1.0):
            y = x.copy()
            y[i] += sign * eps
            anchors.append(y)
    interior = ball_points(max(y_count - len(anchors), 8), Ball(tuple(x), eps), seed)
    return np.concatenate([np.asarray(anchors), interior])


def _lexicographic_argmin(points: np.ndarray, scores: np.ndarray) -> int:
    """Index of the minimizing score; ties broken by lexicographically smallest point."""
    best = np.min(scores)
    tie = np.flatnonzero(scores == best)
    order = np.lexsort(tuple(points[tie, i] for i in reversed(range(points.shape[1]))))
    return int(tie[order[0]])


def find_min_point_F4(
    density: Density,
    x,
    eps: float,
    seed: int,
    y_count: int = 128,
) -> np.ndarray:
    """Candidate common minimizer ``y*`` of ``f(., z)`` over the closed ball.

    Minimizes the density's cheap surrogate (its weight for product-type
    densities, ``-y1`` for the threshold density, a constant when the
    density ignores x) over deterministic ball samples that always include
    the center and the axis boundary points.  Ties go to the
    lexicographically smallest sampled point.
    """
    if eps <= 0:
        raise UsageError(f"need eps > 0, got {eps}")
    y = _minimizer_samples(x, eps, seed, y_count)
    scores = density.minimizer_surrogate(y)
    return y[_lexicographic_argmin(y, scores)].copy()


def check_F4_sampled(
    density: Density,
    x,
    eps: float,
    seed: int,
    y_count: int = 128,
    z_count: int = 256,
) -> ConditionReport:
    """Does the surrogate minimizer beat every sampled ``y`` for every sampled ``z``?"""
    e = density.exponents
    y = _minimizer_samples(x, eps, seed, y_count)
    scores = density.minimizer_surrogate(y)
    y_star = y[_lexicographic_argmin(y, scores)]
    z = gradient_matrices(z_count, e.N, e.n, seed + 17)
    f_star = density.value(y_star[None, :], z)  # (Z,)
    f_all = density.value(y[:, None, :], z[None])  # (Y, Z)
    bad = _violates(f_star[None, :], f_all)
    details = {
        "y_star": y_star,
        "density": density.describe(),
    }
    if np.any(bad):
        iy, iz = (int(v[0]) for v in np.nonzero(bad))
        z_fail = z[iz]
        # Demonstrate z-dependence: argmin location for the failing z vs a
        # reference z (the positive single-entry anchor).
        argmin_fail = y[_lexicographic_argmin(y, f_all[:, iz])]
        ref = 1  # anchor index: +1 in entry (1, n)
        argmin_ref = y[_lexicographic_argmin(y, f_all[:, ref])]
        witness = {
            "y_star": y_star,
            "z": z_fail,
            "y_better": y[iy],
            "f_at_y_star": float(f_star[iz]),
            "f_at_y_better": float(f_all[iy, iz]),
            "argmin_for_z": argmin_fail,
            "z_reference": z[ref],
            "argmin_for_z_reference": argmin_ref,
        }
        return ConditionReport(
            "common-minimizer", FAIL, int(f_all.size), seed, details, witness
        )
    return ConditionReport("common-minimizer", PASS, int(f_all.size), seed, details)


# ---------------------------------------------------------------------------
# essential-infimum envelopes


def essinf_bracket(
    density: Density,
    x,
    eps: float,
    z,
    seed: int,
    y_count: int = 128,
) -> EnvelopeBracket:
    """Bracket for ``m(z) = essinf over the closed ball of f(., z)``.

    Upper bound: minimum over ball samples (the essential infimum can only
    be smaller).  Lower bound: ``f(y*, z)`` with the common minimizer
    candidate ``y*`` — sound exactly when the common-minimizer structure
    holds, which is the regime these envelopes are used in.  Construction
    fails loudly (inverted bracket) when that structure is violated.
    """
    y = _minimizer_samples(x, eps, seed, y_count)
    scores = density.minimizer_surrogate(y)
    y_star = y[_lexicographic_argmin(y, scores)]
    z = np.asarray(z, dtype=float)
    f_star = float(density.value(y_star[None, :], z[None])[0])
    f_min = float(np.min(density.value(y, np.broadcast_to(z, (len(y),) + z.shape))))
    return EnvelopeBracket(lower=f_star, upper=f_min)


def biconjugate_bracket(
    density: Density,
    x,
    eps: float,
    z,
    seed: int,
    y_count: int = 128,
) -> EnvelopeBracket:
    """Bracket for the z-convexification of ``m(z)`` at one matrix ``z``.

    The convexified envelope sits below ``m``, so the sampled upper bound
    for ``m`` is an upper bound here too.  The lower bound ``f(y*, z)``
    needs z-convexity on top of the common-minimizer structure: then
    ``m >= f(y*, .)`` everywhere with a convex right-hand side, so the
    convexification stays above ``f(y*, .)`` as well.
    """
    if not density.convex_in_z:
        raise UsageError(
            "biconjugate lower bound requires a density convex in z"
        )
    return essinf_bracket(density, x, eps, z, seed, y_count)


# ---------------------------------------------------------------------------
# 1-D lower convex hulls


@dataclass
class Hull1D:
    """Lower convex hull of a finite point set ``(s_i, v_i)``."""

    s: np.ndarray
    v: np.ndarray

    def evaluate(self, query) -> np.ndarray:
        query = np.asarray(query, dtype=float)
        if np.any(query < self.s[0]) or np.any(query > self.s[-1]):
            raise UsageError(
                f"hull evaluation outside [{self.s[0]}, {self.s[-1]}]"
            )
        return np.interp(query, self.s, self.v)


def convex_hull_1d(s, v) -> Hull1D:
    """Lower convex hull via the monotone chain, deterministic.

    Duplicate abscissae keep their smallest ordinate.  The hull touches
    the input at every vertex and never exceeds any input point.
    """
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    if s.ndim != 1 or s.shape != v.shape or len(s) == 0:
        raise UsageError("hull input must be two equal-length 1-D arrays")
    order = np.lexsort((v, s))
    s, v = s[order], v[order]
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = s[1:] > s[:-1]  # first occurrence per abscissa has min ordinate
    s, v = s[keep], v[keep]
    hull: list[tuple[float, float]] = []
    for point in zip(s, v):
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            cross = (x1 - x0) * (point[1] - y0) - (y1 - y0) * (point[0] - x0)
            if cross <= 0:  # non-left turn: middle point is not a lower vertex
                hull.pop()
            else:
                break
        hull.append(point)
    hs = np.array([p[0] for p in hull])
    hv = np.array([p[1] for p in hull])
    return Hull1D(hs, hv)


# ---------------------------------------------------------------------------
# the localization property


def check_H_property(
    density: Density,
    params: HPropertyParams,
    constants: StructureConstants,
    domain: Ball,
    x,
    eps: float,
    seed: int,
    z_count: int = 2048,
    y_count: int = 128,
) -> ConditionReport:
    """Sampled check of the localization property on one ball.

    Preconditions: ``0 < eps < eps_star`` and the closed ball around ``x``
    stays inside the domain.  The matrix sample concentrates around the
    premise boundary ``|z| = (L eps^{-n})^{1/alpha}`` where the property is
    tight.  Premise admission uses the *upper* envelope bound and the
    conclusion is tested against the *lower* bound — both sound directions,
    so a reported violation is a genuine one.  The exponent step of the
    derivation, ``eps^sigma |z|^q <= L^{(q-p)/p} |z|^p`` for admitted
    matrices, is asserted at 1e-9 relative; a breach (possible only when
    the exponent balance fails) is reported as a failure witness.
    """
    e = density.exponents
    x = np.asarray(x, dtype=float)
    if not (0 < eps < params.eps_star):
        raise UsageError(
            f"need 0 < eps < eps_star={params.eps_star}, got eps={eps}"
        )
    dist_to_center = float(np.sqrt(np.sum((x - np.asarray(domain.center)) ** 2)))
    if dist_to_center + eps > domain.radius * (1 + ALGEBRAIC_TOL):
        raise UsageError(
            f"closed ball B(x, {eps}) leaves the domain "
            f"(|x - center| = {dist_to_center}, radius = {domain.radius})"
        )

    threshold = params.L * eps ** (-float(e.n))
    boundary_mag = threshold ** (1.0 / params.alpha)
    mags = np.concatenate(
        [
            magnitude_ladder(16, boundary_mag * 1e-6, boundary_mag * 0.99),
            boundary_mag * np.array([0.999999, 1.0, 1.2, 10.0]),
        ]
    )
    z = gradient_matrices(z_count, e.N, e.n, seed + 23, magnitudes=mags)
    zmag = np.sqrt(np.einsum("kai,kai->k", z, z))

    y = _minimizer_samples(x, eps, seed, y_count)
    scores = density.minimizer_surrogate(y)
    y_star = y[_lexicographic_argmin(y, scores)]
    f_star = density.value(y_star[None, :], z)  # lower envelope bound, (Z,)
    f_min = np.min(density.value(y[:, None, :], z[None]), axis=0)  # upper, (Z,)

    details: dict = {
        "y_star": y_star,
        "eps": eps,
        "threshold": threshold,
        "alpha": params.alpha,
        "A": params.A,
        "b": params.b,
        "bracket_width_max": float(np.max(f_min - f_star)),
    }

    # exponent step of the derivation, for matrices passing the bare
    # |z|^p threshold
    chain = zmag ** e.p <= threshold
    lhs_chain = eps ** constants.sigma * zmag[chain] ** e.q
    rhs_chain = params.L ** ((e.q - e.p) / e.p) * zmag[chain] ** e.p
    chain_bad = lhs_chain > rhs_chain * (1.0 + ORACLE_TOL)
    if np.any(chain_bad):
        i = int(np.flatnonzero(chain_bad)[0])
        idx = int(np.flatnonzero(chain)[i])
        witness = {
            "kind": "exponent-chain",
            "z": z[idx],
            "z_magnitude": float(zmag[idx]),
            "eps": eps,
            "lhs_eps_sigma_zq": float(lhs_chain[i]),
            "rhs_L_power_zp": float(rhs_chain[i]),
            "sigma": constants.sigma,
            "sigma_balance": float(
                constants.sigma - e.n * (e.q - e.p) / e.p
            ),
        }
        return ConditionReport(
            "localization-property", FAIL, int(z_count), seed, details, witness
        )
    details["chain_margin"] = float(
        np.min(rhs_chain - lhs_chain) if len(lhs_chain) else np.inf
    )

    premise = zmag ** params.alpha + f_min <= threshold
    fx = density.value(x[None, :], z)
    rhs = params.A * (f_star + params.b + zmag ** params.alpha)
    bad = premise & _violates(fx, rhs)
    details["admitted"] = int(np.sum(premise))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        witness = {
            "kind": "conclusion",
            "z": z[i],
            "x": x,
            "premise_lhs": float(zmag[i] ** params.alpha + f_min[i]),
            "premise_rhs_threshold": threshold,
            "lhs_f_x": float(fx[i]),
            "rhs_bound": float(rhs[i]),
            "envelope_lower": float(f_star[i]),
            "envelope_upper": float(f_min[i]),
        }
        return ConditionReport(
            "localization-property", FAIL, int(z_count), seed, details, witness
        )
    admitted = premise
    if np.any(admitted):
        details["conclusion_margin"] = float(np.min(rhs[admitted] - fx[admitted]))
    return ConditionReport("localization-property", PASS, int(z_count), seed, details)


def derived_localization_params(
    constants: StructureConstants,
    exponents: ExponentConfig,
    L: float,
    eps_star: float = 0.5,
) -> HPropertyParams:
    """The localization parameters implied by the structure constants.

    ``A = K1 + K2 L^{(q-p)/p}``, ``alpha = p``, ``b = K3``; any
    ``eps_star`` in (0, 1) works.
    """
    e = exponents
    A = constants.K1 + constants.K2 * L ** ((e.q - e.p) / e.p)
    return HPropertyParams(alpha=e.p, L=L, A=A, b=constants.K3, eps_star=eps_star)
