"""Energy densities with unbalanced growth and their spatial weights.

Background
----------
The functionals studied here have the form ``F(u) = ∫ f(x, Du) dx`` where
the density ``f(x, z)`` grows like ``|z|^p`` from below and ``|z|^q`` from
above (``1 < p <= q``): a q-phase switched on and off across the domain by
a nonnegative weight ``a(x)``.  The weight may be merely Hölder-like or
even discontinuous; what the structure checks care about is a one-sided
Hölder-type comparison

    ``a(x) <= c6 * a(x~) + c5 * |x - x~|^sigma``

(checked in :mod:`duophase.conditions`).  Besides the classical product
form ``|z|^p + a(x) |z|^q`` this module ships two densities that are *not*
products of a weight and a z-function: a one-sided variant that reads only
the positive part of a single gradient entry, and a threshold variant
whose q-phase is the positive part of ``(t_+)^q - (x1_+)^q`` — a density
that vanishes on a z-dependent region of space.

Array conventions follow :mod:`duophase.fields`: points ``x`` have shape
``(..., n)``, gradient matrices ``z`` shape ``(..., N, n)`` with entry
``z[..., alpha, i]`` = component ``alpha+1``, direction ``i+1``.  All
evaluations broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class ExponentConfig:
    """Growth exponents and dimensions shared by a density and its checks.

    ``p`` and ``q`` are the lower/upper growth exponents (``1 < p <= q``),
    ``n`` the domain dimension (>= 2), ``N`` the target dimension (>= 1),
    ``sigma`` the spatial comparison exponent (> 0).
    """

    p: float
    q: float
    n: int
    N: int
    sigma: float

    def __post_init__(self):
        if not self.p > 1:
            raise UsageError(f"need p > 1, got p={self.p}")
        if not self.q >= self.p:
            raise UsageError(f"need q >= p, got p={self.p}, q={self.q}")
        if self.n < 2:
            raise UsageError(f"need n >= 2, got n={self.n}")
        if self.N < 1:
            raise UsageError(f"need N >= 1, got N={self.N}")
        if not self.sigma > 0:
            raise UsageError(f"need sigma > 0, got sigma={self.sigma}")


# ---------------------------------------------------------------------------
# weights


class Weight:
    """A nonnegative function of the first coordinate, ``a(x) = a1(x[0])``."""

    kind: str = "abstract"

    def value_1d(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.value_1d(x[..., 0])

    def jumps(self) -> tuple[float, ...]:
        """First-coordinate positions where the weight jumps or kinks."""
        return ()

    def reference_comparison_constants(self) -> tuple[float, float] | None:
        """Derived ``(c5, c6)`` making the sigma-comparison hold, if known."""
        return None

    def params(self) -> dict[str, float]:
        return {}

    def describe(self) -> str:
        ps = ",".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.kind}({ps})"


class ZeroWeight(Weight):
    """Identically zero weight: the q-phase is off everywhere."""

    kind = "zero"

    def value_1d(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def reference_comparison_constants(self):
        return (0.0, 1.0)


class HolderWeight(Weight):
    """Continuous ramp ``a1(t) = max(t, 0)^sigma``."""

    kind = "holder"

    def __init__(self, sigma: float):
        if sigma <= 0:
            raise UsageError(f"holder weight needs sigma > 0, got {sigma}")
        self.sigma = float(sigma)

    def value_1d(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(t, 0.0) ** self.sigma

    def jumps(self):
        return (0.0,)

    def reference_comparison_constants(self):
        # |t_+^s - u_+^s| <= |t - u|^s holds exactly when s <= 1.
        if self.sigma <= 1.0:
            return (1.0, 1.0)
        return None

    def params(self):
        return {"sigma": self.sigma}


class StepHolderWeight(Weight):
    """Hölder ramp with an upward jump: 0, then ``t^sigma``, then ``t^sigma + jump``.

    Piecewise: ``0`` for ``t <= 0``; ``t^sigma`` for ``0 < t <= r``;
    ``t^sigma + jump`` for ``t > r``.  Despite the discontinuity at ``r``
    the weight satisfies the sigma-comparison with
    ``c5 = c6 = (1 + jump / r^sigma) * 2^sigma``.
    """

    kind = "step-holder-1d"

    def __init__(self, r: float, sigma: float, jump: float):
        if r <= 0 or sigma <= 0 or jump < 0:
            raise UsageError(
                f"step weight needs r > 0, sigma > 0, jump >= 0; "
                f"got r={r}, sigma={sigma}, jump={jump}"
            )
        self.r = float(r)
        self.sigma = float(sigma)
        self.jump = float(jump)

    def value_1d(self, t):
        t = np.asarray(t, dtype=float)
        ramp = np.where(t > 0, np.maximum(t, 0.0) ** self.sigma, 0.0)
        return ramp + np.where(t > self.r, self.jump, 0.0)

    def jumps(self):
        return (0.0, self.r)

    def reference_comparison_constants(self):
        c = (1.0 + self.jump / self.r ** self.sigma) * 2.0 ** self.sigma
        return (c, c)

    def params(self):
        return {"r": self.r, "sigma": self.sigma, "jump": self.jump}


class TwoThresholdWeight(Weight):
    """Weight that turns on at ``r1`` and jumps at ``r2``.

    Piecewise: ``0`` for ``t <= r1``; ``(t - r1)^sigma`` for
    ``r1 < t <= r2``; ``(t - r1)^sigma + jump`` for ``t > r2``.  Satisfies
    the sigma-comparison with
    ``c5 = c6 = 2^sigma * (1 + jump / (r2 - r1)^sigma)``.
    """

    kind = "two-threshold-1d"

    def __init__(self, r1: float, r2: float, sigma: float, jump: float):
        if not r2 > r1:
            raise UsageError(f"need r2 > r1, got r1={r1}, r2={r2}")
        if sigma <= 0 or jump < 0:
            raise UsageError(
                f"two-threshold weight needs sigma > 0, jump >= 0; "
                f"got sigma={sigma}, jump={jump}"
            )
        self.r1 = float(r1)
        self.r2 = float(r2)
        self.sigma = float(sigma)
        self.jump = float(jump)

    def value_1d(self, t):
        t = np.asarray(t, dtype=float)
        ramp = np.where(t > self.r1, np.maximum(t - self.r1, 0.0) ** self.sigma, 0.0)
        return ramp + np.where(t > self.r2, self.jump, 0.0)

    def jumps(self):
        return (self.r1, self.r2)

    def reference_comparison_constants(self):
        c = 2.0 ** self.sigma * (
            1.0 + self.jump / (self.r2 - self.r1) ** self.sigma
        )
        return (c, c)

    def params(self):
        return {"r1": self.r1, "r2": self.r2, "sigma": self.sigma, "jump": self.jump}


_WEIGHT_KINDS = {
    "zero": ZeroWeight,
    "holder": HolderWeight,
    "step-holder-1d": StepHolderWeight,
    "two-threshold-1d": TwoThresholdWeight,
}


def make_weight(kind: str, **params) -> Weight:
    """Construct a weight by kind name (the CLI/config vocabulary)."""
    try:
        cls = _WEIGHT_KINDS[kind]
    except KeyError:
        raise UsageError(
            f"unknown weight kind {kind!r}; known: {sorted(_WEIGHT_KINDS)}"
        ) from None
    return cls(**params)


def eval_weight(weight: Weight, x: np.ndarray) -> np.ndarray:
    """Evaluate a weight at points ``x`` of shape ``(..., n)``."""
    return weight.value(x)


# ---------------------------------------------------------------------------
# densities


def eval_g(x1, t, q) -> np.ndarray:
    """Threshold excess ``g(x1, t) = max{ max(t,0)^q - max(x1,0)^q , 0 }``.

    Piecewise: 0 when ``t <= 0`` or ``0 <= t <= x1``; ``t^q`` when
    ``x1 <= 0 <= t``; ``t^q - x1^q`` when ``0 <= x1 <= t``.  Convex and
    nondecreasing in ``t``, nonincreasing in ``x1``.
    """
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    tq = np.maximum(t, 0.0) ** q
    xq = np.maximum(x1, 0.0) ** q
    return np.maximum(tq - xq, 0.0)


def _frob(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...ai,...ai->...", z, z))


def _power_grad(z: np.ndarray, mag: np.ndarray, p: float) -> np.ndarray:
    """Gradient of ``|z|^p`` (zero at z = 0, valid for p > 1)."""
    safe = np.where(mag > 0, mag, 1.0)
    coef = np.where(mag > 0, p * safe ** (p - 2.0), 0.0)
    return coef[..., None, None] * z


class Density:
    """Base class: an energy density ``f(x, z) >= |z|^p``."""

    kind: str = "abstract"
    convex_in_z: bool = True

    def __init__(self, exponents: ExponentConfig):
        self.exponents = exponents

    @property
    def weight(self) -> Weight | None:
        return None

    def value(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_z(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def minimizer_surrogate(self, y: np.ndarray) -> np.ndarray:
        """Cheap scalar whose argmin over y locates a common-minimizer candidate.

        Lower is better; ties are broken lexicographically by the caller.
        Densities that do not depend on x return a constant.
        """
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1])

    def structure_constants(
        self, domain_radius: float | None = None
    ) -> tuple[float, float, float] | None:
        """Derived ``(K1, K2, K3)`` for the pairwise comparison, if known."""
        return None

    def _check_shapes(self, x: np.ndarray, z: np.ndarray):
        e = self.exponents
        if x.shape[-1] != e.n:
            raise UsageError(f"x has dimension {x.shape[-1]}, expected n={e.n}")
        if z.shape[-2:] != (e.N, e.n):
            raise UsageError(
                f"z has shape {z.shape[-2:]}, expected (N, n)=({e.N}, {e.n})"
            )

    def describe(self) -> str:
        e = self.exponents
        w = self.weight
        wtxt = f", weight={w.describe()}" if w is not None else ""
        return f"{self.kind}(p={e.p}, q={e.q}, n={e.n}, N={e.N}{wtxt})"


class PPowerDensity(Density):
    """The balanced density ``f(x, z) = |z|^p`` (no x-dependence)."""

    kind = "p-power"

    def value(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check_shapes(x, z)
        return _frob(z) ** self.exponents.p

    def grad_z(self, x, z):
        z = np.asarray(z, dtype=float)
        return _power_grad(z, _frob(z), self.exponents.p)

    def structure_constants(self, domain_radius=None):
        return (1.0, 0.0, 0.0)


class DoublePhaseDensity(Density):
    """Product-form density ``f(x, z) = |z|^p + a(x) |z|^q``."""

    kind = "double-phase"

    def __init__(self, exponents: ExponentConfig, weight: Weight):
        super().__init__(exponents)
        self._weight = weight

    @property
    def weight(self):
        return self._weight

    def value(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check_shapes(x, z)
        mag = _frob(z)
        e = self.exponents
        return mag ** e.p + self._weight.value(x) * mag ** e.q

    def grad_z(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        mag = _frob(z)
        e = self.exponents
        grad = _power_grad(z, mag, e.p)
        a = self._weight.value(x)
        grad += a[..., None, None] * _power_grad(z, mag, e.q)
        return grad

    def minimizer_surrogate(self, y):
        return self._weight.value(np.asarray(y, dtype=float))

    def structure_constants(self, domain_radius=None):
        ref = self._weight.reference_comparison_constants()
        if ref is None:
            return None
        c5, c6 = ref
        return (max(c6, 1.0), c5, 0.0)


class OneSidedPhaseDensity(Density):
    """One-sided density ``f(x, z) = |z|^p + a(x) * max(z[1][n], 0)^q``.

    Reads a single gradient entry (component 1, direction n) and only its
    positive part, so ``f(x, z) != f(x, -z)`` wherever the weight is
    positive: a genuinely non-symmetric (non-Uhlenbeck) density.
    """

    kind = "one-sided-phase"

    def __init__(self, exponents: ExponentConfig, weight: Weight):
        super().__init__(exponents)
        self._weight = weight

    @property
    def weight(self):
        return self._weight

    def value(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check_shapes(x, z)
        e = self.exponents
        entry = z[..., 0, e.n - 1]
        return (
            _frob(z) ** e.p
            + self._weight.value(x) * np.maximum(entry, 0.0) ** e.q
        )

    def grad_z(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        e = self.exponents
        grad = _power_grad(z, _frob(z), e.p)
        entry = z[..., 0, e.n - 1]
        coef = self._weight.value(x) * e.q * np.maximum(entry, 0.0) ** (e.q - 1.0)
        grad[..., 0, e.n - 1] += coef
        return grad

    def minimizer_surrogate(self, y):
        return self._weight.value(np.asarray(y, dtype=float))

    def structure_constants(self, domain_radius=None):
        ref = self._weight.reference_comparison_constants()
        if ref is None:
            return None
        c5, c6 = ref
        return (max(c6, 1.0), c5, 0.0)


class ThresholdPhaseDensity(Density):
    """Threshold density ``f(x, z) = |z|^p + g(x1, z[1][n])`` with excess g.

    ``g(x1, t) = max{ max(t,0)^q - max(x1,0)^q, 0 }`` couples the gradient
    entry to the first coordinate: the q-phase is active only where the
    entry exceeds the (positive part of the) coordinate.  Not a product of
    a weight and a z-function, and not symmetric in z.  Its pairwise
    comparison constants on a ball of radius R are K1 = 1, K2 = 0,
    K3 = R^q, with the comparison exponent sigma a free choice.
    """

    kind = "threshold-phase"

    def value(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check_shapes(x, z)
        e = self.exponents
        entry = z[..., 0, e.n - 1]
        return _frob(z) ** e.p + eval_g(x[..., 0], entry, e.q)

    def grad_z(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        e = self.exponents
        grad = _power_grad(z, _frob(z), e.p)
        entry = z[..., 0, e.n - 1]
        active = (entry > 0) & (
            np.maximum(entry, 0.0) ** e.q > np.maximum(x[..., 0], 0.0) ** e.q
        )
        coef = np.where(active, e.q * np.maximum(entry, 0.0) ** (e.q - 1.0), 0.0)
        grad[..., 0, e.n - 1] += coef
        return grad

    def minimizer_surrogate(self, y):
        # g is nonincreasing in x1, so the largest first coordinate wins.
        y = np.asarray(y, dtype=float)
        return -y[..., 0]

    def structure_constants(self, domain_radius=None):
        if domain_radius is None:
            raise UsageError(
                "threshold-phase comparison constants need the domain radius "
                "(K3 = R^q)"
            )
        return (1.0, 0.0, float(domain_radius) ** self.exponents.q)


class FrobeniusPowerTerm:
    """Composite building block ``b(z) = |z|^r``."""

    def __init__(self, power: float):
        if power <= 1:
            raise UsageError(f"term power must exceed 1, got {power}")
        self.power = float(power)

    def value(self, z):
        return _frob(z) ** self.power

    def grad(self, z):
        return _power_grad(z, _frob(z), self.power)

    def describe(self):
        return f"|z|^{self.power}"


class EntryPosPowerTerm:
    """Composite building block ``b(z) = max(z[alpha][i], 0)^r`` (1-based labels)."""

    def __init__(self, power: float, component: int, direction: int):
        if power <= 1:
            raise UsageError(f"term power must exceed 1, got {power}")
        self.power = float(power)
        self.component = int(component)
        self.direction = int(direction)

    def value(self, z):
        t = z[..., self.component - 1, self.direction - 1]
        return np.maximum(t, 0.0) ** self.power

    def grad(self, z):
        g = np.zeros_like(z)
        t = z[..., self.component - 1, self.direction - 1]
        g[..., self.component - 1, self.direction - 1] = (
            self.power * np.maximum(t, 0.0) ** (self.power - 1.0)
        )
        return g

    def describe(self):
        return f"max(z[{self.component}][{self.direction}],0)^{self.power}"


class CompositeDensity(Density):
    """Finite sum ``f(x, z) = |z|^p + sum_j w_j(x) * b_j(z)``.

    Each term pairs a weight with a convex z-block (a Frobenius power or a
    positive-part entry power).  The leading ``|z|^p`` keeps the density
    p-coercive no matter what the terms do.
    """

    kind = "composite"

    def __init__(self, exponents: ExponentConfig, terms):
        super().__init__(exponents)
        self.terms = list(terms)
        if not self.terms:
            raise UsageError("composite density needs at least one term")

    def value(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check_shapes(x, z)
        total = _frob(z) ** self.exponents.p
        for weight, block in self.terms:
            total = total + weight.value(x) * block.value(z)
        return total

    def grad_z(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        grad = _power_grad(z, _frob(z), self.exponents.p)
        for weight, block in self.terms:
            grad += weight.value(x)[..., None, None] * block.grad(z)
        return grad

    def minimizer_surrogate(self, y):
        y = np.asarray(y, dtype=float)
        total = np.zeros(y.shape[:-1])
        for weight, _ in self.terms:
            total = total + weight.value(y)
        return total

    def describe(self):
        e = self.exponents
        parts = " + ".join(
            f"{w.describe()}*{b.describe()}" for w, b in self.terms
        )
        return f"composite(p={e.p}: |z|^p + {parts})"


def growth_probe(
    density: Density,
    points: np.ndarray,
    matrices: np.ndarray,
    c1: float,
    c2: float,
) -> dict:
    """Sampled sanity check of the growth envelope ``|z|^p <= f <= c1|z|^q + c2``.

    Returns the worst margins over the sample; callers decide what to do
    with them.  This is a report, not a stored certificate.
    """
    x = np.asarray(points, dtype=float)
    z = np.asarray(matrices, dtype=float)
    vals = density.value(x, z)
    mag = _frob(z)
    e = density.exponents
    lower_margin = float(np.min(vals - mag ** e.p))
    upper_margin = float(np.min(c1 * mag ** e.q + c2 - vals))
    return {
        "samples": int(vals.size),
        "lower_margin": lower_margin,
        "upper_margin": upper_margin,
        "lower_ok": bool(lower_margin >= -1e-12),
        "upper_ok": bool(upper_margin >= -1e-12),
    }


def eval_density(density: Density, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate a density at points ``x`` (..., n) and matrices ``z`` (..., N, n)."""
    return density.value(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
