"""Named analytic field recipes used by experiments and tests.

Each recipe returns a callable ``fn(points) -> values`` mapping an array
of shape ``(..., n)`` to ``(..., N)``, suitable for
:func:`duophase.fields.sample_function` — and resamplable on refined
grids, which the convergence experiments need.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .sampling import lattice_window


def affine_field(matrix, offset) -> callable:
    """``u(x) = A x + b`` with ``A`` of shape (N, n) and ``b`` of shape (N,)."""
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(offset, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise UsageError("affine field needs A of shape (N, n) and b of shape (N,)")

    def fn(points):
        return np.einsum("ai,...i->...a", A, np.asarray(points, dtype=float)) + b

    return fn


def constant_field(values) -> callable:
    vals = np.atleast_1d(np.asarray(values, dtype=float))

    def fn(points):
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(vals, points.shape[:-1] + vals.shape).copy()

    return fn


def kink_field(
    n: int,
    N: int,
    kink_pos: float = 0.5,
    kink_exp: float = 0.75,
    amplitude: float = 1.0,
) -> callable:
    """First component ``|x1 - kink_pos|^{1 + kink_exp}``, smooth rest.

    The first component has a gradient kink along the hyperplane
    ``x1 = kink_pos`` (the gradient is Hölder but not Lipschitz there for
    ``kink_exp < 1``), which is exactly the regime where mollified-energy
    convergence is worth measuring.  Remaining components are smooth
    trigonometric blends so vector-valued machinery stays exercised.
    """
    if kink_exp <= 0:
        raise UsageError(f"kink exponent must be positive, got {kink_exp}")

    def fn(points):
        points = np.asarray(points, dtype=float)
        out = np.empty(points.shape[:-1] + (N,))
        out[..., 0] = amplitude * np.abs(points[..., 0] - kink_pos) ** (1.0 + kink_exp)
        for a in range(1, N):
            phase = points[..., 0] + 0.7 * points[..., min(1, n - 1)]
            out[..., a] = 0.5 * np.sin(np.pi * phase + a) / (a + 1.0)
        return out

    return fn


def smooth_random_field(n: int, N: int, seed: int, waves: int = 4) -> callable:
    """Seeded random trigonometric polynomial with decaying coefficients."""
    u = lattice_window(0, waves * N, 2 * n + 2, seed)
    freqs = np.floor(1 + 3 * u[:, :n]).reshape(N, waves, n)  # integer 1..3
    phases = (2 * np.pi * u[:, n : 2 * n]).reshape(N, waves, n)
    amps = (0.5 + u[:, -1]).reshape(N, waves) / (1.0 + np.arange(waves))

    def fn(points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (N,))
        for a in range(N):
            for w in range(waves):
                arg = np.sum(
                    freqs[a, w] * points + phases[a, w], axis=-1
                )
                out[..., a] += amps[a, w] * np.sin(arg)
        return out

    return fn


def harmonic_quadratic_field(n: int, N: int, amplitude: float = 1.0) -> callable:
    """Saddle quadratic ``amplitude * (x1^2 - x2^2)`` in the first component.

    Harmonic, so it minimizes the 2-growth Dirichlet energy among fields
    with its own boundary values; remaining components are zero.  Needs
    ``n >= 2``.
    """
    if n < 2:
        raise UsageError("the harmonic saddle needs at least two variables")

    def fn(points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (N,))
        out[..., 0] = amplitude * (
            points[..., 0] ** 2 - points[..., 1] ** 2
        )
        return out

    return fn


def radial_bump_field(n: int, N: int, scale: float = 1.0) -> callable:
    """Smooth compact-ish bump ``exp(-|x|^2 / scale)`` in every component."""

    def fn(points):
        points = np.asarray(points, dtype=float)
        r2 = np.sum(points * points, axis=-1)
        base = np.exp(-r2 / scale)
        return np.stack([base / (a + 1.0) for a in range(N)], axis=-1)

    return fn


def make_field(kind: str, n: int, N: int, seed: int = 0, **params) -> callable:
    """Field recipe registry for config-driven experiments."""
    if kind == "affine":
        matrix = params.get("matrix")
        offset = params.get("offset")
        if matrix is None:
            matrix = np.zeros((N, n))
            matrix[0, 0] = 1.0
        if offset is None:
            offset = np.zeros(N)
        return affine_field(np.asarray(matrix, float).reshape(N, n), offset)
    if kind == "constant":
        return constant_field(params.get("values", np.ones(N)))
    if kind == "kink":
        return kink_field(
            n,
            N,
            kink_pos=float(params.get("kink_pos", 0.5)),
            kink_exp=float(params.get("kink_exp", 0.75)),
            amplitude=float(params.get("amplitude", 1.0)),
        )
    if kind == "smooth-random":
        return smooth_random_field(n, N, seed, waves=int(params.get("waves", 4)))
    if kind == "harmonic":
        return harmonic_quadratic_field(
            n, N, amplitude=float(params.get("amplitude", 1.0))
        )
    if kind == "radial-bump":
        return radial_bump_field(n, N, scale=float(params.get("scale", 1.0)))
    raise UsageError(
        f"unknown field kind {kind!r}; known: affine, constant, harmonic, "
        "kink, smooth-random, radial-bump"
    )
