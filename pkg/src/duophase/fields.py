"""Sampled vector fields on uniform, cell-centered grids.

Background
----------
The experiments in this package integrate energy densities ``f(x, Du(x))``
over balls inside a box-shaped domain.  A map ``u : R^n -> R^N`` is stored
by its values at cell centers of a uniform grid; its gradient is the dense
``N x n`` matrix ``z[alpha][i] = d u^alpha / d x_i``, approximated by
central differences in the interior and one-sided differences on the
boundary (exact for affine maps).  Integrals use the midpoint rule: each
cell contributes ``value(center) * h^n``, and a ball region keeps exactly
the cells whose centers it contains.

Conventions
-----------
* Grids are cell-centered: a grid with ``counts[i]`` cells along axis ``i``
  has nodes at ``lower[i] + (j + 1/2) * h``, and the spacing ``h`` is the
  same on every axis.
* Field values are arrays of shape ``counts + (N,)``; gradients have shape
  ``counts + (N, n)``.  Entry ``z[..., 0, i]`` is component 1, direction
  ``i + 1`` (0-based array indices, 1-based math labels).
* CSV files carry one row per node, ``i1,...,in,u1,...,uN``, in row-major
  (C) node order with 0-based indices, preceded by a mandatory header row
  and '#'-prefixed metadata lines describing the grid.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

#: Relative slack for "algebraically exact" floating-point comparisons.
ALGEBRAIC_TOL = 1e-12


def fmt(v: float) -> str:
    """Shortest round-trip decimal form of a float (deterministic)."""
    return repr(float(v))


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball ``{x : |x - center| <= radius}``."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise UsageError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask for points (shape ``(..., dim)``) inside the closed ball."""
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise UsageError(
                f"point dimension {points.shape[-1]} != ball dimension {self.dim}"
            )
        delta = points - np.asarray(self.center)
        return np.sqrt(np.sum(delta * delta, axis=-1)) <= self.radius


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on a box ``[lower, upper] ⊂ R^n``, n >= 2.

    ``counts[i]`` is the number of cells (= nodes) along axis ``i``; the
    spacing ``h = (upper[i] - lower[i]) / counts[i]`` must agree on every
    axis to within 1e-12 relative.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        n = len(self.lower)
        if n < 2:
            raise UsageError(f"grid dimension must be >= 2, got {n}")
        if len(self.upper) != n or len(self.counts) != n:
            raise UsageError("lower, upper and counts must have equal length")
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise UsageError("grid upper bounds must exceed lower bounds")
        if any(c < 2 for c in self.counts):
            raise UsageError("grid needs at least 2 cells per axis")
        spacings = [
            (u - l) / c for l, u, c in zip(self.lower, self.upper, self.counts)
        ]
        h0 = spacings[0]
        if any(abs(h - h0) > 1e-12 * max(1.0, abs(h0)) for h in spacings):
            raise UsageError(f"grid spacing differs across axes: {spacings}")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def spacing(self) -> float:
        return (self.upper[0] - self.lower[0]) / self.counts[0]

    def axis_nodes(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        h = self.spacing
        return self.lower[axis] + (np.arange(self.counts[axis]) + 0.5) * h

    def node_points(self) -> np.ndarray:
        """All cell centers, shape ``counts + (dim,)``."""
        axes = [self.axis_nodes(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def interior_margin(self, center: tuple[float, ...]) -> float:
        """Distance from ``center`` to the nearest box face."""
        return min(
            min(c - l, u - c)
            for c, l, u in zip(center, self.lower, self.upper)
        )

    def shrink(self, cells: int) -> "Grid":
        """The grid obtained by dropping ``cells`` cells from every side."""
        if cells <= 0:
            return self
        h = self.spacing
        if any(c - 2 * cells < 1 for c in self.counts):
            raise UsageError(
                f"shrinking by {cells} cells per side leaves an empty grid"
            )
        return Grid(
            lower=tuple(l + cells * h for l in self.lower),
            upper=tuple(u - cells * h for u in self.upper),
            counts=tuple(c - 2 * cells for c in self.counts),
        )


@dataclass
class SampledField:
    """Values of a map ``u : box -> R^N`` at the grid's cell centers."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = tuple(self.grid.counts)
        if self.values.ndim != self.grid.dim + 1 or self.values.shape[:-1] != expected:
            raise UsageError(
                f"field values must have shape {expected + ('N',)}, "
                f"got {self.values.shape}"
            )
        if self.values.shape[-1] < 1:
            raise UsageError("field needs at least one value component")

    @property
    def value_dim(self) -> int:
        return self.values.shape[-1]


def sample_function(grid: Grid, fn, value_dim: int | None = None) -> SampledField:
    """Sample ``fn(points) -> (..., N)`` at the grid nodes."""
    vals = np.asarray(fn(grid.node_points()), dtype=float)
    if vals.ndim == grid.dim:  # scalar-valued convenience
        vals = vals[..., None]
    if value_dim is not None and vals.shape[-1] != value_dim:
        raise UsageError(
            f"sampled function returned {vals.shape[-1]} components, "
            f"expected {value_dim}"
        )
    return SampledField(grid, vals)


def discrete_gradient(field: SampledField) -> np.ndarray:
    """Finite-difference gradient, shape ``counts + (N, n)``.

    Central differences at interior nodes, one-sided differences on the
    boundary; both are exact for affine maps.
    """
    h = field.grid.spacing
    per_component = []
    for alpha in range(field.value_dim):
        comps = np.gradient(field.values[..., alpha], h, edge_order=1)
        if field.grid.dim == 1:  # np.gradient returns a bare array for 1-D
            comps = [comps]
        per_component.append(np.stack(comps, axis=-1))
    return np.stack(per_component, axis=-2)


def frobenius(values: np.ndarray, grid_dim: int) -> np.ndarray:
    """Pointwise Euclidean/Frobenius magnitude over trailing value axes."""
    values = np.asarray(values, dtype=float)
    trailing = tuple(range(grid_dim, values.ndim))
    if not trailing:
        return np.abs(values)
    return np.sqrt(np.sum(values * values, axis=trailing))


def require_ball_inside(grid: Grid, ball: Ball) -> None:
    """Raise unless the closed ball is contained in the grid's box."""
    if ball.dim != grid.dim:
        raise UsageError(
            f"ball dimension {ball.dim} != grid dimension {grid.dim}"
        )
    for c, l, u in zip(ball.center, grid.lower, grid.upper):
        if c - ball.radius < l - ALGEBRAIC_TOL or c + ball.radius > u + ALGEBRAIC_TOL:
            raise UsageError(
                f"ball B({ball.center}, {ball.radius}) is not contained in "
                f"the grid box {grid.lower} .. {grid.upper}"
            )


def lp_norm(
    grid: Grid,
    values: np.ndarray,
    p: float,
    region: Ball | None = None,
) -> float:
    """Midpoint-rule ``L^p`` norm of a node-sampled quantity.

    ``values`` may be scalar (shape ``counts``), vector (``counts + (N,)``)
    or matrix valued (``counts + (N, n)``); the pointwise magnitude is the
    Frobenius norm.  With a ``region``, exactly the cells whose centers lie
    in the closed ball contribute (the ball must sit inside the grid box);
    otherwise the whole grid does.
    """
    if p < 1:
        raise UsageError(f"lp_norm requires p >= 1, got {p}")
    if region is not None:
        require_ball_inside(grid, region)
    mag = frobenius(values, grid.dim)
    if mag.shape != tuple(grid.counts):
        raise UsageError(
            f"values leading shape {mag.shape} does not match grid {grid.counts}"
        )
    if region is not None:
        mask = region.contains(grid.node_points())
        mag = mag[mask]
    return float(np.sum(mag ** p) * grid.cell_volume()) ** (1.0 / p)


def vectorial_truncation(field: SampledField, k: float) -> SampledField:
    """Radial truncation at height ``k``: ``u`` where ``|u| <= k``, else ``k u/|u|``.

    Idempotent by construction: rescaling repeats (at most a few times)
    until every node magnitude is <= k in floating point, so applying the
    truncation to its own output is exactly the identity.
    """
    if k <= 0:
        raise UsageError(f"truncation level must be positive, got {k}")
    vals = field.values.copy()
    for _ in range(60):  # each pass strictly shrinks offending magnitudes
        mag = frobenius(vals, field.grid.dim)
        over = mag > k
        if not np.any(over):
            break
        scale = np.ones_like(mag)
        scale[over] = k / mag[over]
        vals = vals * scale[..., None]
    else:  # pragma: no cover - magnitudes decrease strictly, cannot loop forever
        raise RuntimeError("truncation rescaling failed to stabilize")
    return SampledField(field.grid, vals)


def truncation_gradient_identity(
    field: SampledField, k: float, node: tuple[int, ...]
) -> np.ndarray:
    """Chain-rule gradient of the radial truncation at one superlevel node.

    At a node with ``|u| > k`` the matrix is ``(k/|u|) (I - û ⊗ û) Du``
    with ``û = u/|u|`` — explicitly, row alpha is
    ``(k/|u|) [D u^alpha - (u^alpha/|u|) Σ_beta (u^beta/|u|) D u^beta]``.
    Since ``I - û ⊗ û`` is an orthogonal projection and ``k/|u| < 1``, the
    result never exceeds ``|Du|`` in Frobenius norm (Cauchy-Schwarz).  For
    scalar fields (N = 1) the projection kills everything: the matrix is
    identically 0.  Raises when ``|u(node)| <= k`` — below the level the
    truncation is the identity and this formula does not apply.
    """
    node = tuple(int(i) for i in node)
    u_node = field.values[node]
    if float(np.sqrt(np.sum(u_node * u_node))) <= k:
        raise UsageError(
            f"node {node} has |u| <= k = {k}; the truncation gradient "
            "identity applies only above the truncation level"
        )
    return truncation_gradient_field(field, k)[node]


def truncation_gradient_field(
    field: SampledField, k: float, grad: np.ndarray | None = None
) -> np.ndarray:
    """The a.e. gradient of the radial truncation at every node.

    Applies the chain-rule identity of
    :func:`truncation_gradient_identity` on ``{|u| > k}`` and keeps ``Du``
    on ``{|u| <= k}``.
    """
    if k <= 0:
        raise UsageError(f"truncation level must be positive, got {k}")
    if grad is None:
        grad = discrete_gradient(field)
    u = field.values
    mag = frobenius(u, field.grid.dim)
    over = mag > k
    result = np.array(grad, dtype=float, copy=True)
    if np.any(over):
        u_over = u[over]  # (m, N)
        mag_over = mag[over][:, None, None]  # (m, 1, 1)
        grad_over = grad[over]  # (m, N, n)
        unit = u_over / mag[over][:, None]  # (m, N)
        radial = np.einsum("mb,mbi->mi", unit, grad_over)  # (m, n)
        projected = grad_over - unit[:, :, None] * radial[:, None, :]
        result[over] = (k / mag_over) * projected
    return result


def export_csv(
    field: SampledField,
    target,
    metadata: dict[str, str] | None = None,
) -> None:
    """Write a field as CSV: metadata lines, header, one row per node.

    ``target`` is a path or a text buffer.  Rows appear in row-major (C)
    node order; indices are 0-based; floats use shortest round-trip
    formatting so identical fields serialize to identical bytes.
    """
    buf = io.StringIO()
    g = field.grid
    buf.write("# duophase-field\n")
    buf.write("# grid_lower=" + ",".join(fmt(v) for v in g.lower) + "\n")
    buf.write("# grid_upper=" + ",".join(fmt(v) for v in g.upper) + "\n")
    buf.write("# grid_counts=" + ",".join(str(c) for c in g.counts) + "\n")
    buf.write(f"# value_dim={field.value_dim}\n")
    for key, val in (metadata or {}).items():
        buf.write(f"# {key}={val}\n")
    n, N = g.dim, field.value_dim
    header = [f"i{i+1}" for i in range(n)] + [f"u{a+1}" for a in range(N)]
    buf.write(",".join(header) + "\n")
    flat = field.values.reshape(-1, N)
    for pos, idx in enumerate(np.ndindex(*g.counts)):
        row = [str(j) for j in idx] + [fmt(v) for v in flat[pos]]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def import_csv(source, grid: Grid | None = None) -> SampledField:
    """Read a field written by :func:`export_csv`.

    The grid is reconstructed from the '#' metadata lines; pass ``grid``
    explicitly for bare CSV files that lack them.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    meta: dict[str, str] = {}
    rows: list[str] = []
    header: list[str] | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = val.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append(line)
    if header is None:
        raise UsageError("field CSV has no header row")
    if grid is None:
        try:
            lower = tuple(float(v) for v in meta["grid_lower"].split(","))
            upper = tuple(float(v) for v in meta["grid_upper"].split(","))
            counts = tuple(int(v) for v in meta["grid_counts"].split(","))
        except KeyError as exc:
            raise UsageError(
                "field CSV lacks grid metadata; pass the grid explicitly"
            ) from exc
        grid = Grid(lower, upper, counts)
    n = grid.dim
    n_index = sum(1 for c in header if c.startswith("i"))
    value_names = [c for c in header if c.startswith("u")]
    if n_index != n or not value_names:
        raise UsageError(
            f"field CSV header {header} does not match an n={n} grid"
        )
    N = len(value_names)
    expected_rows = int(np.prod(grid.counts))
    if len(rows) != expected_rows:
        raise UsageError(
            f"field CSV has {len(rows)} data rows, grid needs {expected_rows}"
        )
    values = np.empty((expected_rows, N), dtype=float)
    for pos, (line, idx) in enumerate(zip(rows, np.ndindex(*grid.counts))):
        parts = line.split(",")
        if len(parts) != n + N:
            raise UsageError(f"field CSV row has {len(parts)} columns: {line!r}")
        file_idx = tuple(int(v) for v in parts[:n])
        if file_idx != idx:
            raise UsageError(
                f"field CSV rows out of row-major order at {file_idx}, "
                f"expected {idx}"
            )
        values[pos] = [float(v) for v in parts[n:]]
    return SampledField(grid, values.reshape(tuple(grid.counts) + (N,)))
