"""Vertex-grid minimization scheme and the energy-gap probe."""

import numpy as np
import pytest

from duophase.approx.lavrentiev import (
    DescentResult,
    cell_gradient,
    energy_and_gradient,
    lavrentiev_probe,
    minimize,
    vertex_grid,
)
from duophase.densities import (
    DoublePhaseDensity,
    ExponentConfig,
    PPowerDensity,
    StepHolderWeight,
)
from duophase.errors import UsageError
from duophase.fields import Grid
from duophase.testfields import harmonic_quadratic_field

EXACT_SADDLE_ENERGY = 32.0 / 3.0  # ∫_{[-1,1]^2} |D(x1^2 - x2^2)|^2


def dirichlet_density():
    return PPowerDensity(ExponentConfig(p=2.0, q=2.0, n=2, N=1, sigma=1.0))


def zhikov_density():
    return DoublePhaseDensity(
        ExponentConfig(p=2.0, q=2.5, n=2, N=1, sigma=1.0),
        StepHolderWeight(r=0.5, sigma=1.0, jump=0.2),
    )


class TestVertexGrid:
    def test_nodes_are_cell_vertices_including_corners(self):
        g = vertex_grid((-1.0, -1.0), (1.0, 1.0), 4, 2)
        assert g.counts == (5, 5)
        assert np.allclose(g.axis_nodes(0), [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert np.allclose(g.axis_nodes(1), [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_spacing_matches_cell_size(self):
        g = vertex_grid((0.0, 0.0), (2.0, 2.0), 8, 2)
        assert g.spacing == pytest.approx(0.25)

    def test_too_few_cells_rejected(self):
        with pytest.raises(UsageError):
            vertex_grid((0.0, 0.0), (1.0, 1.0), 3, 2)


class TestCellGradient:
    def test_affine_vertex_data_gives_constant_gradient(self):
        g = vertex_grid((-1.0, -1.0), (1.0, 1.0), 4, 2)
        pts = g.node_points()
        vals = (2.0 * pts[..., 0] - 3.0 * pts[..., 1])[..., None]
        grad = cell_gradient(vals, 0.5, 2)
        assert grad.shape == (4, 4, 1, 2)
        assert np.allclose(grad[..., 0, 0], 2.0, atol=1e-13)
        assert np.allclose(grad[..., 0, 1], -3.0, atol=1e-13)

    def test_quadratic_data_gives_exact_center_gradient(self):
        # the edge-averaged forward difference of a quadratic lands exactly
        # on the gradient at the cell center
        cells = 6
        g = vertex_grid((-1.0, -1.0), (1.0, 1.0), cells, 2)
        pts = g.node_points()
        vals = (pts[..., 0] ** 2 - pts[..., 1] ** 2)[..., None]
        h = 2.0 / cells
        grad = cell_gradient(vals, h, 2)
        centers = Grid((-1.0, -1.0), (1.0, 1.0), (cells, cells)).node_points()
        assert np.allclose(grad[..., 0, 0], 2.0 * centers[..., 0], atol=1e-12)
        assert np.allclose(grad[..., 0, 1], -2.0 * centers[..., 1], atol=1e-12)


class TestEnergyAndGradient:
    def test_assembled_gradient_matches_finite_differences(self):
        cells = 5
        density = zhikov_density()
        vgrid = vertex_grid(-1.0, 1.0, cells, 2)
        centers = Grid((-1.0, -1.0), (1.0, 1.0), (cells, cells)).node_points()
        h = 2.0 / cells
        rng = np.random.default_rng(42)
        vals = rng.normal(size=tuple(vgrid.counts) + (1,))

        e_val, grad = energy_and_gradient(density, centers, vals, h)
        assert np.isfinite(e_val) and e_val > 0.0

        direction = rng.normal(size=vals.shape)
        t = 1e-6
        e_plus, _ = energy_and_gradient(density, centers, vals + t * direction, h)
        e_minus, _ = energy_and_gradient(density, centers, vals - t * direction, h)
        fd = (e_plus - e_minus) / (2.0 * t)
        exact = float(np.sum(grad * direction))
        assert fd == pytest.approx(exact, rel=1e-5)

    def test_saddle_datum_is_discretely_stationary_for_dirichlet(self):
        # the harmonic saddle's interior energy gradient vanishes exactly
        cells = 8
        density = dirichlet_density()
        vgrid = vertex_grid(-1.0, 1.0, cells, 2)
        centers = Grid((-1.0, -1.0), (1.0, 1.0), (cells, cells)).node_points()
        h = 2.0 / cells
        fn = harmonic_quadratic_field(2, 1)
        vals = np.asarray(fn(vgrid.node_points()), dtype=float)
        _, grad = energy_and_gradient(density, centers, vals, h)
        interior = grad[1:-1, 1:-1]
        assert np.max(np.abs(interior)) < 1e-12


class TestMinimize:
    def test_quadratic_bowl_reaches_its_center(self):
        target = np.array([1.0, -2.0, 3.0])

        def objective(x):
            d = x - target
            return float(np.sum(d * d)), 2.0 * d

        x, res = minimize(objective, np.zeros(3), lambda g: g, tol=1e-10)
        assert res.converged
        assert np.allclose(x, target, atol=1e-9)
        assert res.energy < 1e-18

    def test_energies_are_nonincreasing(self):
        rng = np.random.default_rng(0)
        mat = rng.normal(size=(6, 6))
        quad = mat @ mat.T + 6.0 * np.eye(6)

        def objective(x):
            return float(x @ quad @ x), 2.0 * quad @ x

        _, res = minimize(objective, rng.normal(size=6), lambda g: g, tol=1e-12)
        energies = np.array(res.energies)
        assert np.all(np.diff(energies) <= 0.0)
        assert isinstance(res, DescentResult)

    def test_projection_pins_coordinates(self):
        target = np.array([5.0, 5.0])

        def objective(x):
            d = x - target
            return float(np.sum(d * d)), 2.0 * d

        def project(g):
            out = g.copy()
            out[0] = 0.0
            return out

        x, res = minimize(objective, np.zeros(2), project, tol=1e-10)
        assert x[0] == 0.0  # pinned at the start value
        assert x[1] == pytest.approx(5.0, abs=1e-9)


class TestLavrentievProbe:
    def test_dirichlet_datum_has_no_gap_and_exact_energy(self):
        result = lavrentiev_probe(
            dirichlet_density(),
            harmonic_quadratic_field(2, 1),
            (-1.0, -1.0),
            (1.0, 1.0),
            cells_list=(8, 16),
            tol=1e-7,
            kernel_cells=2.5,
        )
        assert len(result.levels) == 2
        for lv in result.levels:
            # subclass inequality enforced by construction
            assert lv.rel_gap >= -1e-12
            assert lv.rel_gap < 1e-6
            assert lv.energy_full == pytest.approx(EXACT_SADDLE_ENERGY, rel=0.02)
            assert lv.full.converged and lv.smooth.converged
        assert result.gaps_decreasing()
        assert "nonconverged" not in result.notes

    def test_double_phase_gap_shrinks_under_refinement(self):
        result = lavrentiev_probe(
            zhikov_density(),
            harmonic_quadratic_field(2, 1),
            (-1.0, -1.0),
            (1.0, 1.0),
            cells_list=(16, 32),
            tol=1e-5,
        )
        gaps = result.rel_gaps()
        assert all(g >= -1e-12 for g in gaps)
        assert result.gaps_decreasing()
        assert gaps[-1] < 0.05

    def test_kernel_must_fit_the_mesh(self):
        with pytest.raises(UsageError, match="kernel"):
            lavrentiev_probe(
                dirichlet_density(),
                harmonic_quadratic_field(2, 1),
                (-1.0, -1.0),
                (1.0, 1.0),
                cells_list=(8,),
                kernel_cells=4.5,
            )

    def test_nonconvex_densities_are_rejected(self):
        density = zhikov_density()
        density.convex_in_z = False
        with pytest.raises(UsageError, match="convex"):
            lavrentiev_probe(
                density,
                harmonic_quadratic_field(2, 1),
                (-1.0, -1.0),
                (1.0, 1.0),
                cells_list=(8,),
            )

    def test_csv_has_header_metadata_and_one_row_per_level(self):
        result = lavrentiev_probe(
            dirichlet_density(),
            harmonic_quadratic_field(2, 1),
            (-1.0, -1.0),
            (1.0, 1.0),
            cells_list=(8,),
            tol=1e-6,
            kernel_cells=2.5,
        )
        text = result.to_csv(metadata={"seed": 0})
        lines = text.splitlines()
        assert lines[0] == "# duophase-minimization-probe"
        assert "# seed=0" in lines
        header = next(l for l in lines if not l.startswith("#"))
        assert header.startswith("cells,h,energy_full,energy_smooth,gap,rel_gap")
        data = [l for l in lines if not l.startswith("#")][1:]
        assert len(data) == 1
        assert data[0].startswith("8,")
