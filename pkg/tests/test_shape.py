import numpy as np
import pytest

from scatterdepth import (
    Dataset,
    DirectionBudget,
    GaussianModel,
    LocationSpec,
    ScaleFunctional,
    ScatterDepthEvaluator,
    ShapeMatrix,
    SpdMatrix,
    gaussian_shape_depth,
    scale_and_shape,
    shape_depth,
    shape_region_contains,
)

from conftest import rand_invertible, rand_spd

ORIGIN2 = LocationSpec.fixed([0.0, 0.0])


class TestScaleFunctionals:
    def test_unit_at_identity(self):
        for s in ScaleFunctional:
            assert s(SpdMatrix(np.eye(3))) == pytest.approx(1.0, abs=1e-14)

    def test_homogeneous(self, rng):
        sigma = rand_spd(rng, 3)
        for s in ScaleFunctional:
            assert s(SpdMatrix(2.5 * sigma.entries)) == pytest.approx(
                2.5 * s(sigma), rel=1e-12
            )

    def test_monotone_in_psd_order(self, rng):
        for _ in range(40):
            a = rand_spd(rng, 3)
            bump = rng.standard_normal((3, 1))
            b = SpdMatrix(a.entries + bump @ bump.T)
            for s in ScaleFunctional:
                assert s(b) >= s(a) - 1e-12

    def test_named_lookup(self):
        assert ScaleFunctional.from_name("det") is ScaleFunctional.DET
        with pytest.raises(ValueError):
            ScaleFunctional.from_name("nope")


class TestScaleAndShape:
    def test_trace_example(self):
        scale, shape = scale_and_shape(SpdMatrix(3.0 * np.eye(2)), ScaleFunctional.TRACE)
        assert scale == pytest.approx(3.0)
        assert np.allclose(shape.entries, np.eye(2), atol=1e-12)

    def test_det_example(self):
        scale, shape = scale_and_shape(SpdMatrix(np.diag([4.0, 1.0])), ScaleFunctional.DET)
        assert scale == pytest.approx(2.0, rel=1e-12)
        assert np.allclose(shape.entries, np.diag([2.0, 0.5]), atol=1e-12)

    def test_first_entry_example(self):
        scale, shape = scale_and_shape(
            SpdMatrix([[3.0, 1.0], [1.0, 1.0]]), ScaleFunctional.FIRST_ENTRY
        )
        assert scale == pytest.approx(3.0)
        assert np.allclose(
            shape.entries, [[1.0, 1.0 / 3.0], [1.0 / 3.0, 1.0 / 3.0]], atol=1e-12
        )

    def test_unit_scale_invariant(self, rng):
        for s in ScaleFunctional:
            sigma = rand_spd(rng, 3)
            _, shape = scale_and_shape(sigma, s)
            assert s(shape.matrix) == pytest.approx(1.0, abs=1e-10)

    def test_shape_matrix_validates(self, rng):
        sigma = rand_spd(rng, 2)
        if abs(ScaleFunctional.TRACE(sigma) - 1.0) > 1e-6:
            with pytest.raises(ValueError, match="scale"):
                ShapeMatrix(sigma, ScaleFunctional.TRACE)


class TestShapeDepth:
    def test_gaussian_sample_true_shape(self, rng):
        model = GaussianModel(SpdMatrix(np.eye(2)))
        data = Dataset(model.sample(2000, rng))
        result = shape_depth(
            data, LocationSpec.coord_median(), SpdMatrix(np.eye(2)), DirectionBudget(800, 3)
        )
        assert result.value == pytest.approx(0.5, abs=0.05)

    def test_ray_invariance(self, rng):
        data = Dataset(rng.standard_normal((60, 2)))
        budget = DirectionBudget(300, 1)
        sigma = rand_spd(rng, 2)
        values = []
        for c in (0.1, 1.0, 42.0):
            _, shape = scale_and_shape(SpdMatrix(c * sigma.entries), ScaleFunctional.DET)
            values.append(shape_depth(data, ORIGIN2, shape, budget).value)
        assert values[0] == values[1] == values[2]

    def test_univariate_matches_msd_objective(self, rng):
        # Oracle: the profile maximum over the ray equals the best value of
        # the dispersion objective over the squared-deviation candidates.
        x = rng.standard_normal(41)
        data = Dataset(x)
        center = 0.0
        sq = np.sort(x**2)
        cands = np.concatenate([sq, 0.5 * (sq[:-1] + sq[1:])])
        best = max(
            min(np.count_nonzero(sq <= c), np.count_nonzero(sq >= c)) for c in cands
        ) / x.size
        result = shape_depth(data, LocationSpec.fixed([center]), SpdMatrix([[1.0]]), DirectionBudget(8, 0))
        assert result.value == pytest.approx(best)

    def test_dominates_every_probed_scale(self, rng):
        data = Dataset(rng.standard_normal((50, 2)))
        budget = DirectionBudget(200, 2)
        _, shape = scale_and_shape(rand_spd(rng, 2), ScaleFunctional.TRACE)
        result = shape_depth(data, ORIGIN2, shape, budget)
        evaluator = ScatterDepthEvaluator(data, ORIGIN2, budget.generate(2))
        for c in np.geomspace(1e-3, 1e3, 25):
            assert result.value >= evaluator.value(c * shape.entries) - 1e-12
        # The reported scale reproduces the reported value.
        assert evaluator.value(result.scale * shape.entries) == result.value

    def test_extra_scales_probed(self, rng):
        data = Dataset(rng.standard_normal((30, 2)))
        budget = DirectionBudget(100, 5)
        _, shape = scale_and_shape(rand_spd(rng, 2), ScaleFunctional.DET)
        evaluator = ScatterDepthEvaluator(data, ORIGIN2, budget.generate(2))
        probe = 0.7321
        result = shape_depth(data, ORIGIN2, shape, budget, extra_scales=(probe,))
        assert result.value >= evaluator.value(probe * shape.entries)

    def test_affine_invariance_matched(self, rng):
        obs = rng.standard_normal((24, 2))
        a = rand_invertible(rng, 2)
        b = rng.standard_normal(2)
        theta = rng.standard_normal(2)
        u = DirectionBudget(150, 7).generate(2)
        mapped = u @ a
        mapped /= np.linalg.norm(mapped, axis=1)[:, None]
        _, v = scale_and_shape(rand_spd(rng, 2), ScaleFunctional.TRACE)
        transformed_raw = SpdMatrix(a @ v.entries @ a.T)
        s_prime = ScaleFunctional.TRACE(transformed_raw)
        _, v_prime = scale_and_shape(transformed_raw, ScaleFunctional.TRACE)
        grid = np.geomspace(1e-4, 1e4, 33)
        original = shape_depth(
            Dataset(obs), LocationSpec.fixed(theta), v, mapped, grid=grid, refine=False
        )
        transformed = shape_depth(
            Dataset(obs @ a.T + b),
            LocationSpec.fixed(a @ theta + b),
            v_prime,
            u,
            grid=grid * s_prime,
            refine=False,
        )
        assert transformed.value == original.value

    def test_quasi_concave_along_linear_shape_paths(self, rng):
        # Trace and first-entry shapes are closed under linear interpolation;
        # the profile depth along such paths stays above the endpoint floor.
        data = Dataset(rng.standard_normal((40, 2)))
        budget = DirectionBudget(150, 11)
        u = budget.generate(2)
        for functional in (ScaleFunctional.TRACE, ScaleFunctional.FIRST_ENTRY):
            _, va = scale_and_shape(rand_spd(rng, 2), functional)
            _, vb = scale_and_shape(rand_spd(rng, 2), functional)
            fa = shape_depth(data, ORIGIN2, va, u).value
            fb = shape_depth(data, ORIGIN2, vb, u).value
            floor = min(fa, fb)
            for t in np.linspace(0.0, 1.0, 21):
                mid = SpdMatrix((1.0 - t) * va.entries + t * vb.entries)
                assert functional(mid) == pytest.approx(1.0, abs=1e-10)
                assert shape_depth(data, ORIGIN2, mid, u).value >= floor - 1e-12

    def test_geodesic_and_harmonic_shape_quasi_concavity_elliptical(self):
        # On elliptical data, where scatter depth is geodesic and harmonic
        # quasi-concave, determinant shapes stay quasi-concave along
        # geodesics and inverse-trace shapes along harmonic paths.
        from scatterdepth import GAUSSIAN_QUARTILE, PathKind, PathSpec, path_point

        rng = np.random.default_rng(414)
        data = Dataset(rng.standard_normal((400, 2)) / GAUSSIAN_QUARTILE)
        u = DirectionBudget(250, 17).generate(2)
        pairs = [
            (ScaleFunctional.DET, PathKind.GEODESIC),
            (ScaleFunctional.INV_TRACE, PathKind.HARMONIC),
        ]
        for functional, kind in pairs:
            gen = np.random.default_rng(515)
            _, va = scale_and_shape(rand_spd(gen, 2, log_range=0.9), functional)
            _, vb = scale_and_shape(rand_spd(gen, 2, log_range=0.9), functional)
            p = PathSpec(va.matrix, vb.matrix, kind)
            fa = shape_depth(data, ORIGIN2, va, u).value
            fb = shape_depth(data, ORIGIN2, vb, u).value
            floor = min(fa, fb)
            for t in np.linspace(0.0, 1.0, 51):
                mid = path_point(p, t)
                assert shape_depth(data, ORIGIN2, mid, u).value >= floor - 1e-12

    def test_path_closure_by_functional(self, rng):
        from scatterdepth import PathKind, PathSpec, path_point

        pairs = [
            (ScaleFunctional.DET, PathKind.GEODESIC),
            (ScaleFunctional.INV_TRACE, PathKind.HARMONIC),
            (ScaleFunctional.TRACE, PathKind.LINEAR),
            (ScaleFunctional.FIRST_ENTRY, PathKind.LINEAR),
        ]
        for functional, kind in pairs:
            _, va = scale_and_shape(rand_spd(rng, 3), functional)
            _, vb = scale_and_shape(rand_spd(rng, 3), functional)
            p = PathSpec(va.matrix, vb.matrix, kind)
            for t in np.linspace(0.0, 1.0, 11):
                assert functional(path_point(p, t)) == pytest.approx(1.0, abs=1e-10)

    def test_boundary_flag(self, rng):
        data = Dataset(rng.standard_normal((20, 2)))
        grid = np.geomspace(1e5, 1e7, 5)
        _, shape = scale_and_shape(SpdMatrix(np.eye(2)), ScaleFunctional.TRACE)
        with pytest.warns(UserWarning, match="boundary"):
            result = shape_depth(
                data, ORIGIN2, shape, DirectionBudget(64, 0), grid=grid
            )
        assert result.at_grid_boundary


class TestShapeRegion:
    def test_alpha_zero(self, rng):
        data = Dataset(rng.standard_normal((15, 2)))
        _, shape = scale_and_shape(rand_spd(rng, 2), ScaleFunctional.DET)
        assert shape_region_contains(data, ORIGIN2, shape, 0.0, DirectionBudget(64, 0))

    def test_true_shape_high_depth(self, rng):
        model = GaussianModel(SpdMatrix(np.eye(2)))
        data = Dataset(model.sample(2000, rng))
        assert shape_region_contains(
            data, LocationSpec.coord_median(), SpdMatrix(np.eye(2)), 0.4, DirectionBudget(500, 1)
        )

    def test_extreme_shape_rejected(self, rng):
        model = GaussianModel(SpdMatrix(np.eye(2)))
        data = Dataset(model.sample(1500, rng))
        _, extreme = scale_and_shape(SpdMatrix(np.diag([1e6, 1.0])), ScaleFunctional.TRACE)
        # Analytic profile depth of this shape is far below 0.3.
        assert gaussian_shape_depth(SpdMatrix(np.eye(2)), extreme.matrix) < 0.05
        assert not shape_region_contains(
            data, LocationSpec.coord_median(), extreme, 0.3, DirectionBudget(400, 2)
        )
