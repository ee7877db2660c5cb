"""Vora-Value evaluation against independent oracles and its invariants."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_random_camera, make_random_filter
from oracles import conditioned_sensor_matrix, exact_filtered_vora, exact_vora
from vorafilter import (
    DEFAULT_GRID,
    FilterSpectrum,
    GridMismatch,
    SensorSet,
    VoraValue,
    WavelengthGrid,
    filtered_vora_value,
    regularized_objective,
    vora_value,
)

N = DEFAULT_GRID.count


def random_invertible_3x3(rng: np.random.Generator) -> np.ndarray:
    t = rng.uniform(-1.0, 1.0, (3, 3))
    while abs(np.linalg.det(t)) < 1e-2:
        t = rng.uniform(-1.0, 1.0, (3, 3))
    return t


class TestVoraValue:
    def test_self_similarity_is_one(self, observer):
        assert abs(vora_value(observer, observer).raw - 1.0) < 1e-12

    def test_linear_transform_of_observer_is_one(self, observer):
        rng = np.random.default_rng(0)
        for _ in range(5):
            t = random_invertible_3x3(rng)
            cam = SensorSet(grid=DEFAULT_GRID, responses=observer.responses @ t)
            assert abs(vora_value(cam, observer).raw - 1.0) < 1e-10

    def test_orthogonal_complement_is_zero(self, observer):
        # columns 3..5 of a full QR of [X | R] are orthogonal to span(X)
        rng = np.random.default_rng(1)
        stacked = np.column_stack([observer.responses,
                                   rng.standard_normal((N, 3))])
        q, _ = np.linalg.qr(stacked)
        cam = SensorSet(grid=DEFAULT_GRID, responses=q[:, 3:6])
        assert abs(vora_value(cam, observer).raw) < 1e-12

    def test_pinned_camera_matches_exact_oracle(self, camera, observer):
        got = vora_value(camera, observer).raw
        want = exact_vora(camera.responses, observer.responses)
        assert 0.0 < got < 1.0
        assert abs(got - want) < 1e-12

    def test_symmetry(self, camera, observer):
        ab = vora_value(camera, observer).raw
        ba = vora_value(observer, camera).raw
        assert abs(ab - ba) < 1e-12

    def test_basis_invariance_both_arguments(self, camera, observer):
        rng = np.random.default_rng(2)
        base = vora_value(camera, observer).raw
        for _ in range(5):
            cam = SensorSet(grid=DEFAULT_GRID,
                            responses=camera.responses @ random_invertible_3x3(rng))
            obs = SensorSet(grid=DEFAULT_GRID,
                            responses=observer.responses @ random_invertible_3x3(rng))
            assert abs(vora_value(cam, obs).raw - base) < 1e-10

    def test_bounds_on_random_pairs(self):
        for seed in range(100):
            a = make_random_camera(2 * seed)
            b = make_random_camera(2 * seed + 1)
            raw = vora_value(a, b).raw
            assert -1e-12 <= raw <= 1.0 + 1e-12

    def test_dual_formula_up_to_condition_1e6(self, observer):
        rng = np.random.default_rng(3)
        for condition in (1e0, 1e3, 1e6):
            for _ in range(5):
                m = conditioned_sensor_matrix(rng, N, condition)
                cam = SensorSet(grid=DEFAULT_GRID, responses=m)
                got = vora_value(cam, observer).raw
                want = exact_vora(m, observer.responses)
                assert abs(got - want) < 1e-9

    def test_grid_mismatch_rejected(self, observer):
        other = WavelengthGrid(400.0, 10.0, 30)
        cam = SensorSet(grid=other, responses=make_random_camera(0, other).responses)
        with pytest.raises(GridMismatch):
            vora_value(cam, observer)

    def test_clamped_view(self):
        vv = VoraValue(raw=1.0 + 5e-13)
        assert vv.value == 1.0
        assert vv.raw > 1.0
        with pytest.raises(ValueError):
            VoraValue(raw=1.1)


class TestFilteredVoraValue:
    def test_unit_filter_is_exact_same_value(self, camera, observer):
        filt = FilterSpectrum.ones(DEFAULT_GRID)
        assert filtered_vora_value(camera, observer, filt).raw == \
            vora_value(camera, observer).raw

    def test_scale_invariance(self, camera, observer):
        filt = make_random_filter(9)
        base = filtered_vora_value(camera, observer, filt).raw
        for k in (0.1, 10.0):
            scaled = FilterSpectrum(grid=DEFAULT_GRID,
                                    transmittance=k * filt.transmittance,
                                    tau_min=1e-6, tau_max=20.0)
            assert abs(filtered_vora_value(camera, observer, scaled).raw - base) < 1e-12

    def test_matches_exact_expansion_oracle(self, camera, observer):
        for seed in range(10):
            filt = make_random_filter(seed)
            got = filtered_vora_value(camera, observer, filt).raw
            want = exact_filtered_vora(camera.responses, observer.responses,
                                       filt.transmittance)
            assert abs(got - want) < 1e-9

    def test_improving_filter_raises_value(self, camera, observer):
        # any filter at all changes the value; sanity that it stays in range
        filt = make_random_filter(4)
        raw = filtered_vora_value(camera, observer, filt).raw
        assert -1e-12 <= raw <= 1.0 + 1e-12


class TestRegularizedObjective:
    def test_alpha_zero_equals_filtered_value(self, camera, observer):
        filt = make_random_filter(1)
        assert regularized_objective(camera, observer, filt, 0.0) == \
            filtered_vora_value(camera, observer, filt).raw

    def test_unit_filter_alpha_two_adds_n(self, camera, observer):
        filt = FilterSpectrum.ones(DEFAULT_GRID)
        base = filtered_vora_value(camera, observer, filt).raw
        assert regularized_objective(camera, observer, filt, 2.0) == base + 31.0

    def test_penalty_is_half_alpha_norm_squared(self, camera, observer):
        filt = make_random_filter(8)
        alpha = 1e-3
        mu = regularized_objective(camera, observer, filt, alpha)
        nu = filtered_vora_value(camera, observer, filt).raw
        f = filt.transmittance
        assert abs((mu - nu) - 0.5 * alpha * float(f @ f)) < 1e-14

    def test_negative_alpha_rejected(self, camera, observer):
        with pytest.raises(ValueError):
            regularized_objective(camera, observer,
                                  FilterSpectrum.ones(DEFAULT_GRID), -1.0)


def test_vora_value_float_protocol(camera, observer):
    vv = vora_value(camera, observer)
    assert float(vv) == vv.raw


def test_derivative_containers_interoperate_with_numpy(camera, observer):
    from vorafilter import gradient, hessian
    filt = make_random_filter(40)
    g = gradient(camera, observer, filt)
    h = hessian(camera, observer, filt, alpha=1e-4)
    assert np.asarray(g).shape == (N,)
    solved = np.linalg.solve(np.asarray(h), np.asarray(g))
    assert solved.shape == (N,)
