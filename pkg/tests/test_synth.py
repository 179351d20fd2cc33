import numpy as np
import pytest

from mvtri.camera import project
from mvtri.dlt import theorem1_constant
from mvtri.errors import OutOfFrustum
from mvtri.synth import (
    NoiseModel,
    RigConfig,
    in_frustum,
    noise_accuracy_sweep,
    sample_scene,
    sigma_min_sweep,
)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(-1.0)


def test_zero_noise_copies_projections(rig):
    scene = sample_scene(rig, 17, noise=NoiseModel(0.0, 3))
    np.testing.assert_array_equal(scene.noisy, scene.clean)
    for i, P in enumerate(rig.cameras):
        for j, X in enumerate(scene.joints):
            np.testing.assert_array_equal(scene.clean[i, j], project(P, np.append(X, 1.0)))


def test_same_seed_same_scene(rig):
    a = sample_scene(rig, 17, noise=NoiseModel(4.0, 123), trial=5)
    b = sample_scene(rig, 17, noise=NoiseModel(4.0, 123), trial=5)
    np.testing.assert_array_equal(a.joints, b.joints)
    np.testing.assert_array_equal(a.noisy, b.noisy)
    c = sample_scene(rig, 17, noise=NoiseModel(4.0, 124), trial=5)
    assert not np.array_equal(a.joints, c.joints)


def test_noise_standard_deviation(rig):
    scene = sample_scene(rig, 10_000, noise=NoiseModel(10.0, 8))
    resid = (scene.noisy - scene.clean).ravel()
    assert abs(resid.std() - 10.0) <= 0.2
    assert abs(resid.mean()) <= 0.2


def test_joints_stay_in_frame(rig):
    scene = sample_scene(rig, 500, noise=NoiseModel(0.0, 1))
    assert in_frustum(rig, scene.joints).all()
    W, H = rig.image_size
    assert (scene.clean >= 0).all() and (scene.clean[..., 0] < W).all() and (scene.clean[..., 1] < H).all()


def test_out_of_frustum(rig):
    far = ((1e5, 1e5, 1e5), (2e5, 2e5, 2e5))
    with pytest.raises(OutOfFrustum):
        sample_scene(rig, 3, bbox=far, max_resample=5)


# --------------------------------------------------------------------------- sigma_min sweep


def test_sigma_sweep_zero_row(rig):
    (row,) = sigma_min_sweep(rig, [0.0], trials=100)
    assert row.mean_sigma_min <= 1e-9 and row.bound == 0.0


def test_sigma_sweep_bound_and_linearity(rig):
    grid = np.arange(1, 21, dtype=float)
    rows = sigma_min_sweep(rig, grid, trials=500)
    C = theorem1_constant(rig.cameras)
    for r in rows:
        assert r.bound == pytest.approx(C * r.s)
        assert 0 < r.mean_sigma_min <= r.bound
    assert np.corrcoef(grid, [r.mean_sigma_min for r in rows])[0, 1] >= 0.99


def test_sigma_sweep_validation(rig):
    with pytest.raises(ValueError):
        sigma_min_sweep(rig, [1.0], trials=99)


def test_sweeps_are_reproducible(rig):
    a = sigma_min_sweep(rig, [3.0], trials=100, seed=9)
    b = sigma_min_sweep(rig, [3.0], trials=100, seed=9)
    assert a == b
    c = noise_accuracy_sweep(rig, [3.0], trials=10, seed=9)
    d = noise_accuracy_sweep(rig, [3.0], trials=10, seed=9)
    assert c == d


# --------------------------------------------------------------------------- accuracy sweep


@pytest.fixture(scope="module")
def accuracy_rows(rig):
    return noise_accuracy_sweep(rig, [0.0, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0], trials=500, T_list=(1, 2))


def test_accuracy_noise_free_row(accuracy_rows):
    row = accuracy_rows[0]
    assert row.mpjpe2d == 0.0
    assert row.mpjpe3d_oracle <= 1e-8
    assert row.mpjpe3d_sii[2] <= 1e-8


@pytest.mark.xfail(strict=True, reason="a single step from a random start leaves ~1e-6 mm at s = 0")
def test_accuracy_noise_free_row_single_iteration(accuracy_rows):
    assert accuracy_rows[0].mpjpe3d_sii[1] <= 1e-8


def test_accuracy_no_exclusions_up_to_20px(accuracy_rows):
    assert all(r.excluded == 0 for r in accuracy_rows)


def test_accuracy_2d_error_is_half_normal_mean(accuracy_rows):
    for r in accuracy_rows[1:]:
        assert r.mpjpe2d == pytest.approx(r.s * np.sqrt(np.pi / 2), rel=0.02)


def test_accuracy_monotone_in_iterations(accuracy_rows):
    # T = 1 >= T = 2 >= oracle, up to 1% of trial-to-trial scatter
    for r in accuracy_rows[1:]:
        assert r.mpjpe3d_sii[1] >= r.mpjpe3d_sii[2] * 0.99
        assert r.mpjpe3d_sii[2] >= r.mpjpe3d_oracle * 0.99


def test_accuracy_grows_with_noise(accuracy_rows):
    oracle = [r.mpjpe3d_oracle for r in accuracy_rows]
    assert np.all(np.diff(oracle) > 0)


def test_custom_rig(rig):
    small = RigConfig(n_cameras=3, radius=2000.0).build()
    (row,) = noise_accuracy_sweep(small, [2.0], trials=5, T_list=(3,))
    assert set(row.mpjpe3d_sii) == {3}
