import math

import numpy as np
import pytest
import sympy

from mvtri.camera import project
from mvtri.dlt import (
    DltSystem,
    Observation,
    SiiConfig,
    build_dlt_batch,
    build_dlt_matrix,
    gram,
    min_eigvecs,
    smallest_singular_value,
    smallest_singular_values,
    solve_oracle_batch,
    solve_sii_batch,
    theorem1_bound,
    theorem1_constant,
    third_row_stack,
    triangulate_oracle,
    triangulate_sii,
)
from mvtri.errors import InsufficientViews, PointAtInfinity
from mvtri.synth import NoiseModel, make_camera_ring, sample_scene

IDENTITY = np.hstack([np.eye(3), np.zeros((3, 1))])

# Minimum of ||A x|| over the unit sphere for sample_scene(default ring, J=3,
# NoiseModel(5.0, 20201)), by random sphere sampling + extended-precision
# polish (scripts/derive_oracle_values.py).
BRUTE_FORCE_MIN = [78.1203743042713, 158.3731657094966, 111.50548039987076]


def observations_of(rig, X):
    Xh = np.append(X, 1.0)
    return [Observation(i, project(P, Xh), P) for i, P in enumerate(rig.cameras)]


def convergence_ratio(A, shift):
    w = np.sort(np.linalg.eigvalsh(gram(A)), axis=-1)
    return (w[..., 0] + shift) / (w[..., 1] + shift)


def angle_tan(x, ref):
    """tan of the angle between unit vectors, without the cancellation of sqrt(1 - c^2)."""
    c = np.einsum("ni,ni->n", x, ref)
    perp = np.linalg.norm(x - c[:, None] * ref, axis=1)
    return perp / np.abs(c)


# --------------------------------------------------------------------------- assembly


def test_single_view_rows():
    A = build_dlt_matrix([Observation(0, (0, 0), IDENTITY), Observation(1, (0, 0), IDENTITY)]).A
    np.testing.assert_array_equal(A[0], [-1, 0, 0, 0])
    np.testing.assert_array_equal(A[1], [0, -1, 0, 0])


def test_two_views_give_4x4(rig):
    obs = observations_of(rig, [10.0, 20.0, 30.0])[:2]
    assert build_dlt_matrix(obs).A.shape == (4, 4)


def test_insufficient_views():
    with pytest.raises(InsufficientViews):
        build_dlt_matrix([Observation(0, (1, 2), IDENTITY)])
    with pytest.raises(InsufficientViews):
        build_dlt_batch(np.zeros((3, 1, 2)), IDENTITY[None])


def test_batch_assembly_matches_per_observation(rig):
    scene = sample_scene(rig, 5, noise=NoiseModel(3.0, 4))
    batch = build_dlt_batch(scene.uv, rig.stack)
    for j in range(5):
        obs = [Observation(i, scene.uv[j, i], P) for i, P in enumerate(rig.cameras)]
        np.testing.assert_array_equal(batch[j], build_dlt_matrix(obs).A)


def test_noise_free_ring_has_null_vector(rig):
    X = np.array([100.0, -50.0, 30.0])
    sys = build_dlt_matrix(observations_of(rig, X))
    # sigma_min^2 is the smallest eigenvalue of A^T A
    assert smallest_singular_value(sys) ** 2 <= 1e-18


# --------------------------------------------------------------------------- oracle


def test_oracle_recovers_noise_free_point(rig):
    X = np.array([100.0, -50.0, 30.0])
    out = triangulate_oracle(build_dlt_matrix(observations_of(rig, X)))
    assert np.abs(out.point - X).max() <= 1e-8
    assert out.method == "oracle"
    assert np.linalg.norm(out.x) == pytest.approx(1.0, abs=1e-12)
    assert out.x[3] >= 0


def test_oracle_matches_brute_force_minimum(rig):
    scene = sample_scene(rig, 3, noise=NoiseModel(5.0, 20201))
    res = solve_oracle_batch(build_dlt_batch(scene.uv, rig.stack))
    np.testing.assert_allclose(res.residual, BRUTE_FORCE_MIN, rtol=1e-5)


def test_oracle_optimality_against_sphere_samples(rig):
    # 1000 noisy systems; 1e5 sphere samples each never undercut the oracle
    rng = np.random.default_rng(77)
    S = rng.standard_normal((100_000, 4))
    S /= np.linalg.norm(S, axis=1, keepdims=True)
    for t in range(50):
        scene = sample_scene(rig, 20, noise=NoiseModel(float(rng.uniform(0.5, 30)), 500 + t))
        A = build_dlt_batch(scene.uv, rig.stack)
        res = solve_oracle_batch(A)
        for j in range(20):
            sampled = np.sqrt(np.einsum("sk,sk->s", *(2 * [S @ A[j].T]))).min()
            assert sampled >= res.residual[j] - 1e-9


def test_coincident_cameras_are_flagged(rig):
    P = rig.cameras[0]
    uv = project(P, [10.0, 20.0, 30.0, 1.0])
    sys = build_dlt_matrix([Observation(0, uv, P), Observation(1, uv, P)])
    w = np.linalg.eigvalsh(gram(sys.A[None]))[0]
    # rays coincide: a two-dimensional null space
    assert w[1] <= 1e-12 * w[-1]
    try:
        out = triangulate_oracle(sys)
    except PointAtInfinity as exc:
        out = exc.output
    assert out.residual <= 1e-6


def test_point_at_infinity_carries_output():
    # every row annihilates the direction e1, so the minimiser has w = 0
    A = np.array([[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 2.0], [0.0, 0.0, 0.0, 3.0]])
    with pytest.raises(PointAtInfinity) as info:
        triangulate_oracle(DltSystem(A))
    out = info.value.output
    assert abs(out.x[3]) <= 1e-9
    assert out.residual == pytest.approx(0.0, abs=1e-12)
    # first nonzero component made positive
    nz = out.x[np.abs(out.x) > 0]
    assert nz[0] > 0
    with pytest.raises(PointAtInfinity):
        triangulate_sii(DltSystem(A))


def test_scaling_cameras_leaves_oracle_unchanged(rig):
    scene = sample_scene(rig, 30, noise=NoiseModel(4.0, 9))
    a = solve_oracle_batch(build_dlt_batch(scene.uv, rig.stack)).points
    for lam in (1e-3, 42.0, -7.0):
        b = solve_oracle_batch(build_dlt_batch(scene.uv, rig.stack * lam)).points
        assert np.abs(b - a).max() <= 1e-9 * np.abs(a).max()


# --------------------------------------------------------------------------- SII


def test_sii_config_validation():
    with pytest.raises(ValueError):
        SiiConfig(iterations=0)
    with pytest.raises(ValueError):
        SiiConfig(shift=0.0)
    with pytest.raises(ValueError):
        SiiConfig(iterations=1.5)


def test_sii_noise_free_two_iterations(rig):
    rng = np.random.default_rng(12)
    for X in rng.uniform(-250, 250, size=(100, 3)):
        out = triangulate_sii(build_dlt_matrix(observations_of(rig, X)))
        assert out.iterations_used == 2 and out.method == "sii"
        assert np.abs(out.point - X).max() <= 1e-8


def test_single_and_batch_paths_agree_bitwise(rig):
    scene = sample_scene(rig, 10, noise=NoiseModel(8.0, 3))
    A = build_dlt_batch(scene.uv, rig.stack)
    cfg = SiiConfig()
    batch = solve_sii_batch(A, cfg)
    for j in range(10):
        single = triangulate_sii(DltSystem(A[j]), cfg, item=j)
        np.testing.assert_array_equal(single.point, batch.points[j])
        oracle = triangulate_oracle(DltSystem(A[j]))
        np.testing.assert_array_equal(oracle.x, solve_oracle_batch(A).x[j])


def test_sii_convergence_is_geometric(noisy_systems):
    # per-iteration contraction of the tangent of the error angle is bounded by
    # (lambda_4 + shift) / (lambda_3 + shift); the error decreases monotonically
    A = noisy_systems[:100]
    cfg = SiiConfig(iterations=8)
    ref = solve_oracle_batch(A).x
    trace = solve_sii_batch(A, cfg, return_trace=True).trace
    rho = convergence_ratio(A, cfg.shift)
    tans = np.stack([angle_tan(x, ref) for x in trace])
    for k in range(len(trace) - 1):
        live = tans[k] > 1e-10
        assert np.all(tans[k + 1][live] <= tans[k][live])
        assert np.all(tans[k + 1][live] <= rho[live] * tans[k][live] * (1 + 1e-6) + 1e-12)


def test_sii_matches_oracle_when_well_separated(noisy_systems):
    # after T steps tan(theta) <= rho^T tan(theta_0); a unit-vector error e moves
    # the point by at most e (1 + |X|^2), which gives a per-system prediction
    A = noisy_systems
    cfg = SiiConfig()
    rho = convergence_ratio(A, cfg.shift)
    sii = solve_sii_batch(A, cfg, return_trace=True)
    oracle = solve_oracle_batch(A)
    norm = np.linalg.norm(oracle.points, axis=1)
    predicted = rho**2 * angle_tan(sii.trace[0], oracle.x) * (1 + norm**2) / norm
    rel = np.linalg.norm(sii.points - oracle.points, axis=1) / norm
    assert np.all(rel <= predicted)
    good = predicted < 1e-6
    assert good.sum() >= 5
    assert np.all(rel[good] <= 1e-6)


def test_sii_converges_to_oracle_with_more_iterations(noisy_systems):
    A = noisy_systems
    oracle = solve_oracle_batch(A)
    sii = solve_sii_batch(A, SiiConfig(iterations=200))
    rel = np.linalg.norm(sii.points - oracle.points, axis=1) / np.linalg.norm(oracle.points, axis=1)
    assert rel.max() <= 1e-6


def test_seed_only_matters_before_convergence(noisy_systems):
    A = noisy_systems[:50]
    a = solve_sii_batch(A, SiiConfig(iterations=200, seed=1))
    b = solve_sii_batch(A, SiiConfig(iterations=200, seed=2))
    rel = np.linalg.norm(a.points - b.points, axis=1) / np.linalg.norm(a.points, axis=1)
    assert rel.max() <= 1e-9
    # with the default T = 2 the two runs differ by at most the sum of their predicted errors
    rho = convergence_ratio(A, 1e-3)
    oracle = solve_oracle_batch(A)
    norm = np.linalg.norm(oracle.points, axis=1)
    gap = 0.0
    runs = []
    for seed in (1, 2):
        r = solve_sii_batch(A, SiiConfig(seed=seed), return_trace=True)
        gap = gap + rho**2 * angle_tan(r.trace[0], oracle.x) * (1 + norm**2) / norm
        runs.append(r.points)
    assert np.all(np.linalg.norm(runs[0] - runs[1], axis=1) / norm <= gap)


def test_sii_deterministic(noisy_systems):
    a = solve_sii_batch(noisy_systems, SiiConfig(seed=5))
    b = solve_sii_batch(noisy_systems, SiiConfig(seed=5))
    np.testing.assert_array_equal(a.points, b.points)


def test_sii_residual_reported(noisy_systems):
    res = solve_sii_batch(noisy_systems)
    np.testing.assert_allclose(res.residual, np.linalg.norm(np.einsum("nkj,nj->nk", noisy_systems, res.x), axis=1))
    oracle = solve_oracle_batch(noisy_systems)
    assert np.all(res.residual >= oracle.residual * (1 - 1e-12))


# --------------------------------------------------------------------------- bounds


def test_theorem1_constant_identical_rows():
    P = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0]])
    C = theorem1_constant([P] * 4)
    assert C == pytest.approx(8 * math.sqrt(2 / math.pi) * math.sqrt(8), rel=1e-12)
    assert theorem1_bound([P] * 4, 0.0).value == 0.0


def test_theorem1_constant_matches_quartic_roots(rig):
    # independent route: exact characteristic polynomial of P^T P, roots in high precision
    P = third_row_stack(rig.cameras)
    lam = sympy.Symbol("lam")
    G = sympy.Matrix(P.T @ P)
    roots = sympy.Poly(G.charpoly(lam).as_expr(), lam).nroots(n=30)
    norm = math.sqrt(max(float(sympy.re(r)) for r in roots))
    expected = 2 * len(rig) * math.sqrt(2 / math.pi) * norm
    assert theorem1_constant(rig.cameras) == pytest.approx(expected, rel=1e-9)
    tilted = make_camera_ring(5, 2500.0, 800.0, 900.0)
    P = third_row_stack(tilted.cameras)
    roots = sympy.Poly(sympy.Matrix(P.T @ P).charpoly(lam).as_expr(), lam).nroots(n=30)
    norm = math.sqrt(max(float(sympy.re(r)) for r in roots))
    assert theorem1_constant(tilted.cameras) == pytest.approx(10 * math.sqrt(2 / math.pi) * norm, rel=1e-9)


def test_theorem1_needs_two_cameras(rig):
    with pytest.raises(InsufficientViews):
        theorem1_constant(rig.cameras[:1])


def test_smallest_singular_value_orthonormal_rows():
    q, _ = np.linalg.qr(np.random.default_rng(2).normal(size=(4, 4)))
    A = np.vstack([q.T, np.zeros((4, 4))])  # 8 x 4 with orthonormal columns
    assert smallest_singular_value(DltSystem(A)) == pytest.approx(1.0, abs=1e-12)


def test_smallest_singular_value_noise_free(rig):
    rng = np.random.default_rng(21)
    X = rng.uniform(-250, 250, size=(200, 3))
    uv = np.transpose(rig.project_all(X), (1, 0, 2))
    assert smallest_singular_values(build_dlt_batch(uv, rig.stack)).max() <= 1e-9


def test_smallest_singular_value_matches_lapack(noisy_systems):
    ours = smallest_singular_values(noisy_systems)
    ref = np.linalg.svd(noisy_systems, compute_uv=False)[:, -1]
    np.testing.assert_allclose(ours, ref, rtol=1e-6)


def test_min_eigvecs_against_numpy(noisy_systems):
    M = gram(noisy_systems)
    w, v, _ = min_eigvecs(M)
    wl, vl = np.linalg.eigh(M)
    np.testing.assert_allclose(w, wl[:, 0], rtol=1e-6)
    np.testing.assert_allclose(np.abs(np.einsum("ni,ni->n", v, vl[:, :, 0])), 1.0, atol=1e-9)


def test_noisy_sigma_min_below_bound_on_average(rig):
    C = theorem1_constant(rig.cameras)
    scene = sample_scene(rig, 1, noise=NoiseModel(0.0, 8))
    clean = np.repeat(scene.uv, 500, axis=0)
    rng = np.random.default_rng(8)
    for s in (1.0, 5.0, 15.0):
        A = build_dlt_batch(clean + s * rng.standard_normal(clean.shape), rig.stack)
        assert smallest_singular_values(A).mean() <= C * s


# Per-point two-iteration claims, checked literally. With the shift fixed at 1e-3
# the per-step contraction (lambda_4 + shift) / (lambda_3 + shift) on this rig is
# often 1e-2 or worse once the noise reaches tens of pixels, so two steps cannot
# reach 1e-6; see the convergence tests above for what does hold.


def _systems_up_to_70px(rig, per_level=20):
    # view-averaged 2D-MPJPE of Gaussian noise is s * sqrt(pi / 2)
    levels = np.linspace(0.0, 70.0 / np.sqrt(np.pi / 2), 15)
    uv = [sample_scene(rig, per_level, noise=NoiseModel(float(s), 300 + i)).uv for i, s in enumerate(levels)]
    return build_dlt_batch(np.concatenate(uv), rig.stack)


@pytest.mark.xfail(strict=True, reason="two iterations do not converge to 1e-6 at tens of pixels of noise")
def test_sii_two_iterations_match_oracle_per_point(rig):
    A = _systems_up_to_70px(rig)
    sii = solve_sii_batch(A).points
    oracle = solve_oracle_batch(A).points
    rel = np.linalg.norm(sii - oracle, axis=1) / np.linalg.norm(oracle, axis=1)
    assert rel.max() <= 1e-6


@pytest.mark.xfail(strict=True, reason="the start vector is not forgotten after two iterations")
def test_sii_two_iterations_seed_independent(rig):
    A = _systems_up_to_70px(rig)
    a = solve_sii_batch(A, SiiConfig(seed=1)).points
    b = solve_sii_batch(A, SiiConfig(seed=2)).points
    rel = np.linalg.norm(a - b, axis=1) / np.linalg.norm(a, axis=1)
    assert rel.max() <= 1e-9
