import numpy as np
import pytest

from dualtraj import discretize, model
from dualtraj.errors import InvalidInput
from dualtraj.model import IvpSpec, QuadraticSystem, eval_field, registry

from conftest import small_spec


def brute_force_objective(spec, Y):
    """Straightforward per-column recomputation of 1/2 sum ||r_k||^2."""
    half = 0.5 * spec.delta
    y_prev = spec.y0
    total = 0.0
    for k in range(1, spec.n + 1):
        y_k = Y[:, k - 1]
        f_k = eval_field(spec.system, k * spec.delta, y_k)
        f_prev = eval_field(spec.system, (k - 1) * spec.delta, y_prev)
        r = y_k - y_prev - half * (f_k + f_prev)
        total += 0.5 * float(r @ r)
        y_prev = y_k
    return total


def fd_gradient(spec, Y, h_scale=1e-6):
    g = np.zeros_like(Y)
    for i in range(Y.shape[0]):
        for k in range(Y.shape[1]):
            h = h_scale * max(1.0, abs(Y[i, k]))
            Yp, Ym = Y.copy(), Y.copy()
            Yp[i, k] += h
            Ym[i, k] -= h
            g[i, k] = (discretize.objective(spec, Yp)
                       - discretize.objective(spec, Ym)) / (2.0 * h)
    return g


def test_equilibrium_trajectory_is_exact():
    spec = registry("logistic", {"y0": 1.0, "n": 50})
    Y = np.ones((1, 50))
    assert np.all(discretize.residuals(spec, Y) == 0.0)
    assert discretize.objective(spec, Y) == 0.0
    assert np.all(discretize.gradient(spec, Y) == 0.0)


def test_double_well_roots_have_zero_residual():
    # r = 4, delta = 0.5, y0 = 1.2: the single-step relation collapses to
    # y1^2 = 0.96, so both signs solve it
    spec = registry("logistic", {"r": 4.0, "y0": 1.2, "T": 0.5, "n": 1})
    for sign in (+1.0, -1.0):
        Y = np.array([[sign * np.sqrt(0.96)]])
        assert abs(discretize.residuals(spec, Y)[0, 0]) < 1e-15


def test_objective_matches_brute_force(rng, each_system):
    spec = each_system
    for _ in range(5):
        Y = rng.standard_normal((spec.system.d, spec.n))
        ours = discretize.objective(spec, Y)
        ref = brute_force_objective(spec, Y)
        assert ours == pytest.approx(ref, rel=1e-13)


def test_objective_nonnegative_and_zero_iff_residuals_vanish(rng, each_system):
    spec = each_system
    Y = rng.standard_normal((spec.system.d, spec.n))
    assert discretize.objective(spec, Y) >= 0.0
    if discretize.objective(spec, Y) <= 1e-14:
        assert np.max(np.abs(discretize.residuals(spec, Y))) <= 1e-7


def test_gradient_matches_finite_differences(rng, each_system):
    spec = each_system
    Y = rng.uniform(-1.0, 1.0, size=(spec.system.d, spec.n))
    g = discretize.gradient(spec, Y)
    ref = fd_gradient(spec, Y)
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(g - ref)) <= 1e-6 * scale


def test_jacobian_blocks_linear_system():
    # F = D y: blocks are constant
    D = np.array([[0.0, 1.0], [-2.0, -0.3]])
    sys_ = QuadraticSystem(np.zeros((2, 2, 2)), D)
    spec = IvpSpec(sys_, [1.0, 0.0], 1.0, 8)
    jac = discretize.gn_jacobian(spec, np.zeros((2, 8)))
    half = 0.5 * spec.delta
    eye = np.eye(2)
    assert np.allclose(jac.diag, (eye - half * D)[None], atol=1e-15)
    assert np.allclose(jac.sub, (-eye - half * D)[None], atol=1e-15)


def test_jacobian_blocks_logistic_analytic(rng):
    spec = small_spec("logistic", n=12)
    Y = rng.uniform(0.0, 1.0, size=(1, 12))
    jac = discretize.gn_jacobian(spec, Y)
    half = 0.5 * spec.delta
    r = 5.0
    expect = 1.0 - half * r * (1.0 - 2.0 * Y[0])
    assert np.allclose(jac.diag[:, 0, 0], expect, atol=1e-14)


def test_jacobian_products_match_finite_differences(rng):
    spec = small_spec("lorenz", n=25)
    Y = rng.standard_normal((3, 25))
    jac = discretize.gn_jacobian(spec, Y)
    V = rng.standard_normal((3, 25))
    h = 1e-7
    fd = (discretize.residuals(spec, Y + h * V)
          - discretize.residuals(spec, Y - h * V)) / (2.0 * h)
    assert np.max(np.abs(jac.matvec(V) - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))
    # adjoint identity binds rmatvec to matvec
    W = rng.standard_normal((3, 25))
    assert float(np.sum(W * jac.matvec(V))) == pytest.approx(
        float(np.sum(V * jac.rmatvec(W))), rel=1e-12)


def test_defect_decomposition_reconstructs_residuals(rng, each_system):
    spec = each_system
    for _ in range(5):
        Y = rng.standard_normal((spec.system.d, spec.n))
        total = (discretize.lambda_op(spec, Y) + discretize.b_op(spec, Y)
                 + discretize.c_field(spec))
        R = discretize.residuals(spec, Y)
        assert np.max(np.abs(total - R)) <= 1e-13 * max(1.0, np.max(np.abs(R)))


def test_decomposition_zero_trajectory_structure():
    # y0 chosen on the null cone of the quadratic slices: lambda vanishes
    # on the zero trajectory and only the first linear column sees y0
    A = np.zeros((2, 2, 2))
    A[0] = [[0.0, 0.0], [0.0, 1.0]]
    A[1] = [[0.0, -0.5], [-0.5, 0.0]]
    sys_ = QuadraticSystem(A, np.array([[0.0, 1.0], [1.0, 0.0]]))
    spec = IvpSpec(sys_, [0.7, 0.0], 1.0, 6)
    Y = np.zeros((2, 6))
    assert np.all(discretize.lambda_op(spec, Y) == 0.0)
    B = discretize.b_op(spec, Y)
    assert np.any(B[:, 0] != 0.0)
    assert np.all(B[:, 1:] == 0.0)


def test_logistic_lambda_fixture():
    spec = registry("logistic", {"r": 4.0, "y0": 1.2, "T": 0.5, "n": 1})
    y1 = 0.3
    lam = discretize.lambda_op(spec, np.array([[y1]]))[0, 0]
    # quadratic part of the defect: +(delta/2) r (y1^2 + y0^2)
    assert lam == pytest.approx(0.25 * 4.0 * (y1 ** 2 + 1.2 ** 2), rel=1e-15)


def test_c_field_forcing():
    spec = small_spec("memristor", n=9)
    c = discretize.c_field(spec)
    ts = spec.times()
    g = spec.system.forcing.on_grid(ts)
    expect = -0.5 * spec.delta * (g[:, 1:] + g[:, :-1])
    assert np.allclose(c, expect, atol=1e-16)


def test_trajectory_csv_roundtrip(tmp_path, rng):
    spec = small_spec("lorenz", n=13)
    Y = rng.standard_normal((3, 13))
    path = tmp_path / "traj.csv"
    discretize.write_trajectory_csv(path, spec, Y)
    ts, X = discretize.read_trajectory_csv(path)
    assert ts.shape == (14,)
    assert np.array_equal(X[:, 0], spec.y0)
    assert np.array_equal(X[:, 1:], Y)


def test_dimension_mismatch_raises():
    spec = small_spec("memristor", n=7)
    with pytest.raises(InvalidInput):
        discretize.residuals(spec, np.zeros((2, 6)))
    with pytest.raises(InvalidInput):
        discretize.residuals(spec, np.zeros((3, 7)))
