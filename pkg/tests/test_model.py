import os

import numpy as np
import pytest

from dualtraj import model
from dualtraj.errors import InvalidInput, UnknownSystem

DATA = os.path.join(os.path.dirname(__file__), "data")


# hand-coded right-hand sides, kept independent of the package encodings
def logistic_rhs(r):
    return lambda t, y: np.array([r * y[0] * (1.0 - y[0])])


def memristor_rhs(a, mu, beta, omega):
    def f(t, y):
        x, i = y
        return np.array([a * (i * i - 1.0), -(x + mu) * i + beta * np.cos(omega * t)])
    return f


def lorenz_rhs(sigma, rho, b):
    def f(t, y):
        x, yy, z = y
        return np.array([sigma * (yy - x), -x * z + rho * x - yy, x * yy - b * z])
    return f


def test_eval_field_examples():
    log = model.registry("logistic")
    assert model.eval_field(log.system, 0.0, [1.0])[0] == pytest.approx(0.0, abs=1e-15)
    assert model.eval_field(log.system, 0.0, [0.1])[0] == pytest.approx(0.45, abs=1e-15)

    mem = model.registry("memristor")
    f = model.eval_field(mem.system, 0.0, [0.1, 0.1])
    assert np.allclose(f, [-0.99, 0.69], atol=1e-15)

    lor = model.registry("lorenz")
    f = model.eval_field(lor.system, 0.0, [10.0, 12.0, 14.0])
    assert np.allclose(f, [20.0, 128.0, 82.0 + 2.0 / 3.0], atol=1e-12)


def test_registry_encodings_exact():
    mem = model.registry("memristor").system
    assert np.array_equal(mem.A[0], [[0.0, 0.0], [0.0, 1.0]])
    assert np.array_equal(mem.A[1], [[0.0, -0.5], [-0.5, 0.0]])
    assert np.array_equal(mem.D, [[0.0, 0.0], [0.0, 0.0]])
    assert np.array_equal(mem.forcing.const, [-1.0, 0.0])
    assert mem.forcing.terms() == [(1, 0.7, 1.0, 0.0)]

    lor = model.registry("lorenz").system
    assert np.all(lor.A[0] == 0.0)
    assert lor.A[1][0, 2] == -0.5 and lor.A[1][2, 0] == -0.5
    assert lor.A[2][0, 1] == 0.5 and lor.A[2][1, 0] == 0.5
    assert np.allclose(lor.D, [[-10, 10, 0], [28, -1, 0], [0, 0, -8.0 / 3.0]])


@pytest.mark.parametrize("name,builder,params", [
    ("logistic", logistic_rhs, {"r": 5.0}),
    ("memristor", memristor_rhs, {"a": 1.0, "mu": 0.0, "beta": 0.7, "omega": 1.0}),
    ("lorenz", lorenz_rhs, {"sigma": 10.0, "rho": 28.0, "b": 8.0 / 3.0}),
])
def test_registry_matches_handwritten_rhs(rng, name, builder, params):
    spec = model.registry(name)
    reference = builder(**params)
    for _ in range(10):
        t = rng.uniform(0.0, 7.0)
        y = rng.standard_normal(spec.system.d)
        ours = model.eval_field(spec.system, t, y)
        assert np.allclose(ours, reference(t, y), atol=1e-14, rtol=1e-14)


def test_registry_defaults_and_overrides():
    spec = model.registry("logistic", {"r": 4.0, "n": 10})
    assert spec.n == 10 and spec.T == 2.0
    assert model.eval_field(spec.system, 0.0, [0.5])[0] == pytest.approx(1.0)

    with pytest.raises(UnknownSystem):
        model.registry("vanderpol")
    with pytest.raises(InvalidInput):
        model.registry("logistic", {"alpha": 1.0})


def test_symmetrization_invariance(rng):
    A = rng.standard_normal((3, 3, 3))
    D = rng.standard_normal((3, 3))
    raw = model.QuadraticSystem(A, D)
    sym = model.QuadraticSystem(0.5 * (A + np.transpose(A, (0, 2, 1))), D)
    for _ in range(10):
        y = rng.standard_normal(3)
        assert np.allclose(model.eval_field(raw, 0.3, y),
                           model.eval_field(sym, 0.3, y), atol=1e-14)


def test_forcing_grid_matches_pointwise(rng):
    forcing = model.Forcing([0.5, -1.0], [(0, 2.0, 3.0, 0.25), (1, 0.7, 1.0, 0.0)])
    ts = rng.uniform(0.0, 10.0, size=17)
    grid = forcing.on_grid(ts)
    for j, t in enumerate(ts):
        assert np.allclose(grid[:, j], forcing(t), atol=1e-15)


@pytest.mark.parametrize("name", ["logistic", "memristor", "lorenz"])
def test_serialize_roundtrip(name):
    spec = model.registry(name)
    back = model.parse_system_file(model.serialize_system(spec))
    assert back.system.d == spec.system.d
    assert np.array_equal(back.system.A, spec.system.A)
    assert np.array_equal(back.system.D, spec.system.D)
    assert np.array_equal(back.system.forcing.const, spec.system.forcing.const)
    assert back.system.forcing.terms() == spec.system.forcing.terms()
    assert np.array_equal(back.y0, spec.y0)
    assert back.T == spec.T and back.n == spec.n
    assert back.system.name == spec.system.name


def test_parse_handwritten_fixture_equals_registry():
    parsed = model.load_system_file(os.path.join(DATA, "logistic.txt"))
    ref = model.registry("logistic")
    assert np.array_equal(parsed.system.A, ref.system.A)
    assert np.array_equal(parsed.system.D, ref.system.D)
    assert np.array_equal(parsed.y0, ref.y0)
    assert parsed.T == ref.T and parsed.n == ref.n


def test_parse_rejects_bad_slice_size():
    text = "dim = 2\nA.1 =\n  0 0\n  0 1 7\nA.2 =\n  0 0\n  0 0\nD =\n  0 0\n  0 0\ng.const = 0 0\ny0 = 0 0\nT = 1\nn = 10\n"
    with pytest.raises(InvalidInput, match="line 4"):
        model.parse_system_file(text)


def test_parse_rejects_unknown_key_and_missing():
    with pytest.raises(InvalidInput, match="unknown key"):
        model.parse_system_file("dim = 1\nbogus = 3\n")
    with pytest.raises(InvalidInput, match="missing"):
        model.parse_system_file("dim = 1\nA.1 =\n  1\nD =\n  0\ng.const = 0\ny0 = 0\nT = 1\n")


def test_spec_validation():
    sys_ = model.registry("logistic").system
    with pytest.raises(InvalidInput):
        model.IvpSpec(sys_, [0.1], -1.0, 10)
    with pytest.raises(InvalidInput):
        model.IvpSpec(sys_, [0.1], 1.0, 0)
    with pytest.raises(InvalidInput):
        model.IvpSpec(sys_, [0.1, 0.2], 1.0, 10)
