import numpy as np
import pytest

from dualtraj import linalg
from dualtraj.errors import InvalidInput

# 0, +/- sqrt(1.5^2 + 1^2) for the cross-coupled test matrix below
CROSS = np.array([[0.0, 1.5, -1.0], [1.5, 0.0, 0.0], [-1.0, 0.0, 0.0]])
CROSS_EIG = 1.8027756377319946


def random_sym(rng, d):
    m = rng.standard_normal((d, d))
    return 0.5 * (m + m.T)


def test_eigh_diagonal():
    w, v = linalg.eigh(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(w, [1.0, 2.0, 3.0], atol=0.0)
    assert np.allclose(np.abs(v), np.eye(3), atol=1e-14)


def test_eigh_cross_coupled_pattern():
    w, _ = linalg.eigh(CROSS)
    assert np.allclose(w, [-CROSS_EIG, 0.0, CROSS_EIG], atol=1e-12)


def test_eigh_zero_matrix():
    w, v = linalg.eigh(np.zeros((4, 4)))
    assert np.all(w == 0.0)
    assert np.allclose(v @ v.T, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_eigh_reconstruction_invariants(rng, d):
    for _ in range(20):
        m = random_sym(rng, d)
        w, v = linalg.eigh(m)
        assert np.all(np.diff(w) >= 0.0)
        scale = max(1.0, np.linalg.norm(m))
        assert np.linalg.norm((v * w) @ v.T - m) <= 1e-12 * scale
        assert np.linalg.norm(v.T @ v - np.eye(d)) <= 1e-12


def test_eigh_rejects_nonfinite():
    with pytest.raises(InvalidInput):
        linalg.eigh(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInput):
        linalg.eigh(np.ones((2, 3)))


def test_pinv_diagonal():
    p = linalg.pinv(np.diag([2.0, 0.0]))
    assert np.allclose(p, np.diag([0.5, 0.0]), atol=1e-15)


def test_pinv_zero_matrix():
    assert np.all(linalg.pinv(np.zeros((3, 3))) == 0.0)


def test_pinv_matches_inverse_on_spd(rng):
    for _ in range(10):
        a = rng.standard_normal((3, 3))
        m = a @ a.T + 0.5 * np.eye(3)
        inv = np.linalg.solve(m, np.eye(3))
        assert np.linalg.norm(linalg.pinv(m) - inv) <= 1e-10 * np.linalg.norm(inv)


def test_pinv_penrose_identities_rank_deficient(rng):
    for d, zeros in [(3, 1), (4, 2), (5, 3)]:
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        w = rng.uniform(0.5, 2.0, size=d)
        w[:zeros] = 0.0
        m = (q * w) @ q.T
        p = linalg.pinv(m)
        assert np.linalg.norm(m @ p @ m - m) <= 1e-10
        assert np.linalg.norm(p @ m @ p - p) <= 1e-10


def test_min_eig_examples():
    assert linalg.min_eig(np.diag([-1.0, 5.0])) == pytest.approx(-1.0, abs=1e-14)
    assert linalg.min_eig(np.eye(3)) == pytest.approx(1.0, abs=1e-14)
    assert linalg.min_eig(CROSS) == pytest.approx(-CROSS_EIG, abs=1e-12)


def test_batch_agrees_with_jacobi(rng):
    ms = np.stack([random_sym(rng, 3) for _ in range(50)])
    w_batch, _ = linalg.eigh_batch(ms)
    for k in range(ms.shape[0]):
        w, _ = linalg.eigh(ms[k])
        assert np.allclose(w_batch[k], w, atol=1e-12)
    assert np.allclose(linalg.min_eig_batch(ms), w_batch[:, 0], atol=0.0)


def test_pinv_apply_batch_matches_scalar_route(rng):
    ms = np.stack([random_sym(rng, 3) for _ in range(20)])
    ms[::4, :, :] = 0.0  # sprinkle exactly singular blocks
    rhs = rng.standard_normal((3, 20))
    out, truncated = linalg.pinv_apply_batch(ms, rhs)
    for k in range(20):
        expect = linalg.pinv(ms[k]) @ rhs[:, k]
        assert np.allclose(out[:, k], expect, atol=1e-11)
    assert truncated[0] and truncated[4]
