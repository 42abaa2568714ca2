"""Implicit trapezoidal discretization and the least-squares objective.

With node times ``t_k = k * delta`` and fixed ``Y_0``, the defect of the
trapezoidal one-step relation at column k is

    r_k = Y_k - Y_{k-1} - (delta / 2) (F_k + F_{k-1}),    k = 1 .. n,

and the objective is ``P(Y) = 1/2 sum_k ||r_k||^2``.  A trajectory
solves the discrete system exactly iff every residual column vanishes.

Because F is quadratic, the defect splits into a quadratic part
``lam_k``, a linear part ``b_k`` and a constant ``c_k`` with
``r_k = lam_k + b_k + c_k`` column-wise; this decomposition is what the
dual machinery in :mod:`dualtraj.canonical` consumes.  Sign convention:
the decomposition reproduces the residual exactly as written above, so
``lam_k = -(delta / 2) (q(Y_k) + q(Y_{k-1}))`` with ``q_i(y) = y^T A_i y``.

Trajectories are plain (d, n) float arrays holding columns Y_1 .. Y_n;
the owning :class:`~dualtraj.model.IvpSpec` carries Y_0.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput
from .model import field_on_grid


def check_trajectory(spec, Y):
    """Validate a (d, n) trajectory array against its spec."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape != (spec.system.d, spec.n):
        raise InvalidInput(
            f"trajectory must be ({spec.system.d}, {spec.n}), got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise InvalidInput("trajectory has non-finite entries")
    return Y


def zero_trajectory(spec):
    return np.zeros((spec.system.d, spec.n))


def states_with_start(spec, Y):
    """Prepend the fixed initial column: (d, n + 1) array of Y_0 .. Y_n."""
    Y = check_trajectory(spec, Y)
    return np.hstack([spec.y0[:, None], Y])


def residuals(spec, Y):
    """Trapezoidal defect columns r_1 .. r_n -> (d, n) array."""
    X = states_with_start(spec, Y)
    F = field_on_grid(spec.system, spec.times(), X)
    half = 0.5 * spec.delta
    return X[:, 1:] - X[:, :-1] - half * (F[:, 1:] + F[:, :-1])


def objective(spec, Y):
    """P(Y) = 1/2 sum_k ||r_k||^2."""
    R = residuals(spec, Y)
    return 0.5 * float(np.sum(R * R))


def gradient(spec, Y):
    """Gradient of P with respect to the trajectory columns -> (d, n).

    Chain rule through the quadratic field:

        grad_k = r_k - r_{k+1} - (delta / 2) JF(t_k, Y_k)^T (r_k + r_{k+1})

    with ``r_{n+1} = 0``.
    """
    Y = check_trajectory(spec, Y)
    R = residuals(spec, Y)
    Rnext = np.zeros_like(R)
    Rnext[:, :-1] = R[:, 1:]
    V = R + Rnext
    half = 0.5 * spec.delta
    # JF(y)^T v = 2 * (sum_i v_i A_i) y + D^T v
    quad = 2.0 * np.einsum("ik,ipq,qk->pk", V, spec.system.A, Y)
    return R - Rnext - half * (quad + spec.system.D.T @ V)


class GnJacobian:
    """Block lower-bidiagonal Jacobian of the residual map.

    Residual column k depends only on Y_k and Y_{k-1}:

        d r_k / d Y_k     = I - (delta / 2) JF(t_k, Y_k)        (diag)
        d r_k / d Y_{k-1} = -I - (delta / 2) JF(t_{k-1}, Y_{k-1})  (sub)

    ``diag`` and ``sub`` are (n, d, d) stacks; ``sub[0]`` acts on the
    fixed Y_0 and therefore never enters the products below, but it is
    kept so callers can form full directional derivatives if needed.
    """

    def __init__(self, diag, sub, delta):
        self.diag = diag
        self.sub = sub
        self.delta = delta

    @property
    def n(self):
        return self.diag.shape[0]

    @property
    def d(self):
        return self.diag.shape[1]

    def matvec(self, V):
        """J @ V for a (d, n) direction, column layout matching residuals."""
        V = np.asarray(V, dtype=float)
        out = np.einsum("kip,pk->ik", self.diag, V)
        out[:, 1:] += np.einsum("kip,pk->ik", self.sub[1:], V[:, :-1])
        return out

    def rmatvec(self, W):
        """J^T @ W for a (d, n) residual-space vector."""
        W = np.asarray(W, dtype=float)
        out = np.einsum("kip,ik->pk", self.diag, W)
        out[:, :-1] += np.einsum("kip,ik->pk", self.sub[1:], W[:, 1:])
        return out


def gn_jacobian(spec, Y):
    """Assemble the residual Jacobian blocks at a trajectory."""
    X = states_with_start(spec, Y)
    JF = spec.system.jac_state(X)  # (n + 1, d, d) at nodes 0 .. n
    half = 0.5 * spec.delta
    eye = np.eye(spec.system.d)
    diag = eye[None, :, :] - half * JF[1:]
    sub = -eye[None, :, :] - half * JF[:-1]
    return GnJacobian(diag, sub, spec.delta)


def lambda_op(spec, Y):
    """Quadratic defect part: lam_k = -(delta/2) (q(Y_k) + q(Y_{k-1}))."""
    X = states_with_start(spec, Y)
    Q = spec.system.quad_forms(X)
    half = 0.5 * spec.delta
    return -half * (Q[:, 1:] + Q[:, :-1])


def b_op(spec, Y):
    """Linear defect part: b_k = Y_k - Y_{k-1} - (delta/2) D (Y_k + Y_{k-1})."""
    X = states_with_start(spec, Y)
    half = 0.5 * spec.delta
    return X[:, 1:] - X[:, :-1] - half * (spec.system.D @ (X[:, 1:] + X[:, :-1]))


def c_field(spec):
    """Constant defect part: c_k = -(delta/2) (g_k + g_{k-1})."""
    G = spec.system.forcing.on_grid(spec.times())
    half = 0.5 * spec.delta
    return -half * (G[:, 1:] + G[:, :-1])


# ---------------------------------------------------------------------------
# trajectory CSV (header t,y1,...,yd; n+1 rows including t = 0)
# ---------------------------------------------------------------------------


def write_trajectory_csv(path, spec, Y):
    """Write Y_0 .. Y_n with node times at full double precision."""
    X = states_with_start(spec, Y)
    ts = spec.times()
    d = spec.system.d
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"y{i + 1}" for i in range(d)) + "\n")
        for k in range(spec.n + 1):
            row = [format(ts[k], ".17g")]
            row += [format(X[i, k], ".17g") for i in range(d)]
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(path):
    """Read a trajectory CSV -> (times (m,), states (d, m))."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if not cols or cols[0] != "t":
            raise InvalidInput(f"{path}: expected header starting with 't'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(cols):
        raise InvalidInput(f"{path}: row width does not match header")
    return data[:, 0], data[:, 1:].T
