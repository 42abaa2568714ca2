"""Adaptive embedded Runge-Kutta baselines with dense output.

Two classic pairs, matching the default behavior of the widespread
``ode45`` / ``ode23`` drivers they stand in for:

* :func:`rk45` -- Dormand-Prince 5(4), seven stages with FSAL and the
  standard quartic interpolant.
* :func:`rk23` -- Bogacki-Shampine 3(2), four stages with FSAL and a
  cubic Hermite interpolant.

Both use proportional-integral step-size control on the embedded error
estimate with per-component scale ``atol + rtol * |y|``.  The explicit
:func:`modified_euler` march (Euler predictor, trapezoidal corrector)
rounds out the baselines.  Output is resampled onto uniform grids with
:func:`resample` so integrator trajectories can be scored by the
least-squares objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, InvalidInput, MinStepReached
from .model import eval_field


@dataclass
class IntegratorOutput:
    """Accepted solution points plus per-step interpolation polynomials.

    ``poly[j]`` holds coefficients of the local polynomial on step j:
    ``y(t_j + theta * h_j) = states[:, j] + sum_p poly[j][:, p] * theta**(p + 1)``
    for ``theta`` in [0, 1].
    """

    times: np.ndarray          # (m,) strictly increasing, first 0, last T
    states: np.ndarray         # (d, m)
    poly: np.ndarray           # (m - 1, d, degree)
    stats: dict = field(default_factory=dict)
    method: str = ""


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])
# quartic interpolant weights: column p gives the theta**(p+1) coefficient
_DP_BI = np.array([
    [1.0, -183 / 64, 37 / 12, -145 / 128],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 1500 / 371, -1000 / 159, 1000 / 371],
    [0.0, -125 / 32, 125 / 12, -375 / 64],
    [0.0, 9477 / 3392, -729 / 106, 25515 / 6784],
    [0.0, -11 / 7, 11 / 3, -55 / 28],
    [0.0, 3 / 2, -4.0, 5 / 2],
])

# Bogacki-Shampine 3(2) tableau
_BS_C = np.array([0.0, 1 / 2, 3 / 4, 1.0])
_BS_A = [
    np.array([1 / 2]),
    np.array([0.0, 3 / 4]),
    np.array([2 / 9, 1 / 3, 4 / 9]),
]
_BS_B = np.array([2 / 9, 1 / 3, 4 / 9, 0.0])
_BS_E = np.array([2 / 9 - 7 / 24, 1 / 3 - 1 / 4, 4 / 9 - 1 / 3, -1 / 8])


def _initial_step(f0, y0, t_span, rtol, atol, order, fun):
    """Conventional two-probe starting step selection."""
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, t_span)


def _rk_adaptive(spec, c, a, b, e, err_order, dense, method, rtol, atol,
                 max_steps):
    if rtol <= 0.0 or atol <= 0.0:
        raise InvalidInput("rtol and atol must be positive")
    system = spec.system
    d = system.d
    T = spec.T
    stages = len(c)

    def fun(t, y):
        return eval_field(system, t, y)

    t = 0.0
    y = spec.y0.copy()
    f = fun(t, y)
    nfev = 1
    h = _initial_step(f, y, T, rtol, atol, err_order, fun)
    nfev += 1

    times = [0.0]
    states = [y.copy()]
    polys = []
    naccept = 0
    nreject = 0
    err_prev = 1e-4
    kexp = err_order + 1

    while t < T:
        h = min(h, T - t)
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            partial = _finish(times, states, polys, method, naccept, nreject, nfev)
            raise MinStepReached(
                f"step size underflow at t = {t:.6g}", partial=partial)

        K = np.empty((stages, d))
        K[0] = f
        for i in range(1, stages):
            yi = y + h * (a[i - 1] @ K[:i])
            K[i] = fun(t + c[i] * h, yi)
        nfev += stages - 1

        ynew = y + h * (b @ K)
        errvec = h * (e @ K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean((errvec / sc) ** 2))

        if err <= 1.0:
            tnew = T if T - (t + h) < 1e-12 * T else t + h
            polys.append(dense(y, ynew, K, h))
            times.append(tnew)
            states.append(ynew.copy())
            naccept += 1
            # FSAL: the last stage is the derivative at the new point
            f = K[-1]
            t, y = tnew, ynew
            if err == 0.0:
                fac = 10.0
            else:
                fac = 0.9 * err ** (-0.7 / kexp) * err_prev ** (0.4 / kexp)
            h *= min(10.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            nreject += 1
            h *= min(1.0, max(0.1, 0.9 * err ** (-1.0 / kexp)))
        if naccept + nreject > max_steps:
            partial = _finish(times, states, polys, method, naccept, nreject, nfev)
            raise MinStepReached(
                f"step budget exhausted at t = {t:.6g}", partial=partial)

    return _finish(times, states, polys, method, naccept, nreject, nfev)


def _finish(times, states, polys, method, naccept, nreject, nfev):
    return IntegratorOutput(
        times=np.array(times),
        states=np.array(states).T,
        poly=np.array(polys) if polys else np.zeros((0, 0, 0)),
        stats={"naccept": naccept, "nreject": nreject, "nfev": nfev},
        method=method,
    )


def _dense_dp(y, ynew, K, h):
    # (d, 4) coefficients of theta .. theta**4
    return h * (K.T @ _DP_BI)


def _dense_hermite(y, ynew, K, h):
    f0, f1 = K[0], K[-1]
    c1 = h * f0
    c2 = -3.0 * y - 2.0 * h * f0 + 3.0 * ynew - h * f1
    c3 = 2.0 * y + h * f0 - 2.0 * ynew + h * f1
    return np.stack([c1, c2, c3], axis=1)


def rk45(spec, rtol=1e-3, atol=1e-6, max_steps=10_000_000):
    """Dormand-Prince 5(4) adaptive integration over [0, T]."""
    return _rk_adaptive(spec, _DP_C, _DP_A, _DP_B, _DP_E, 4, _dense_dp,
                        "rk45", rtol, atol, max_steps)


def rk23(spec, rtol=1e-3, atol=1e-6, max_steps=10_000_000):
    """Bogacki-Shampine 3(2) adaptive integration over [0, T]."""
    return _rk_adaptive(spec, _BS_C, _BS_A, _BS_B, _BS_E, 2, _dense_hermite,
                        "rk23", rtol, atol, max_steps)


def interpolate(out, ts):
    """Evaluate the dense output at arbitrary times -> (d, len(ts)).

    Times must lie inside ``[out.times[0], out.times[-1]]``; points that
    hit an accepted step time return the stored state exactly.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    knots = out.times
    if ts.min() < knots[0] or ts.max() > knots[-1]:
        raise InvalidInput("requested times outside the integrated range")
    d = out.states.shape[0]
    vals = np.empty((d, ts.shape[0]))
    idx = np.searchsorted(knots, ts, side="right") - 1
    idx = np.clip(idx, 0, knots.shape[0] - 2)
    for col, (t, j) in enumerate(zip(ts, idx)):
        if t == knots[j]:
            vals[:, col] = out.states[:, j]
            continue
        if t == knots[j + 1]:
            vals[:, col] = out.states[:, j + 1]
            continue
        h = knots[j + 1] - knots[j]
        theta = (t - knots[j]) / h
        powers = theta ** np.arange(1, out.poly.shape[2] + 1)
        vals[:, col] = out.states[:, j] + out.poly[j] @ powers
    return vals


def resample(out, grid):
    """Interpolate integrator output onto a uniform grid's nodes 1 .. n.

    Returns a (d, n) trajectory array (the t = 0 column is the initial
    state and is not repeated).
    """
    ts = grid.times()
    if ts[-1] > out.times[-1] or ts[0] < out.times[0]:
        raise InvalidInput("grid horizon outside the integrated range")
    return interpolate(out, ts[1:])


def resample_linear(out, grid):
    """Sample the polyline through the accepted points onto a grid.

    Unlike :func:`resample` this ignores the dense-output polynomials
    and connects the accepted states with straight segments, which is
    how raw solver output is usually scored when only the accepted
    points are kept.  On grids much finer than the accepted steps the
    defect of this trajectory is dominated by the segment slope error,
    so the least-squares objective scales like 1/n; published benchmark
    objectives for the forced circuit follow exactly that scaling.
    """
    ts = grid.times()
    if ts[-1] > out.times[-1] or ts[0] < out.times[0]:
        raise InvalidInput("grid horizon outside the integrated range")
    ts = ts[1:]
    idx = np.searchsorted(out.times, ts, side="right") - 1
    idx = np.clip(idx, 0, out.times.shape[0] - 2)
    theta = (ts - out.times[idx]) / (out.times[idx + 1] - out.times[idx])
    return (1.0 - theta) * out.states[:, idx] + theta * out.states[:, idx + 1]


def modified_euler(spec):
    """Explicit Euler-predictor / trapezoidal-corrector march -> (d, n)."""
    system = spec.system
    delta = spec.delta
    ts = spec.times()
    y = spec.y0.copy()
    f = eval_field(system, ts[0], y)
    cols = np.empty((system.d, spec.n))
    for k in range(1, spec.n + 1):
        pred = y + delta * f
        fpred = eval_field(system, ts[k], pred)
        y = y + 0.5 * delta * (f + fpred)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e100:
            raise Diverged(f"explicit march overflowed at step {k}")
        f = eval_field(system, ts[k], y)
        cols[:, k - 1] = y
    return cols
