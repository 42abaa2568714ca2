"""Canonical dual machinery for the trapezoidal least-squares problem.

The defect decomposition ``r_k = lam_k + b_k + c_k`` (see
:mod:`dualtraj.discretize`) makes the quartic objective a quadratic
function of the measure ``E = lam(Y)``.  Pairing E with a dual field
``S = {sigma_k}`` gives

    Phi(Y, E)    = 1/2 sum_k ||xi_k + b_k + c_k||^2
    Phi*(Y, S)   = sum_k [ 1/2 ||sigma_k||^2 - sigma_k^T b_k - c_k^T sigma_k ]
    Xi(Y, S)     = tr(lam(Y)^T S) - Phi*(Y, S)

and collecting Xi in powers of the trajectory columns yields the
blockwise form

    Xi(Y, S) = sum_k [ 1/2 Y_k^T G_k Y_k - Y_k^T t_k
                       - 1/2 ||sigma_k||^2 + c_k^T sigma_k ] + psi(sigma_1)

with (ghost column sigma_{n+1} = 0 so the k = n boundary needs no
special case)

    G_k   = -delta * sum_i Sym(A_i) (sigma_k^i + sigma_{k+1}^i)
    t_k   = sigma_{k+1} - sigma_k + (delta / 2) D^T (sigma_k + sigma_{k+1})
    psi   = -(Y_0 + (delta / 2) (q(Y_0) + D Y_0))^T sigma_1.

These constants are pinned by the identity ``xi_collected == xi_direct``
for every (Y, S); the scaling is derived from the tr(lam^T S) expansion
rather than copied from any display form.  Maximizing out S recovers
``Xi(Y, dual_map(Y)) = P(Y)``, and eliminating Y at fixed S gives the
dual value

    dual(S) = sum_k [ -1/2 t_k^T pinv(G_k) t_k - 1/2 ||sigma_k||^2
                      + c_k^T sigma_k ] + psi(sigma_1),

equal to ``Xi(recover(S), S)`` for any S under pseudoinverse semantics.
A critical pair with every ``G_k`` positive semidefinite certifies the
trajectory as a global minimizer of P; all blocks negative semidefinite
marks the paired local-extremum class; anything else is uncertified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .discretize import (b_op, c_field, check_trajectory, lambda_op,
                         objective, residuals)
from .errors import InvalidInput, NotCritical

GLOBAL_MINIMUM = "global-minimum"
LOCAL_CLASS = "local-class"
UNCERTIFIED = "uncertified"

#: default absolute tolerance for eigenvalue sign tests and gap checks
DEFAULT_CERT_TOL = 1e-8


def _check_field(spec, S, name="dual field"):
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[None, :]
    if S.shape != (spec.system.d, spec.n):
        raise InvalidInput(
            f"{name} must be ({spec.system.d}, {spec.n}), got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInput(f"{name} has non-finite entries")
    return S


def dual_map(spec, Y):
    """Canonical dual of a trajectory: sigma_k = lam_k + b_k + c_k.

    Equals the residual columns, so the dual field of an exact solution
    is identically zero.
    """
    return residuals(spec, Y)


def phi(spec, Y, E):
    """Canonical potential Phi(Y, E) with an independent measure field E."""
    E = _check_field(spec, E, "measure field")
    cols = E + b_op(spec, Y) + c_field(spec)
    return 0.5 * float(np.sum(cols * cols))


def phi_star(spec, Y, S):
    """Partial Legendre conjugate of Phi in its measure slot."""
    S = _check_field(spec, S)
    B = b_op(spec, Y)
    C = c_field(spec)
    return float(np.sum(0.5 * S * S - S * B - C * S))


def xi_direct(spec, Y, S):
    """Total complementary value from the defining expression.

    ``Xi(Y, S) = tr(lam(Y)^T S) - Phi*(Y, S)``; no block collection.
    """
    S = _check_field(spec, S)
    return float(np.sum(lambda_op(spec, Y) * S)) - phi_star(spec, Y, S)


@dataclass
class CollectedForm:
    """Blockwise coefficients of Xi as a quadratic in the trajectory."""

    G: np.ndarray    # (n, d, d) symmetric blocks
    t: np.ndarray    # (d, n) linear coefficients
    psi: float       # initial-state coupling, scalar


def collect(spec, S):
    """Assemble G blocks, t columns and psi for a dual field."""
    S = _check_field(spec, S)
    delta = spec.delta
    ssum = S.copy()
    ssum[:, :-1] += S[:, 1:]          # sigma_k + sigma_{k+1}, ghost = 0
    G = -delta * np.einsum("ik,ipq->kpq", ssum, spec.system.A)
    snext = np.zeros_like(S)
    snext[:, :-1] = S[:, 1:]
    t = snext - S + 0.5 * delta * (spec.system.D.T @ ssum)
    y0 = spec.y0
    q0 = np.einsum("ipq,p,q->i", spec.system.A, y0, y0)
    psi = -float((y0 + 0.5 * delta * (q0 + spec.system.D @ y0)) @ S[:, 0])
    return CollectedForm(G=G, t=t, psi=psi)


def xi_collected(spec, Y, S):
    """Total complementary value from the collected blockwise form."""
    Y = check_trajectory(spec, Y)
    form = collect(spec, S)
    S = _check_field(spec, S)
    quad = 0.5 * np.einsum("pk,kpq,qk->", Y, form.G, Y)
    lin = float(np.sum(Y * form.t))
    const = float(np.sum(-0.5 * S * S + c_field(spec) * S))
    return quad - lin + const + form.psi


def dual_function(spec, S, rank_tol=linalg.DEFAULT_RANK_TOL, zero_tol=0.0):
    """Canonical dual value at S.

    Blocks that are singular within tolerance contribute through their
    pseudoinverse.  Returns ``(value, singular_blocks)`` where the
    second entry lists the 1-based block indices that were truncated.
    """
    form = collect(spec, S)
    S = _check_field(spec, S)
    ginv_t, truncated = linalg.pinv_apply_batch(form.G, form.t, rank_tol, zero_tol)
    head = -0.5 * float(np.sum(form.t * ginv_t))
    const = float(np.sum(-0.5 * S * S + c_field(spec) * S))
    value = head + const + form.psi
    return value, list(np.nonzero(truncated)[0] + 1)


def recover(spec, S, rank_tol=linalg.DEFAULT_RANK_TOL, zero_tol=0.0):
    """Trajectory paired with a dual field: Y_k = pinv(G_k) t_k.

    Returns ``(Y, singular_blocks)``; where all blocks are nonsingular
    the result is the unique stationary point of Xi(., S).
    """
    form = collect(spec, S)
    Y, truncated = linalg.pinv_apply_batch(form.G, form.t, rank_tol, zero_tol)
    return Y, list(np.nonzero(truncated)[0] + 1)


def xi_grad(spec, Y, S):
    """Gradient of Xi in both slots -> (grad_Y (d, n), grad_S (d, n))."""
    Y = check_trajectory(spec, Y)
    S = _check_field(spec, S)
    form = collect(spec, S)
    grad_y = np.einsum("kpq,qk->pk", form.G, Y) - form.t
    grad_s = residuals(spec, Y) - S
    return grad_y, grad_s


@dataclass
class TrialityCertificate:
    """Extremality classification of an (approximate) critical pair."""

    verdict: str
    min_eig: float
    max_eig: float
    gap: float
    singular_blocks: list
    grad_norm: float
    critical: bool
    tol: float

    def serialize(self):
        blocks = ",".join(str(b) for b in self.singular_blocks) or "none"
        return "\n".join([
            f"verdict = {self.verdict}",
            f"min_eig = {self.min_eig:.17g}",
            f"max_eig = {self.max_eig:.17g}",
            f"gap = {self.gap:.17g}",
            f"singular_blocks = {blocks}",
            f"grad_norm = {self.grad_norm:.17g}",
            f"critical = {self.critical}",
            f"tol = {self.tol:.17g}",
        ]) + "\n"


def certify(spec, S, Y, tol=DEFAULT_CERT_TOL, require_critical=True):
    """Classify a critical pair of Xi by the sign of its G blocks.

    Parameters
    ----------
    S, Y : (d, n) arrays
        Approximate critical pair; criticality is checked against
        ``tol`` scaled by the iterate size.
    tol : float
        Absolute eigenvalue tolerance; also the truncation floor used
        when evaluating the dual value for the gap record.
    require_critical : bool
        When True (default), a pair that fails the criticality check
        raises :class:`NotCritical`.  Solvers pass False to record an
        uncertified result instead.
    """
    Y = check_trajectory(spec, Y)
    S = _check_field(spec, S)
    grad_y, grad_s = xi_grad(spec, Y, S)
    grad_norm = max(float(np.max(np.abs(grad_y))), float(np.max(np.abs(grad_s))))
    scale = max(1.0, float(np.max(np.abs(Y))), float(np.max(np.abs(S))))
    critical = grad_norm <= 10.0 * tol * scale
    if not critical and require_critical:
        raise NotCritical(
            f"gradient norm {grad_norm:.3e} exceeds {10.0 * tol * scale:.3e}")

    form = collect(spec, S)
    eigvals = linalg.eigh_batch(form.G)[0]
    lo = float(eigvals[:, 0].min())
    hi = float(eigvals[:, -1].max())
    if not critical:
        verdict = UNCERTIFIED
    elif lo >= -tol:
        verdict = GLOBAL_MINIMUM
    elif hi <= tol:
        verdict = LOCAL_CLASS
    else:
        verdict = UNCERTIFIED

    primal = objective(spec, Y)
    dual, singular = dual_function(spec, S, zero_tol=tol)
    gap = abs(primal - dual)
    return TrialityCertificate(verdict=verdict, min_eig=lo, max_eig=hi, gap=gap,
                               singular_blocks=singular, grad_norm=grad_norm,
                               critical=critical, tol=tol)
