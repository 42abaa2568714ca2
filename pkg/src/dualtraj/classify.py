"""Structural chaos classifier built on the quadratic-slice pencil.

Whether a dual field with every block ``G(sigma_k)`` positive
semidefinite can exist at all is a property of the linear pencil

    pencil(s) = sum_i s_i Sym(A_i),

because each block is this pencil evaluated at a sigma-sum direction
(scaled by a positive step factor; scale and global sign do not affect
attainability since s ranges over the whole sphere).  Three outcomes:

* ``pd-attainable``   -- some direction makes the pencil positive
  definite; the dual problem has interior feasible points and the
  system is expected to integrate stably.
* ``boundary-only``   -- positive semidefinite is attainable only with
  singular (but nonzero) pencil values; global trajectories are still
  reachable through perturbation, yet step-by-step integrators may
  show pseudo-chaos driven by error accumulation.
* ``indefinite-only`` -- every nonzero reachable pencil value is
  indefinite, the dual problem is unsolvable, the least-squares problem
  is conjectured NP-hard, and the system is classified as genuinely
  chaotic.

The score ``mu_star = max_{|s|=1} lambda_min(pencil(s))`` decides the
first case; a semidefinite witness with nonzero pencil separates the
other two.  ``mu_star`` is estimated by dense sphere sampling followed
by coordinate-ascent refinement, which is cheap and reliable for the
d <= 8 systems this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidInput

PD_ATTAINABLE = "pd-attainable"
BOUNDARY_ONLY = "boundary-only"
INDEFINITE_ONLY = "indefinite-only"

_PROGNOSIS = {
    PD_ATTAINABLE: ("stable; iteration methods shouldn't produce chaos "
                    "(assumes the dual solution is unique)"),
    BOUNDARY_ONLY: ("deterministically stable; iterative methods may "
                    "produce pseudo-chaos"),
    INDEFINITE_ONLY: ("NP-hard (canonical dual unsolvable); genuinely "
                      "chaotic"),
}


@dataclass
class Verdict:
    """Classification result for one system."""

    kind: str
    mu_star: float
    witness_s: np.ndarray
    evidence: np.ndarray  # (m, 2d): sampled directions and their eigenvalues
    note: str = ""


def pencil(system, s):
    """Evaluate sum_i s_i Sym(A_i) -> (d, d) symmetric matrix."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.shape != (system.d,):
        raise InvalidInput(f"direction must have length {system.d}, got {s.shape}")
    return np.einsum("i,ipq->pq", s, system.A)


def pencil_batch(system, ss):
    """Evaluate the pencil at every row of ``ss`` -> (m, d, d) stack."""
    ss = np.asarray(ss, dtype=float)
    return np.einsum("mi,ipq->mpq", ss, system.A)


def structurally_pd_impossible(system):
    """Structural-zero shortcut: a diagonal position that every slice
    leaves zero, while some slice puts a nonzero entry in its row, rules
    out positive definiteness for every direction."""
    A = system.A
    for j in range(system.d):
        if np.all(A[:, j, j] == 0.0) and np.any(A[:, j, :] != 0.0):
            return True
    return False


def _min_eigs(system, ss):
    return linalg.min_eig_batch(pencil_batch(system, ss))


def _refine_max_min_eig(system, s, steps=None):
    """Coordinate ascent of lambda_min(pencil(s)) on the unit sphere."""
    if steps is None:
        steps = 0.5 ** np.arange(1, 44)
    s = s / np.linalg.norm(s)
    best = float(linalg.min_eig_batch(pencil_batch(system, s[None]))[0])
    d = s.shape[0]
    for step in steps:
        improved = True
        while improved:
            improved = False
            cands = np.repeat(s[None], 2 * d, axis=0)
            for i in range(d):
                cands[2 * i, i] += step
                cands[2 * i + 1, i] -= step
            cands /= np.linalg.norm(cands, axis=1, keepdims=True)
            vals = _min_eigs(system, cands)
            idx = int(np.argmax(vals))
            if vals[idx] > best + 1e-18:
                best = float(vals[idx])
                s = cands[idx]
                improved = True
    return s, best


def _refine_boundary_witness(system, seeds, feas_tol):
    """Maximize ||pencil(s)||_F over directions with lambda_min >= -feas_tol."""
    best_s, best_norm = None, -1.0
    steps = 0.5 ** np.arange(1, 40)
    for s0 in seeds:
        s = s0 / np.linalg.norm(s0)
        if float(_min_eigs(system, s[None])[0]) < -feas_tol:
            continue
        norm = float(np.linalg.norm(pencil(system, s)))
        d = s.shape[0]
        for step in steps:
            improved = True
            while improved:
                improved = False
                cands = np.repeat(s[None], 2 * d, axis=0)
                for i in range(d):
                    cands[2 * i, i] += step
                    cands[2 * i + 1, i] -= step
                cands /= np.linalg.norm(cands, axis=1, keepdims=True)
                blocks = pencil_batch(system, cands)
                feas = linalg.min_eig_batch(blocks) >= -feas_tol
                norms = np.linalg.norm(blocks.reshape(2 * d, -1), axis=1)
                norms[~feas] = -np.inf
                idx = int(np.argmax(norms))
                if norms[idx] > norm + 1e-18:
                    norm = float(norms[idx])
                    s = cands[idx]
                    improved = True
        if norm > best_norm:
            best_s, best_norm = s, norm
    return best_s, best_norm


def classify(system, tol=1e-9, budget=100_000, seed=0):
    """Classify a system by sphere sampling plus local refinement.

    Deterministic for fixed ``(tol, budget, seed)``.
    """
    if tol <= 0.0:
        raise InvalidInput("tol must be positive")
    d = system.d

    if np.all(system.A == 0.0):
        # no quadratic part at all: the pencil is identically zero and
        # every dual block is trivially semidefinite (linear system)
        e1 = np.zeros(d)
        e1[0] = 1.0
        evidence = np.zeros((1, 2 * d))
        evidence[0, :d] = e1
        return Verdict(kind=BOUNDARY_ONLY, mu_star=0.0, witness_s=e1,
                       evidence=evidence,
                       note="zero pencil: system has no quadratic part")

    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((max(budget, 2 * d), d))
    samples[: 2 * d] = np.vstack([np.eye(d), -np.eye(d)])
    norms = np.linalg.norm(samples, axis=1)
    norms[norms == 0.0] = 1.0
    samples /= norms[:, None]
    blocks = pencil_batch(system, samples)
    eigs = linalg.eigh_batch(blocks)[0]
    lam_min = eigs[:, 0]

    s_best = samples[int(np.argmax(lam_min))]
    witness, mu_star = _refine_max_min_eig(system, s_best)

    keep = min(samples.shape[0], 512)
    evidence = np.hstack([samples[:keep], eigs[:keep]])

    if mu_star > tol:
        return Verdict(kind=PD_ATTAINABLE, mu_star=mu_star, witness_s=witness,
                       evidence=evidence)
    if mu_star < -tol:
        return Verdict(kind=INDEFINITE_ONLY, mu_star=mu_star, witness_s=witness,
                       evidence=evidence)

    # semidefinite is attainable but definite is not: look for a witness
    # with a nonzero pencil among the near-feasible directions
    feas_tol = tol / 10.0
    order = np.argsort(lam_min)[::-1][:8]
    seeds = [witness] + [samples[i] for i in order]
    boundary_s, boundary_norm = _refine_boundary_witness(system, seeds, feas_tol)
    if boundary_s is not None and boundary_norm > tol:
        return Verdict(kind=BOUNDARY_ONLY, mu_star=mu_star, witness_s=boundary_s,
                       evidence=evidence)
    return Verdict(kind=INDEFINITE_ONLY, mu_star=mu_star, witness_s=witness,
                   evidence=evidence)


def verdict_to_prognosis(verdict):
    """Human-readable outlook for a verdict (or a bare kind string)."""
    kind = verdict.kind if isinstance(verdict, Verdict) else verdict
    try:
        return _PROGNOSIS[kind]
    except KeyError:
        raise InvalidInput(f"unknown verdict kind {kind!r}") from None


def evidence_csv(verdict, path):
    """Dump the sampled directions and eigenvalues to CSV."""
    m, two_d = verdict.evidence.shape
    d = two_d // 2
    header = ",".join([f"s{i + 1}" for i in range(d)]
                      + [f"eig{i + 1}" for i in range(d)])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in verdict.evidence:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
