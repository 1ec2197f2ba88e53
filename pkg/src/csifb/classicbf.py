"""Classical beamforming oracles and rate metrics.

These are the paper-free anchors: the phase-aligned beamformer is the exact
optimum of the single-cell unit-modulus problem, and the multi-cell oracle
runs projected gradient ascent on the beam phases to maximize per-user SINR.
Both serve as upper bounds and correctness checks for the trained networks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateParams:
    """rho = P/sigma^2 (linear SNR), alpha = interfering/desired power ratio."""

    rho: float
    alpha: float
    n_t: int

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be positive and finite, got {self.rho}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")


def conj_phase_bf(h) -> np.ndarray:
    """Phase-aligned beam: v_k = exp(j*arg(h_k)); the single-cell optimum.

    Achieves |h^H v| = sum_k |h_k|, the best any unit-modulus beam can do.
    Zero channel entries map to phase 0. Works on (..., n_t) batches.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel entries must be finite")
    return np.exp(1j * np.angle(h))


def spectral_efficiency(h, v_rf, params: RateParams):
    """Single-cell SE in bits/s/Hz: log2(1 + (rho/n_t)*|h^H v|^2). Batched over rows."""
    h = np.asarray(h, dtype=np.complex128)
    v = np.asarray(v_rf, dtype=np.complex128)
    z = np.sum(np.conj(h) * v, axis=-1)
    gain = z.real**2 + z.imag**2
    return np.log2(1.0 + (params.rho / params.n_t) * gain)


def sinr(h, g, v_rf, params: RateParams):
    """Per-user SINR with w = v/sqrt(n_t): |h^H w|^2 / (alpha*|g^H w|^2 + 1/rho)."""
    h = np.asarray(h, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    v = np.asarray(v_rf, dtype=np.complex128)
    zh = np.sum(np.conj(h) * v, axis=-1)
    zg = np.sum(np.conj(g) * v, axis=-1)
    desired = (zh.real**2 + zh.imag**2) / params.n_t
    interference = params.alpha * (zg.real**2 + zg.imag**2) / params.n_t
    return desired / (interference + 1.0 / params.rho)


def sinr_and_rate(h, g, v_rf, params: RateParams):
    """(sinr, rate) with rate = log2(1 + sinr)."""
    s = sinr(h, g, v_rf, params)
    return s, np.log2(1.0 + s)


def sum_rate(sinrs):
    """Sum over users of log2(1 + sinr_k)."""
    return float(np.sum(np.log2(1.0 + np.asarray(sinrs, dtype=np.float64))))


def mean_rate(sinrs):
    return sum_rate(sinrs) / len(sinrs)


@dataclass
class OracleResult:
    v_rf: np.ndarray
    objective: float
    converged: bool
    best_restart: int


def _sinr_objective_and_grad(phases, h, g, alpha, inv_rho_nt):
    """Objective |h^H v|^2 / (alpha*|g^H v|^2 + n_t/rho) and its phase gradient."""
    v = np.exp(1j * phases)
    zh = np.vdot(h, v)
    zg = np.vdot(g, v)
    a_val = zh.real**2 + zh.imag**2
    b_val = alpha * (zg.real**2 + zg.imag**2) + inv_rho_nt
    obj = a_val / b_val
    # d|z|^2/dphi_k = -2*Im(conj(z)*conj(c_k)*v_k) for z = sum conj(c_k) v_k
    da = -2.0 * np.imag(np.conj(zh) * np.conj(h) * v)
    db = -2.0 * alpha * np.imag(np.conj(zg) * np.conj(g) * v)
    grad = da / b_val - obj * db / b_val
    return obj, grad


def multicell_bf_oracle(h, g, params: RateParams, restarts: int = 8,
                        max_iter: int = 500, tol: float = 1e-9,
                        seed: int = 0) -> OracleResult:
    """Best-of-restarts gradient ascent on beam phases for the SINR objective.

    Restart 0 starts from the phase-aligned beam, so the returned objective is
    never below the conjugate-phase value. Ties between restarts break toward
    the lowest restart index. The converged flag is False when any surviving
    best restart hit max_iter without meeting the improvement tolerance.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    h = np.asarray(h, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    n_t = h.shape[0]
    if params.n_t != n_t:
        raise ValueError(f"params.n_t={params.n_t} does not match channel length {n_t}")
    inv_rho_nt = n_t / params.rho
    rng = np.random.default_rng(seed)

    best_obj = -np.inf
    best_phases = None
    best_restart = -1
    best_converged = True
    for r in range(restarts):
        if r == 0:
            phases = np.angle(h).astype(np.float64)
        else:
            phases = rng.uniform(-np.pi, np.pi, size=n_t)
        obj, grad = _sinr_objective_and_grad(phases, h, g, params.alpha, inv_rho_nt)
        converged = False
        step = 1.0
        for _ in range(max_iter):
            gnorm2 = float(np.dot(grad, grad))
            if gnorm2 == 0.0:
                converged = True
                break
            # backtracking Armijo search along the gradient
            improved = False
            t = step
            for _ in range(50):
                cand = phases + t * grad
                cand_obj, cand_grad = _sinr_objective_and_grad(
                    cand, h, g, params.alpha, inv_rho_nt)
                if cand_obj >= obj + 1e-4 * t * gnorm2:
                    improved = True
                    break
                t *= 0.5
            if not improved:
                converged = True
                break
            gain = cand_obj - obj
            phases, obj, grad = cand, cand_obj, cand_grad
            step = min(t * 2.0, 1e6)
            if gain < tol:
                converged = True
                break
        if obj > best_obj:
            best_obj = obj
            best_phases = phases
            best_restart = r
            best_converged = converged
    return OracleResult(v_rf=np.exp(1j * best_phases), objective=float(best_obj),
                        converged=best_converged, best_restart=best_restart)


def bit_accounting(n_t: int, bits: int, beta):
    """Feedback-bit budget: (2*n_t/beta)*bits per stream.

    beta may be a single compression ratio or a (beta_h, beta_g) pair; in both
    cases every ratio must divide 2*n_t. Returns (total_bits, per_stream).
    """
    if n_t < 1:
        raise ValueError(f"n_t must be >= 1, got {n_t}")
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    betas = tuple(beta) if isinstance(beta, (tuple, list)) else (beta,)
    per_stream = []
    for b in betas:
        if b < 1 or (2 * n_t) % b != 0:
            raise ValueError(f"compression ratio {b} does not divide 2*n_t={2 * n_t}")
        per_stream.append((2 * n_t // b) * bits)
    return sum(per_stream), tuple(per_stream)
