"""Brute-force reference implementations used by tests and acceptance runs.

Everything here is deliberately naive and shares no code with the library
paths it certifies: steering vectors, shift matrices, and the quadratic
cost matrices are rebuilt from their definitions with explicit loops, and
the quartic kernel Psi is materialized densely (capped at N <= PSI_CAP).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dfrcwave.model import CapacityError, Weights
from dfrcwave.radar import RadarScene

#: Largest N = L * n_tx for which the dense N^2 x N^2 kernel is assembled.
PSI_CAP = 16


def _steer(n_tx: int, spacing: float, theta_deg: float) -> np.ndarray:
    theta = theta_deg * np.pi / 180.0
    return np.array(
        [np.exp(2j * np.pi * spacing * k * np.sin(theta)) for k in range(n_tx)]
    )


def _shift(tau: int, length: int) -> np.ndarray:
    j = np.zeros((length, length))
    for i in range(length):
        for k in range(length):
            if k - i == tau:
                j[i, k] = 1.0
    return j


def _vec(m: np.ndarray) -> np.ndarray:
    n_rows, n_cols = m.shape
    out = np.empty(n_rows * n_cols, dtype=complex)
    for c in range(n_cols):
        out[c * n_rows : (c + 1) * n_rows] = m[:, c]
    return out


def _a_mats(scene: RadarScene) -> list[np.ndarray]:
    """A_u = I_L kron a(theta_u) a^H(theta_u) for every grid angle."""
    geo = scene.geometry
    eye = np.eye(scene.block_len)
    out = []
    for theta in scene.grid.angles_deg:
        a = _steer(geo.n_tx, geo.spacing, theta)
        out.append(np.kron(eye, np.outer(a, a.conj())))
    return out


def _b_mats(scene: RadarScene) -> list[np.ndarray]:
    """B_u from the closed-form alpha elimination, built from the A_u."""
    a_mats = _a_mats(scene)
    gd = scene.desired.values
    denom = sum(g * g for g in gd)
    s = sum(g * a for g, a in zip(gd, a_mats))
    return [gd[u] * s / denom - a_mats[u] for u in range(len(a_mats))]


def _d_mats(scene: RadarScene) -> dict[tuple[int, int, int], np.ndarray]:
    """D_{tau,q,q'} = J_{-tau} kron a(theta_q') a^H(theta_q), keyed (tau, q, q')."""
    geo = scene.geometry
    steers = [_steer(geo.n_tx, geo.spacing, th) for th in scene.targets.angles_deg]
    p = scene.targets.max_lag
    out = {}
    for tau in range(-p + 1, p):
        j_neg = _shift(-tau, scene.block_len)
        for q, a_q in enumerate(steers):
            for qp, a_qp in enumerate(steers):
                out[(tau, q, qp)] = np.kron(j_neg, np.outer(a_qp, a_q.conj()))
    return out


@dataclass(frozen=True)
class DenseQuartic:
    """Dense quartic kernel: g(x) = vec^H(x x^H) Psi vec(x x^H)."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi)
        if np.abs(psi - psi.conj().T).max(initial=0.0) > 1e-10 * max(
            1.0, np.abs(psi).max(initial=0.0)
        ):
            raise ValueError("Psi must be Hermitian")
        object.__setattr__(self, "psi", psi)

    def evaluate(self, x: np.ndarray) -> float:
        v = _vec(np.outer(np.asarray(x), np.asarray(x).conj()))
        return float((v.conj() @ self.psi @ v).real)


def assemble_psi(scene: RadarScene, weights: Weights) -> DenseQuartic:
    """Materialize Psi = sum_k c_k vec(M_k) vec^H(M_k) over all cost terms."""
    n = scene.n
    if n > PSI_CAP:
        raise CapacityError(f"dense Psi assembly is capped at N <= {PSI_CAP}, got {n}")
    psi = np.zeros((n * n, n * n), dtype=complex)
    if weights.w_bp > 0:
        for b in _b_mats(scene):
            v = _vec(b)
            psi += weights.w_bp * np.outer(v, v.conj())
    d_mats = _d_mats(scene)
    p = scene.targets.max_lag
    q_n = scene.targets.n_targets
    if weights.w_ac > 0:
        for q in range(q_n):
            for tau in range(-p + 1, p):
                if tau == 0:
                    continue
                v = _vec(d_mats[(tau, q, q)])
                psi += weights.w_ac * np.outer(v, v.conj())
    if weights.w_cc > 0:
        for q in range(q_n):
            for qp in range(q_n):
                if q == qp:
                    continue
                for tau in range(-p + 1, p):
                    v = _vec(d_mats[(tau, q, qp)])
                    psi += weights.w_cc * np.outer(v, v.conj())
    return DenseQuartic(psi=psi)


def beampattern_mse(x, scene: RadarScene, alpha: float) -> float:
    """Direct pattern-matching MSE sum_u |alpha G_d(theta_u) - G(x, theta_u)|^2."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = _vec(x)
    total = 0.0
    for a_u, g_d in zip(_a_mats(scene), scene.desired.values):
        achieved = (x.conj() @ a_u @ x).real
        total += abs(alpha * g_d - achieved) ** 2
    return total


def grid_alpha(x, scene: RadarScene, n_grid: int = 10_000) -> float:
    """Best scale on a dense grid over [0, 2 * max achieved pattern]."""
    if n_grid < 1000:
        raise ValueError("grid search needs at least 1000 candidates")
    x = np.asarray(x)
    if x.ndim == 2:
        x = _vec(x)
    achieved = np.array(
        [(x.conj() @ a_u @ x).real for a_u in _a_mats(scene)]
    )
    gd = scene.desired.values
    candidates = np.linspace(0.0, 2.0 * max(achieved.max(), 0.0), n_grid)
    mse = ((candidates[:, None] * gd[None, :] - achieved[None, :]) ** 2).sum(axis=1)
    return float(candidates[np.argmin(mse)])


def direct_correlation(x, scene: RadarScene, tau: int, q: int, q_prime: int) -> float:
    """chi_{tau,q,q'} from the definition, with explicitly built J and steering."""
    x = np.asarray(x)
    X = x if x.ndim == 2 else x.reshape((scene.geometry.n_tx, -1), order="F")
    geo = scene.geometry
    a_q = _steer(geo.n_tx, geo.spacing, scene.targets.angles_deg[q])
    a_qp = _steer(geo.n_tx, geo.spacing, scene.targets.angles_deg[q_prime])
    val = a_q.conj() @ X @ _shift(tau, X.shape[1]) @ X.conj().T @ a_qp
    return float(abs(val) ** 2)


def direct_isls(x, scene: RadarScene) -> tuple[float, float]:
    """(autocorrelation ISL, cross-correlation ISL) by direct triple loops."""
    p = scene.targets.max_lag
    q_n = scene.targets.n_targets
    g_ac = 0.0
    for q in range(q_n):
        for tau in range(-p + 1, p):
            if tau != 0:
                g_ac += direct_correlation(x, scene, tau, q, q)
    g_cc = 0.0
    for q in range(q_n):
        for qp in range(q_n):
            if q == qp:
                continue
            for tau in range(-p + 1, p):
                g_cc += direct_correlation(x, scene, tau, q, qp)
    return g_ac, g_cc


def phase_bruteforce(
    d: np.ndarray,
    h_tilde_weighted: np.ndarray,
    n_phases: int = 10_000,
) -> np.ndarray:
    """Per-entry grid argmin of the inner Lagrangian Re{x^H (d - sum nu_m h~_m)}.

    The Lagrangian separates across entries under the modulus constraint, so
    each phase is searched independently on ``n_phases`` equispaced points.
    Returns the phase vector.
    """
    coef = np.asarray(d) - np.asarray(h_tilde_weighted)
    grid = 2 * np.pi * np.arange(n_phases) / n_phases
    # Re{e^{-j phi} c} for all candidate phases and entries
    scores = np.cos(grid)[:, None] * coef.real[None, :] + np.sin(grid)[:, None] * coef.imag[None, :]
    return grid[np.argmin(scores, axis=0)]


def power_iteration(mat: np.ndarray, seed: int = 0, tol: float = 1e-12, max_iters: int = 200_000) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix by plain power iteration."""
    rng = np.random.default_rng(seed)
    n = mat.shape[0]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        lam_new = float((v.conj() @ mat @ v).real)
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam
