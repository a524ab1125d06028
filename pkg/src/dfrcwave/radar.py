"""Radar metrics: steering vectors, beam patterns, and space-time correlation ISLs.

Every cost has two equivalent forms: the direct matrix form acting on the
N_T x L block X, and the vectorized quadratic form acting on x = vec(X)
through the per-angle matrices B_u = I_L (x) C_u and the lag/angle family
D_{tau,q,q'} = J_{-tau} (x) a(theta_q') a^H(theta_q). The quadratic-form
matrices are materialized up to ``MATERIALIZE_CAP`` and represented by
their Kronecker factors above that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from dfrcwave.model import (
    AngleGrid,
    ArrayGeometry,
    DesiredBeamPattern,
    TargetSet,
    WaveformMatrix,
    Weights,
    vec,
)

#: Largest N = L * n_tx for which B_u and D matrices are stored densely.
MATERIALIZE_CAP = 64


def steering_vector(geometry: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Transmit steering vector a(theta), entry n = exp(j 2 pi d (n-1) sin theta)."""
    theta = np.deg2rad(theta_deg)
    n = np.arange(geometry.n_tx)
    return np.exp(2j * np.pi * geometry.spacing * n * np.sin(theta))


def steering_matrix(geometry: ArrayGeometry, angles_deg) -> np.ndarray:
    """Stack steering vectors for several angles as rows: shape (U, n_tx)."""
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    n = np.arange(geometry.n_tx)
    return np.exp(2j * np.pi * geometry.spacing * np.outer(np.sin(theta), n))


def shift_matrix(tau: int, length: int) -> np.ndarray:
    """L x L lag matrix J_tau with [J]_{i,j} = 1 iff j - i = tau.

    |tau| >= length yields the all-zero matrix (a lag beyond the block
    contributes nothing); this is documented behaviour, not an error.
    """
    return np.eye(length, k=tau)


def rectangular_pattern(
    grid: AngleGrid, target_angles_deg, width_deg: float
) -> DesiredBeamPattern:
    """Rectangular desired pattern: 1 within width/2 of any target angle, else 0."""
    angles = grid.angles_deg[:, None]
    targets = np.asarray(target_angles_deg, dtype=float)[None, :]
    hit = np.abs(angles - targets) <= width_deg / 2 + 1e-12
    return DesiredBeamPattern(hit.any(axis=1).astype(float))


@dataclass(frozen=True)
class RadarScene:
    """Precomputed geometry/grid/target data for the radar cost terms.

    ``c_factors[u]`` is the N_T x N_T Kronecker factor of B_u; ``b_mats``
    and ``d_mats`` are the dense N x N forms (present only when
    N <= MATERIALIZE_CAP). ``d_mats`` is indexed [tau + P - 1, q, q'].
    """

    geometry: ArrayGeometry
    grid: AngleGrid
    desired: DesiredBeamPattern
    targets: TargetSet
    block_len: int
    steer_grid: np.ndarray
    steer_targets: np.ndarray
    c_factors: np.ndarray
    b_mats: Optional[np.ndarray]
    d_mats: Optional[np.ndarray]

    @property
    def n(self) -> int:
        return self.block_len * self.geometry.n_tx

    @property
    def materialized(self) -> bool:
        return self.b_mats is not None


def build_scene(
    geometry: ArrayGeometry,
    grid: AngleGrid,
    desired: DesiredBeamPattern,
    targets: TargetSet,
    block_len: int,
    materialize: Optional[bool] = None,
) -> RadarScene:
    """Assemble a :class:`RadarScene`, materializing B/D matrices at desk scale."""
    if desired.values.size != len(grid):
        raise ValueError(
            f"desired pattern has {desired.values.size} values for a "
            f"{len(grid)}-point grid"
        )
    if block_len < 1:
        raise ValueError(f"block_len must be >= 1, got {block_len}")
    if targets.max_lag - 1 > block_len:
        raise ValueError(
            f"max_lag - 1 = {targets.max_lag - 1} exceeds block length {block_len}"
        )
    a_grid = steering_matrix(geometry, grid.angles_deg)
    a_tgt = steering_matrix(geometry, targets.angles_deg)
    gd = desired.values
    denom = float(np.sum(gd**2))
    # S = sum_u' G_d(theta_u') a_u' a_u'^H, shared by every B_u
    s_mat = np.einsum("u,ui,uj->ij", gd, a_grid, a_grid.conj())
    c_factors = (gd[:, None, None] / denom) * s_mat[None, :, :] - np.einsum(
        "ui,uj->uij", a_grid, a_grid.conj()
    )

    n_total = block_len * geometry.n_tx
    if materialize is None:
        materialize = n_total <= MATERIALIZE_CAP
    b_mats = d_mats = None
    if materialize:
        eye = np.eye(block_len)
        b_mats = np.stack([np.kron(eye, c) for c in c_factors])
        p = targets.max_lag
        q_n = targets.n_targets
        d_mats = np.empty((2 * p - 1, q_n, q_n, n_total, n_total), dtype=complex)
        for t, tau in enumerate(range(-p + 1, p)):
            j_neg = shift_matrix(-tau, block_len)
            for q in range(q_n):
                for qp in range(q_n):
                    d_mats[t, q, qp] = np.kron(
                        j_neg, np.outer(a_tgt[qp], a_tgt[q].conj())
                    )
    for arr in (a_grid, a_tgt, c_factors, b_mats, d_mats):
        if arr is not None:
            arr.setflags(write=False)
    return RadarScene(
        geometry=geometry,
        grid=grid,
        desired=desired,
        targets=targets,
        block_len=block_len,
        steer_grid=a_grid,
        steer_targets=a_tgt,
        c_factors=c_factors,
        b_mats=b_mats,
        d_mats=d_mats,
    )


def _as_block(x, scene: RadarScene) -> np.ndarray:
    """Normalize a WaveformMatrix / block matrix / vec'd vector to N_T x L."""
    if isinstance(x, WaveformMatrix):
        return x.entries
    x = np.asarray(x)
    n_tx = scene.geometry.n_tx
    if x.ndim == 1:
        if x.size != scene.n:
            raise ValueError(f"expected vector of length {scene.n}, got {x.size}")
        return x.reshape((n_tx, scene.block_len), order="F")
    if x.shape != (n_tx, scene.block_len):
        raise ValueError(
            f"expected block of shape {(n_tx, scene.block_len)}, got {x.shape}"
        )
    return x


def beam_pattern(x, geometry: ArrayGeometry, theta_deg: float) -> float:
    """Transmit power toward ``theta_deg``: ||a^H(theta) X||^2."""
    X = x.entries if isinstance(x, WaveformMatrix) else np.asarray(x)
    a = steering_vector(geometry, theta_deg)
    return float(np.sum(np.abs(a.conj() @ X) ** 2))


def achieved_pattern(x, scene: RadarScene) -> np.ndarray:
    """Beam pattern evaluated on the whole scene grid, shape (U,)."""
    X = _as_block(x, scene)
    return np.sum(np.abs(scene.steer_grid.conj() @ X) ** 2, axis=1)


def optimal_alpha(x, scene: RadarScene) -> float:
    """Closed-form scale minimizing the pattern-matching MSE for fixed x."""
    gd = scene.desired.values
    denom = float(np.sum(gd**2))
    if denom == 0:
        raise ValueError("desired pattern is identically zero")
    return float(np.dot(achieved_pattern(x, scene), gd) / denom)


def _bp_quadratic_forms(X: np.ndarray, scene: RadarScene) -> np.ndarray:
    """x^H B_u x for every grid angle (real, since each B_u is Hermitian)."""
    if scene.materialized:
        xv = vec(X)
        return np.einsum("i,uij,j->u", xv.conj(), scene.b_mats, xv).real
    return np.einsum("il,uij,jl->u", X.conj(), scene.c_factors, X).real


def beampattern_cost(x, scene: RadarScene) -> float:
    """Scale-free beam-pattern shaping cost sum_u |x^H B_u x|^2."""
    X = _as_block(x, scene)
    return float(np.sum(_bp_quadratic_forms(X, scene) ** 2))


def correlation(x, scene: RadarScene, tau: int, q: int, q_prime: int) -> float:
    """Space-time correlation |a^H(theta_q) X J_tau X^H a(theta_q')|^2.

    ``q`` and ``q_prime`` are 0-based indices into the scene target set;
    |tau| >= L returns 0 exactly.
    """
    X = _as_block(x, scene)
    j_tau = shift_matrix(tau, scene.block_len)
    a_q = scene.steer_targets[q]
    a_qp = scene.steer_targets[q_prime]
    val = a_q.conj() @ X @ j_tau @ X.conj().T @ a_qp
    return float(np.abs(val) ** 2)


def correlation_values(x, scene: RadarScene) -> np.ndarray:
    """Complex correlations a_q^H X J_tau X^H a_q' for all (tau, q, q').

    Returns shape (2P-1, Q, Q) indexed [tau + P - 1, q, q'], matching the
    layout of ``scene.d_mats``.
    """
    X = _as_block(x, scene)
    p = scene.targets.max_lag
    if scene.d_mats is not None:
        xv = vec(X)
        return np.einsum("i,abcij,j->abc", xv.conj(), scene.d_mats, xv)
    # Kronecker-factor path: row q of v is a_q^H X
    v = scene.steer_targets.conj() @ X
    q_n = scene.targets.n_targets
    length = scene.block_len
    out = np.empty((2 * p - 1, q_n, q_n), dtype=complex)
    for t, tau in enumerate(range(-p + 1, p)):
        if abs(tau) >= length:
            out[t] = 0.0
            continue
        if tau >= 0:
            lead, lag = v[:, : length - tau], v[:, tau:]
        else:
            lead, lag = v[:, -tau:], v[:, : length + tau]
        out[t] = lead @ lag.conj().T
    return out


def _isl_sums(chi: np.ndarray, max_lag: int) -> tuple[float, float]:
    """(autocorr, crosscorr) sidelobe sums from |chi|^2, summing only the
    index sets that belong to each term (no subtraction of the lag-0 peak)."""
    q_n = chi.shape[1]
    idx = np.arange(q_n)
    diag = chi[:, idx, idx]
    nonzero_lag = np.arange(2 * max_lag - 1) != max_lag - 1
    g_ac = float(diag[nonzero_lag].sum())
    g_cc = float(chi[:, ~np.eye(q_n, dtype=bool)].sum())
    return g_ac, g_cc


def autocorr_isl(x, scene: RadarScene) -> float:
    """Autocorrelation ISL: sum over targets and nonzero lags of chi_{tau,q,q}."""
    chi = np.abs(correlation_values(x, scene)) ** 2
    return _isl_sums(chi, scene.targets.max_lag)[0]


def crosscorr_isl(x, scene: RadarScene) -> float:
    """Cross-correlation ISL: sum over ordered target pairs q != q', all lags."""
    chi = np.abs(correlation_values(x, scene)) ** 2
    return _isl_sums(chi, scene.targets.max_lag)[1]


def objective_terms(x, scene: RadarScene) -> tuple[float, float, float]:
    """(beam-pattern cost, autocorrelation ISL, cross-correlation ISL) for x."""
    X = _as_block(x, scene)
    g_bp = float(np.sum(_bp_quadratic_forms(X, scene) ** 2))
    chi = np.abs(correlation_values(X, scene)) ** 2
    g_ac, g_cc = _isl_sums(chi, scene.targets.max_lag)
    return g_bp, g_ac, g_cc


def total_objective(x, scene: RadarScene, weights: Weights) -> float:
    """Weighted radar cost w_bp*g_bp + w_ac*g_ac + w_cc*g_cc."""
    g_bp, g_ac, g_cc = objective_terms(x, scene)
    return weights.w_bp * g_bp + weights.w_ac * g_ac + weights.w_cc * g_cc
