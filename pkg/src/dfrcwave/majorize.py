"""Two-stage majorization of the quartic radar cost.

Stage one bounds the quartic form vec^H(xx^H) Psi vec(xx^H) by a quadratic
x^H Phi x using either the row-sum diagonal bound diag(|Psi| 1) (tight) or
the classical lambda_max(Psi) I bound (baseline). Stage two bounds the
quadratic by a linear form Re{x^H d} using the same device on Phi. Under
the constant-modulus constraint both discarded terms are constants, so MM
descent only needs d.

Psi is never stored: its row-wise absolute sums are streamed from the
rank-one terms c_k vec(M_k) vec^H(M_k), M_k ranging over the B_u and
D_{tau,q,q'} matrices of the scene. This costs O(T N^4) time and O(N^2)
memory and is capped at N <= E_CAP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from dfrcwave.model import CapacityError, Weights
from dfrcwave.radar import RadarScene

#: Largest N = L * n_tx for which the streamed Psi row sums are computed.
E_CAP = 64

#: Default row-chunk size for the streamed row-sum pass.
_ROW_CHUNK = 256


def diagonal_upper_bound(q_mat: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Row sums of |Q| for Hermitian Q; diag of the result dominates Q in the PSD order.

    Raises ValueError when Q is not Hermitian to within ``tol`` (relative,
    |a - b| <= tol * max(1, |a|, |b|)).
    """
    q_mat = np.asarray(q_mat)
    if q_mat.ndim != 2 or q_mat.shape[0] != q_mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {q_mat.shape}")
    scale = max(1.0, float(np.abs(q_mat).max(initial=0.0)))
    asym = float(np.abs(q_mat - q_mat.conj().T).max(initial=0.0))
    if asym > tol * scale:
        raise ValueError(f"matrix is not Hermitian: asymmetry {asym:.3e} vs scale {scale:.3e}")
    return np.abs(q_mat).sum(axis=1)


def _vec_stack(mats: np.ndarray) -> np.ndarray:
    """Column-major vec of each matrix in a (T, N, N) stack, as rows (T, N^2)."""
    t, n, _ = mats.shape
    return mats.transpose(0, 2, 1).reshape(t, n * n)


def _scene_terms(scene: RadarScene, weights: Weights):
    """Rank-one factors of Psi: rows vec(M_k) with weights c_k.

    Returns (vectors, coeffs) with vectors of shape (T, N^2). Zero-weight
    cost groups are dropped entirely.
    """
    if not scene.materialized:
        raise CapacityError(
            f"scene with N = {scene.n} has no dense B/D matrices; "
            f"the streamed Psi pass requires N <= {E_CAP}"
        )
    p = scene.targets.max_lag
    q_n = scene.targets.n_targets
    groups = []
    if weights.w_bp > 0:
        groups.append((weights.w_bp, _vec_stack(scene.b_mats)))
    if weights.w_ac > 0 and p > 1:
        taus = [t for t in range(2 * p - 1) if t != p - 1]
        mats = scene.d_mats[taus][:, np.arange(q_n), np.arange(q_n)]
        groups.append((weights.w_ac, _vec_stack(mats.reshape(-1, scene.n, scene.n))))
    if weights.w_cc > 0 and q_n > 1:
        pairs = [(q, qp) for q in range(q_n) for qp in range(q_n) if q != qp]
        mats = np.stack(
            [scene.d_mats[t, q, qp] for t in range(2 * p - 1) for q, qp in pairs]
        )
        groups.append((weights.w_cc, _vec_stack(mats)))
    if not groups:
        raise ValueError("no active cost terms: all usable weights are zero")
    vectors = np.concatenate([g[1] for g in groups], axis=0)
    coeffs = np.concatenate([np.full(g[1].shape[0], g[0]) for g in groups])
    return vectors, coeffs


def _psi_row_abs_sums(vectors: np.ndarray, coeffs: np.ndarray, chunk: int = _ROW_CHUNK) -> np.ndarray:
    """Row sums of |Psi| with Psi = sum_k c_k v_k v_k^H, without storing Psi.

    Row blocks are formed as (V[:, rows].T * c) @ conj(V); the absolute row
    sums use numpy's pairwise summation over the contiguous axis.
    """
    n2 = vectors.shape[1]
    out = np.empty(n2)
    v_conj = vectors.conj()
    for start in range(0, n2, chunk):
        stop = min(start + chunk, n2)
        rows = (vectors[:, start:stop].T * coeffs) @ v_conj
        out[start:stop] = np.abs(rows).sum(axis=1)
    return out


def _check_cap(scene: RadarScene) -> None:
    if scene.n > E_CAP:
        raise CapacityError(
            f"N = {scene.n} exceeds the documented cap {E_CAP} for the dense "
            "quartic-kernel passes"
        )


def precompute_E(scene: RadarScene, weights: Weights) -> np.ndarray:
    """Matricized row sums E = mat(|Psi| 1): real, symmetric, nonnegative N x N.

    Depends only on the scene and weights, so it is computed once per
    problem and reused across MM iterations.
    """
    _check_cap(scene)
    vectors, coeffs = _scene_terms(scene, weights)
    row_sums = _psi_row_abs_sums(vectors, coeffs)
    e_mat = row_sums.reshape((scene.n, scene.n), order="F")
    # symmetric in exact arithmetic; enforce it so E (.) x x^H stays Hermitian
    return 0.5 * (e_mat + e_mat.T)


def lambda_psi(scene: RadarScene, weights: Weights) -> float:
    """Largest eigenvalue of the assembled quartic kernel Psi.

    Psi = A A^H with A = [sqrt(c_k) vec(M_k)]_k, so the nonzero spectrum
    equals that of the T x T Gram matrix A^H A, solved densely.
    """
    _check_cap(scene)
    vectors, coeffs = _scene_terms(scene, weights)
    scaled = vectors * np.sqrt(coeffs)[:, None]
    gram = scaled.conj() @ scaled.T
    top = float(np.linalg.eigvalsh(gram)[-1])
    return max(top, 0.0)


@dataclass(frozen=True)
class MajorizerContext:
    """Per-problem majorizer data: E (diagonal kind) or lambda_Psi (eigen kind).

    Also caches the stacked B/D matrices and the canonical half of each
    correlation index set (the other half enters through Hermitian
    conjugation), so per-iteration Phi assembly is pure tensor algebra.
    """

    kind: str
    weights: Weights
    n: int
    b_mats: np.ndarray
    ac_mats: np.ndarray
    cc_mats: np.ndarray
    e_mat: Optional[np.ndarray] = None
    lambda_quartic: Optional[float] = None


def _half_index_stacks(scene: RadarScene):
    """Canonical-half D stacks: lags > 0 for autocorrelation terms, and
    lags > 0 plus (lag 0, q < q') for cross terms."""
    p = scene.targets.max_lag
    q_n = scene.targets.n_targets
    n = scene.n
    ac_sel = [
        scene.d_mats[t, q, q] for t in range(p, 2 * p - 1) for q in range(q_n)
    ]
    cc_sel = [
        scene.d_mats[t, q, qp]
        for t in range(p, 2 * p - 1)
        for q in range(q_n)
        for qp in range(q_n)
        if q != qp
    ]
    cc_sel += [
        scene.d_mats[p - 1, q, qp]
        for q in range(q_n)
        for qp in range(q_n)
        if q < qp
    ]
    empty = np.empty((0, n, n), dtype=complex)
    ac = np.stack(ac_sel) if ac_sel else empty
    cc = np.stack(cc_sel) if cc_sel else empty
    return ac, cc


def build_majorizer_context(
    scene: RadarScene, weights: Weights, kind
) -> MajorizerContext:
    """Precompute everything x_t-independent for the requested majorizer kind."""
    kind = str(getattr(kind, "value", kind))
    if kind not in ("diagonal", "max_eigen"):
        raise ValueError(f"unknown majorizer kind {kind!r}")
    _check_cap(scene)
    if not scene.materialized:
        raise CapacityError("majorization requires a materialized scene (N <= E_CAP)")
    ac_mats, cc_mats = _half_index_stacks(scene)
    ac_mats.setflags(write=False)
    cc_mats.setflags(write=False)
    e_mat = lam = None
    if kind == "diagonal":
        e_mat = precompute_E(scene, weights)
        e_mat.setflags(write=False)
    else:
        lam = lambda_psi(scene, weights)
    return MajorizerContext(
        kind=kind,
        weights=weights,
        n=scene.n,
        b_mats=scene.b_mats,
        ac_mats=ac_mats,
        cc_mats=cc_mats,
        e_mat=e_mat,
        lambda_quartic=lam,
    )


def _quad_coeffs(x: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """x^H M x for each matrix in a (T, N, N) stack."""
    return np.einsum("i,kij,j->k", x.conj(), mats, x)


def build_phi(x_t: np.ndarray, ctx: MajorizerContext) -> np.ndarray:
    """Quadratic-stage majorizer matrix Phi at the expansion point x_t.

    Phi = 2 (w_bp Phi1 + w_ac Phi2 + w_cc Phi3 - E (.) x_t x_t^H) for the
    diagonal kind; the eigen kind replaces the subtracted term with
    lambda_Psi x_t x_t^H. Exactly Hermitian by construction.
    """
    x_t = np.asarray(x_t)
    w = ctx.weights
    acc = np.zeros((ctx.n, ctx.n), dtype=complex)
    if w.w_bp > 0:
        beta = _quad_coeffs(x_t, ctx.b_mats).real
        acc += w.w_bp * np.tensordot(beta, ctx.b_mats, axes=1)
    for weight, mats in ((w.w_ac, ctx.ac_mats), (w.w_cc, ctx.cc_mats)):
        if weight > 0 and mats.shape[0]:
            half = np.tensordot(_quad_coeffs(x_t, mats).conj(), mats, axes=1)
            acc += weight * (half + half.conj().T)
    outer = np.outer(x_t, x_t.conj())
    if ctx.kind == "diagonal":
        sub = ctx.e_mat * outer
    else:
        sub = ctx.lambda_quartic * outer
    return 2.0 * (acc - sub)


@dataclass(frozen=True)
class SurrogateLinear:
    """Linear-stage majorizer: direction d and the constant completing the bound.

    ``const_offset`` makes x^H Phi x <= Re{x^H d} + const_offset hold for
    every constant-modulus x; it is diagnostic only, since MM descent under
    constant modulus compares Re{x^H d} across iterates.
    """

    d: np.ndarray
    const_offset: float


def build_d(x_t: np.ndarray, phi: np.ndarray, ctx: MajorizerContext) -> SurrogateLinear:
    """Linearize the quadratic surrogate at x_t.

    Diagonal kind: d = 2 (Phi - diag(|Phi| 1)) x_t. Eigen kind:
    d = 2 (Phi - lambda_max(Phi) I) x_t. Requires a constant-modulus x_t,
    whose squared amplitude is read off the expansion point itself.
    """
    x_t = np.asarray(x_t)
    amp2 = float(np.mean(np.abs(x_t) ** 2))
    if ctx.kind == "diagonal":
        row = diagonal_upper_bound(phi)
        d = 2.0 * (phi @ x_t - row * x_t)
        const = amp2 * float(row.sum())
        const += float((row * np.abs(x_t) ** 2).sum() - (x_t.conj() @ phi @ x_t).real)
    else:
        lam = float(np.linalg.eigvalsh(phi)[-1])
        d = 2.0 * (phi @ x_t - lam * x_t)
        const = lam * amp2 * x_t.size
        const += float(lam * (np.abs(x_t) ** 2).sum() - (x_t.conj() @ phi @ x_t).real)
    return SurrogateLinear(d=d, const_offset=const)
