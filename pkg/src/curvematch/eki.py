"""Ensemble Kalman inversion for the initial facet momentum.

The analysis is done in ensemble space: with data anomalies A_i and
momentum anomalies B_i about the survivor means, each member update is

    p_j += sum_i c_i B_i,   (Ghat + (N_v - 1) xi I) c = g_j,

with Ghat_ik the weighted data-anomaly Gram matrix and
g_j[i] = <A_i, target - q_j>. This is algebraically identical to the
covariance form C_pq (C_qq + xi I)^{-1} applied to the innovation, at the
cost of one N x N solve instead of a raster-sized one.

Members whose forward evaluation fails are left out of the analysis and
reset to the post-analysis survivor mean.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AllMembersFailed, ForwardError, SingularGram

_COND_LIMIT = 1.0e14


@dataclass(frozen=True)
class EKIConfig:
    ensemble_size: int = 20
    max_iter: int = 5
    xi: float = 1.0e-3
    seed: int = 0
    init_low: float = -25.0
    init_high: float = 25.0

    def __post_init__(self):
        if self.ensemble_size < 2:
            raise ValueError("ensemble needs at least two members")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")


@dataclass
class EKIResult:
    momenta: np.ndarray
    mean_momentum: np.ndarray
    iterations: np.ndarray
    E: np.ndarray
    R: np.ndarray
    S: np.ndarray


def initial_ensemble(cfg: EKIConfig, num_facets: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(cfg.init_low, cfg.init_high, (cfg.ensemble_size, num_facets))


def analysis_update(
    P: np.ndarray,
    Q: np.ndarray,
    target: np.ndarray,
    w: float,
    xi: float,
) -> np.ndarray:
    """One ensemble-space Kalman analysis over the given (surviving) members."""
    nv = P.shape[0]
    A = Q - Q.mean(axis=0)
    B = P - P.mean(axis=0)
    M = w * (A @ A.T) + (nv - 1) * xi * np.eye(nv)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularGram(f"analysis matrix condition {cond:.3e}")
    G = w * (A @ (target[None, :] - Q).T)
    C = np.linalg.solve(M, G)
    return P + C.T @ B


def _weighted_norm(lengths0: np.ndarray, p: np.ndarray) -> float:
    return float(np.sqrt(np.sum(lengths0 * p * p)))


def run_eki(
    forward,
    target: np.ndarray,
    cfg: EKIConfig,
    num_facets: int,
    lengths0: np.ndarray,
    w: float,
    p_true: np.ndarray | None = None,
    on_iteration=None,
    forward_many=None,
) -> EKIResult:
    """Full inversion loop; `forward` maps a momentum to flat data values.

    Records one diagnostics row per evaluated ensemble (max_iter + 1 rows):
    E is the weighted squared mismatch of the survivor-mean data, S the mean
    momentum-norm spread, R the relative momentum error against p_true when
    given (nan otherwise). `forward_many`, when given, evaluates a whole
    ensemble at once and returns (Q, ok_mask); `on_iteration` receives
    (k, E, R, S, survivor mean momentum) after each diagnostics row.
    """
    rng = np.random.default_rng(cfg.seed)
    P = initial_ensemble(cfg, num_facets, rng)
    target = np.asarray(target, dtype=np.float64)
    n_rows = cfg.max_iter + 1
    E = np.empty(n_rows)
    R = np.full(n_rows, np.nan)
    S = np.empty(n_rows)

    Q = np.empty((cfg.ensemble_size, target.size))
    for k in range(n_rows):
        if forward_many is not None:
            Q, ok = forward_many(P)
            ok = np.asarray(ok, dtype=bool)
        else:
            ok = np.zeros(cfg.ensemble_size, dtype=bool)
            for j in range(cfg.ensemble_size):
                try:
                    Q[j] = forward(P[j])
                    ok[j] = True
                except ForwardError:
                    ok[j] = False
        if not ok.any():
            raise AllMembersFailed(f"no forward evaluation survived at iteration {k}")

        qbar = Q[ok].mean(axis=0)
        pbar = P[ok].mean(axis=0)
        E[k] = w * float(np.sum((target - qbar) ** 2))
        S[k] = float(np.mean([_weighted_norm(lengths0, P[j] - pbar) for j in range(cfg.ensemble_size) if ok[j]]))
        if p_true is not None:
            R[k] = _weighted_norm(lengths0, pbar - p_true) / _weighted_norm(lengths0, p_true)
        if on_iteration is not None:
            on_iteration(k, E[k], R[k], S[k], pbar)
        if k == cfg.max_iter:
            break

        updated = analysis_update(P[ok], Q[ok], target, w, cfg.xi)
        P[ok] = updated
        P[~ok] = updated.mean(axis=0)

    mean_p = P[ok].mean(axis=0)
    return EKIResult(
        momenta=P,
        mean_momentum=mean_p,
        iterations=np.arange(n_rows),
        E=E,
        R=R,
        S=S,
    )
