"""l1-penalized log-determinant surrogate likelihood with cutting planes.

The log-partition function of a pairwise binary MRF is replaced by a
Gaussian-based upper bound: with R(eta) the moment-matrix embedding and
m = (1, 4/3, ..., 4/3),

    B(theta) = (p/2) log(e pi / 2) - (p+1)/2
               - (1/2) max_{nu, alpha >= 0} { nu'm - alpha'b
                       + logdet(-R(theta) - diag(nu) + sum_i alpha_i A_i) },

where (A_i, b_i) are accumulated cycle-inequality cuts.  Maximizing the
penalized surrogate likelihood <theta, eta_hat> - B(theta) - penalty is,
after dropping constants and defining Y := -R(theta) - diag(nu), the
joint concave problem

    max_{Y, alpha >= 0}  -tr(Y Mhat) + logdet(Y + K(alpha)) - alpha'b
                         - lambda * sum_{pair positions} |Y_uv|,

with Mhat = R(eta_hat) + diag(m) and K(alpha) = sum_i alpha_i A_i.  For
fixed alpha the Y block has the box-constrained dual

    max_{W in box}  logdet(Mhat + W) - tr(W K),

where the box zeroes row 0, column 0, and the diagonal of W and clips
pair entries to [-lambda, lambda]; the blocks are coupled through
Y = (Mhat + W)^{-1} - K.  This module alternates projected-gradient
ascent on W with projected-gradient ascent on alpha, wrapped in an outer
loop that separates violated cycle inequalities on the fitted means and
re-solves warm-started.

Cut orientation: cycle inequalities are stored in the ">=" form
tr(A R(eta)) >= b.  The multiplier formulas above require the opposite
orientation, so cuts enter every formula in this module through
(-A, -b).  With that convention the alpha gradient at the coupled point
equals the cut violation, multipliers activate exactly on violated cuts,
and adding a cut can only lower B(theta); all three behaviors are
exercised by the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve

from .model import (
    DomainError,
    IsingModel,
    MeanVector,
    iter_pairs,
    moment_matrix,
    param_matrix,
    suspension_weights,
)
from .separation import CycleInequality, separate, violation

ALPHA_CAP = 1e6

__all__ = [
    "SolverConfig",
    "SolverState",
    "FitResult",
    "m_vector",
    "auto_lambda",
    "fit",
    "inner_solve",
    "w_step",
    "alpha_step",
    "recover_theta",
    "recover_eta",
    "surrogate_logpartition",
    "surrogate_loglik",
]


@dataclass
class SolverConfig:
    """Knobs for the cutting-plane solver.

    Parameters
    ----------
    lam : float
        l1 penalty level lambda >= 0 (box half-width on dual pair entries).
    gamma0 : float
        Base step for the W ascent; step t uses gamma0 / sqrt(t) before
        backtracking.
    inner_tol : float
        Relative objective-change stopping threshold for the inner solve.
    max_inner_iters : int
        Cap on W-batch/alpha alternations per inner solve.
    max_outer_rounds : int
        Cap on cutting-plane rounds.
    min_violation, max_cuts : forwarded to separation.
    edge_tol : float
        |theta_uv| at or below this recovers as an exact zero.
    alpha_tol, alpha_max_iters, backtrack : alpha-ascent controls.
    w_batch : int
        Number of W gradient steps between alpha updates.  A speed knob
        only; semantics are unchanged as the batch grows.
    max_backtracks : int
        Step halvings allowed before a step is abandoned.
    accept : str
        W-step acceptance rule.  "pd" halves the step only until the
        trial keeps Mhat + W positive definite, the classical diminishing
        supergradient scheme; "monotone" additionally requires the dual
        objective not to decrease, which polishes endpoints to high
        accuracy but suppresses the near-optimum wander that exposes
        violated cycle inequalities on hard instances.
    probe_inner_iters : int or None
        When set, every cutting-plane round before the final one uses
        this (typically small) iteration cap, so separation probes the
        partially optimized trajectory; the concluding solve still gets
        the full max_inner_iters budget.  None keeps a uniform budget.
    """

    lam: float = 0.0
    gamma0: float = 0.5
    inner_tol: float = 1e-7
    max_inner_iters: int = 5000
    max_outer_rounds: int = 10
    min_violation: float = 1e-4
    max_cuts: int = 20
    edge_tol: float = 1e-4
    alpha_tol: float = 1e-6
    alpha_max_iters: int = 500
    backtrack: float = 0.5
    w_batch: int = 25
    max_backtracks: int = 30
    accept: str = "pd"
    probe_inner_iters: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        for name in ("gamma0", "inner_tol", "alpha_tol", "backtrack"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_inner_iters", "max_outer_rounds", "max_cuts",
                     "alpha_max_iters", "w_batch", "max_backtracks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.backtrack >= 1.0:
            raise ValueError("backtrack factor must be < 1")
        if self.accept not in ("pd", "monotone"):
            raise ValueError(f"accept must be 'pd' or 'monotone', got {self.accept!r}")
        if self.probe_inner_iters is not None and self.probe_inner_iters < 1:
            raise ValueError("probe_inner_iters must be >= 1 or None")


@dataclass
class SolverState:
    """Mutable state of one inner solve.

    W is the box dual matrix, Y the primal matrix -R(theta) - diag(nu)
    (nu is carried implicitly as -diag(Y)), alpha the cut multipliers.
    mhat caches R(eta_hat) + diag(m_vec).
    """

    p: int
    W: np.ndarray
    Y: np.ndarray
    alpha: np.ndarray
    cuts: list[CycleInequality]
    m_vec: np.ndarray
    mhat: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    w_iter: int = 0
    inner_iters: int = 0
    w_stalls: int = 0
    # Stacked "<="-oriented cut matrices, cached since cuts are fixed
    # within one inner solve.
    cut_tensor: np.ndarray | None = field(default=None, repr=False)
    cut_rhs: np.ndarray | None = field(default=None, repr=False)

    def leq_tensor(self) -> tuple[np.ndarray, np.ndarray]:
        if self.cut_tensor is None:
            self.cut_tensor, self.cut_rhs = _leq_tensor(self.cuts, self.p + 1)
        return self.cut_tensor, self.cut_rhs


@dataclass
class FitResult:
    """Outcome of a cutting-plane fit."""

    model: IsingModel
    fitted_means: MeanVector
    cuts: list[CycleInequality]
    cut_violations: list[float]
    rounds: int
    objective: float
    per_round_cuts: list[int]
    wall_time: float
    kkt: dict
    state: SolverState


def m_vector(p: int) -> np.ndarray:
    """The diagonal shift m = (1, 4/3, ..., 4/3) of length p+1."""
    m = np.full(p + 1, 4.0 / 3.0)
    m[0] = 1.0
    return m


def auto_lambda(p: int, n: int) -> float:
    """Sample-size penalty rule lambda = 2 sqrt(log p / n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 2.0 * math.sqrt(math.log(max(p, 2)) / n)


def _chol(mat: np.ndarray):
    """Cholesky factor of a symmetric matrix, or None if not PD."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None


def _logdet(chol_l: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol_l))))


def _inv_from_chol(chol_l: np.ndarray) -> np.ndarray:
    inv = cho_solve((chol_l, True), np.eye(chol_l.shape[0]), check_finite=False)
    return (inv + inv.T) / 2.0


def _leq_cuts(cuts) -> tuple[list[np.ndarray], np.ndarray]:
    """Cut data in the "<=" orientation used by all solver formulas."""
    mats = [-c.coeff for c in cuts]
    rhs = -np.array([c.rhs for c in cuts]) if cuts else np.zeros(0)
    return mats, rhs


def _leq_tensor(cuts, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (k, n, n) "<="-oriented cut matrices and their rhs."""
    mats, rhs = _leq_cuts(cuts)
    tensor = np.stack(mats) if mats else np.zeros((0, n, n))
    return tensor, rhs


def _assemble(mats: list[np.ndarray], alpha: np.ndarray, n: int) -> np.ndarray:
    K = np.zeros((n, n))
    for a, A in zip(alpha, mats):
        if a != 0.0:
            K += a * A
    return K


def _project_box(W: np.ndarray, lam: float) -> np.ndarray:
    """Projection onto the dual box: zero row/col 0 and diagonal, clip to +-lam."""
    Wp = np.clip(W, -lam, lam)
    Wp[0, :] = 0.0
    Wp[:, 0] = 0.0
    np.fill_diagonal(Wp, 0.0)
    return Wp


def _pair_l1(Y: np.ndarray) -> float:
    """sum over all off-diagonal pair positions (both triangles) of |Y_ij|."""
    block = np.abs(Y[1:, 1:])
    return float(block.sum() - np.trace(block))


def joint_objective(
    Y: np.ndarray,
    alpha: np.ndarray,
    cuts,
    mhat: np.ndarray,
    lam: float,
    tensor: np.ndarray | None = None,
    rhs: np.ndarray | None = None,
) -> float:
    """Joint objective value at (Y, alpha); -inf if Y + K is not PD.

    tensor/rhs may carry the precomputed stacked cut data; otherwise they
    are derived from ``cuts``.
    """
    if tensor is None:
        tensor, rhs = _leq_tensor(cuts, Y.shape[0])
    X = Y + np.tensordot(alpha, tensor, axes=1)
    L = _chol(X)
    if L is None:
        return -math.inf
    return (
        -float(np.sum(Y * mhat))
        + _logdet(L)
        - float(alpha @ rhs)
        - lam * _pair_l1(Y)
    )


def w_step(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """A batch of projected supergradient ascent steps on the W dual.

    Each step moves along (Mhat + W)^{-1} - K with step gamma0/sqrt(t)
    and projects onto the box.  Under cfg.accept == "pd" the step is
    halved only until Mhat + W stays positive definite; under "monotone"
    it is also halved until the dual objective logdet(Mhat + W) - tr(W K)
    does not decrease.  On exhaustion the last feasible W is kept.
    Returns the updated W (also stored in state).
    """
    tensor, _ = state.leq_tensor()
    K = np.tensordot(state.alpha, tensor, axes=1)
    W = state.W
    L = _chol(state.mhat + W)
    if L is None:
        raise DomainError("matrix R(eta_hat) + diag(m) + W lost positive definiteness")
    monotone = cfg.accept == "monotone"
    d_cur = _logdet(L) - float(np.sum(W * K)) if monotone else 0.0
    for _ in range(cfg.w_batch):
        state.w_iter += 1
        Z = _inv_from_chol(L)
        G = Z - K
        G = (G + G.T) / 2.0
        gamma = cfg.gamma0 / math.sqrt(state.w_iter)
        accepted = False
        for _ in range(cfg.max_backtracks):
            Wt = _project_box(W + gamma * G, cfg.lam)
            Lt = _chol(state.mhat + Wt)
            if Lt is not None:
                if not monotone:
                    W, L = Wt, Lt
                    accepted = True
                    break
                d_t = _logdet(Lt) - float(np.sum(Wt * K))
                if d_t >= d_cur - 1e-13 * (1.0 + abs(d_cur)):
                    W, L, d_cur = Wt, Lt, d_t
                    accepted = True
                    break
            gamma *= cfg.backtrack
        if not accepted:
            state.w_stalls += 1
    state.W = W
    return W


def alpha_step(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """Projected gradient ascent on the cut multipliers for fixed Y.

    Maximizes logdet(Y + K(alpha)) - alpha'b over alpha >= 0 with
    backtracking that preserves positive definiteness of Y + K; stops at
    projected-gradient residual <= alpha_tol or the iteration cap.
    Returns the updated alpha (also stored in state).

    A multiplier climbing past ALPHA_CAP means a pooled cut is violated
    beyond what the dual box can absorb, so the penalized surrogate
    likelihood has no finite maximizer; that cannot happen when eta_hat
    is an empirical mean vector (those satisfy every cycle inequality)
    and raises DomainError rather than returning a runaway state.
    """
    if not state.cuts:
        return state.alpha
    tensor, rhs = state.leq_tensor()
    alpha = state.alpha.copy()
    Y = state.Y
    X = Y + np.tensordot(alpha, tensor, axes=1)
    L = _chol(X)
    if L is None:
        raise DomainError("matrix Y + sum(alpha_i A_i) lost positive definiteness")
    obj = _logdet(L) - float(alpha @ rhs)
    step = 1.0
    for _ in range(cfg.alpha_max_iters):
        Z = _inv_from_chol(L)
        grad = np.einsum("ij,kij->k", Z, tensor) - rhs
        residual = np.maximum(alpha + grad, 0.0) - alpha
        if np.max(np.abs(residual)) <= cfg.alpha_tol:
            break
        accepted = False
        for _ in range(cfg.max_backtracks):
            alpha_t = np.maximum(alpha + step * grad, 0.0)
            Xt = Y + np.tensordot(alpha_t, tensor, axes=1)
            Lt = _chol(Xt)
            if Lt is not None:
                obj_t = _logdet(Lt) - float(alpha_t @ rhs)
                if obj_t >= obj - 1e-13 * (1.0 + abs(obj)):
                    alpha, L, obj = alpha_t, Lt, obj_t
                    step *= 1.3
                    accepted = True
                    break
            step *= cfg.backtrack
        if not accepted:
            break
        if float(np.max(alpha)) > ALPHA_CAP:
            raise DomainError(
                "cut multiplier diverged: a pooled cycle inequality is "
                "violated beyond the penalty box, so no finite optimum "
                "exists at this penalty level"
            )
    state.alpha = alpha
    return alpha


def _coupled_y(state: SolverState) -> np.ndarray:
    """Y from the coupling (Mhat + W)^{-1} - K(alpha)."""
    L = _chol(state.mhat + state.W)
    if L is None:
        raise DomainError("matrix R(eta_hat) + diag(m) + W lost positive definiteness")
    tensor, _ = state.leq_tensor()
    return _inv_from_chol(L) - np.tensordot(state.alpha, tensor, axes=1)


def inner_solve(
    eta_hat: MeanVector,
    cuts,
    cfg: SolverConfig,
    warm_state: SolverState | None = None,
) -> SolverState:
    """Solve the joint problem for a fixed cut pool.

    Alternates a W gradient batch, the coupling update
    Y <- (Mhat + W)^{-1} - K, and an alpha ascent, until the relative
    change of the joint objective drops below inner_tol or the iteration
    cap is hit.  A warm state (whose cut list must be a prefix of
    ``cuts``) seeds W and alpha; new multipliers start at zero.
    """
    cuts = list(cuts)
    p = eta_hat.p
    n = p + 1
    m = m_vector(p)
    mhat = moment_matrix(eta_hat) + np.diag(m)
    if _chol(mhat) is None:
        raise DomainError("matrix R(eta_hat) + diag(m) is not positive definite")

    if warm_state is not None:
        warm_sigs = [c.signature for c in warm_state.cuts]
        if warm_sigs != [c.signature for c in cuts[: len(warm_sigs)]]:
            raise ValueError("warm state cuts must be a prefix of the cut pool")
        W = warm_state.W.copy()
        alpha = np.concatenate(
            [warm_state.alpha, np.zeros(len(cuts) - len(warm_state.alpha))]
        )
    else:
        W = np.zeros((n, n))
        alpha = np.zeros(len(cuts))

    state = SolverState(
        p=p, W=W, Y=np.zeros((n, n)), alpha=alpha, cuts=cuts, m_vec=m, mhat=mhat
    )
    state.Y = _coupled_y(state)
    tensor, t_rhs = state.leq_tensor()
    obj = joint_objective(state.Y, state.alpha, cuts, mhat, cfg.lam, tensor, t_rhs)
    state.objective_trace.append(obj)

    for it in range(1, cfg.max_inner_iters + 1):
        w_step(state, cfg)
        state.Y = _coupled_y(state)
        if cuts:
            alpha_step(state, cfg)
        obj_new = joint_objective(
            state.Y, state.alpha, cuts, mhat, cfg.lam, tensor, t_rhs
        )
        state.objective_trace.append(obj_new)
        state.inner_iters = it
        if abs(obj_new - obj) <= cfg.inner_tol * max(1.0, abs(obj_new)):
            obj = obj_new
            break
        obj = obj_new

    # Re-couple so Y reflects the final multipliers exactly.
    state.Y = _coupled_y(state)
    return state


def recover_theta(state: SolverState, edge_tol: float = 1e-4) -> IsingModel:
    """Read theta off Y = -R(theta) - diag(nu).

    theta_v = -Y[0, v+1] and theta_uv = -Y[u+1, v+1]; couplings with
    magnitude <= edge_tol become exact zeros.
    """
    p = state.p
    node_params = -state.Y[0, 1:].copy()
    edge_params = {}
    for u, v in iter_pairs(p):
        w = -float(state.Y[u + 1, v + 1])
        if abs(w) > edge_tol:
            edge_params[(u, v)] = w
    return IsingModel(p=p, node_params=node_params, edge_params=edge_params)


def recover_eta(state: SolverState, eta_hat: MeanVector) -> MeanVector:
    """Fitted means: node means match eta_hat exactly, pairs shift by W."""
    pair_means = eta_hat.pair_means + state.W[1:, 1:]
    pair_means = (pair_means + pair_means.T) / 2.0
    np.fill_diagonal(pair_means, 0.0)
    return MeanVector(
        p=state.p, node_means=eta_hat.node_means.copy(), pair_means=pair_means
    )


def kkt_residuals(state: SolverState, eta_hat: MeanVector, cfg: SolverConfig) -> dict:
    """Optimality diagnostics at the current state.

    Returns box/positivity feasibility gaps, the coupling residual
    ||(Mhat+W)^{-1} - K - Y||_inf, the node-moment matching error, the
    worst slack lambda - |W_uv| over recovered nonzero couplings, and the
    largest |alpha_i * constraint residual| over cuts.
    """
    mats, rhs = _leq_cuts(state.cuts)
    n = state.p + 1
    box_gap = max(0.0, float(np.max(np.abs(state.W))) - cfg.lam) if n > 1 else 0.0
    frame = float(
        max(
            np.max(np.abs(state.W[0, :])),
            np.max(np.abs(np.diag(state.W))),
        )
    )
    alpha_min = float(np.min(state.alpha)) if state.alpha.size else 0.0
    coupling = float(np.max(np.abs(_coupled_y(state) - state.Y)))
    eta_star = recover_eta(state, eta_hat)
    node_gap = float(np.max(np.abs(eta_star.node_means - eta_hat.node_means)))
    binding = 0.0
    for u, v in iter_pairs(state.p):
        if abs(state.Y[u + 1, v + 1]) > cfg.edge_tol:
            binding = max(binding, cfg.lam - abs(state.W[u + 1, v + 1]))
    comp = 0.0
    if state.cuts:
        Z = state.Y + _assemble(mats, state.alpha, n)
        L = _chol(Z)
        Zi = _inv_from_chol(L) if L is not None else None
        if Zi is not None:
            for a, A, b in zip(state.alpha, mats, rhs):
                comp = max(comp, abs(a * (float(np.sum(A * Zi)) - b)))
    return {
        "box_gap": box_gap,
        "frame_gap": frame,
        "alpha_min": alpha_min,
        "coupling_residual": coupling,
        "node_moment_gap": node_gap,
        "active_edge_slack": binding,
        "complementarity": comp,
    }


def fit(
    eta_hat: MeanVector,
    cfg: SolverConfig,
    separate_cuts: bool = True,
) -> FitResult:
    """Cutting-plane estimation from empirical means.

    Repeats { inner solve; recover fitted means; separate on their
    suspension weights; extend the cut pool } until separation returns
    nothing new or the round cap is reached, warm-starting every round.
    A concluding full-budget solve runs when the rounds used the probe
    budget (cfg.probe_inner_iters) or when the round cap left freshly
    separated cuts that no solve has seen; it counts toward ``rounds``
    and uses monotone step acceptance so it terminates on the objective
    tolerance rather than wandering.  With ``separate_cuts=False`` this
    is the plain cut-free log-det method (one round, plus the same
    concluding polish when a probe budget is set).

    Any separated cut that the input means violate by more than the
    penalty box can absorb (lam times the pair-block l1 mass of the cut
    matrix) certifies that the penalized problem has no finite optimum,
    which raises DomainError; sample means never trigger this.
    """
    t0 = time.perf_counter()
    cuts: list[CycleInequality] = []
    cut_violations: list[float] = []
    per_round: list[int] = []
    state: SolverState | None = None
    rounds = 0
    round_cfg = cfg
    if cfg.probe_inner_iters is not None:
        round_cfg = replace(cfg, max_inner_iters=cfg.probe_inner_iters)
    R_hat = moment_matrix(eta_hat)
    pending = False
    for _ in range(cfg.max_outer_rounds):
        state = inner_solve(eta_hat, cuts, round_cfg, warm_state=state)
        rounds += 1
        pending = False
        if not separate_cuts:
            break
        eta_star = recover_eta(state, eta_hat)
        fresh = separate(
            suspension_weights(eta_star), cfg.min_violation, cfg.max_cuts
        )
        known = {c.signature for c in cuts}
        fresh = [c for c in fresh if c.signature not in known]
        per_round.append(len(fresh))
        if not fresh:
            break
        for c in fresh:
            viol_hat = violation(c, R_hat)
            capacity = cfg.lam * float(np.abs(c.coeff[1:, 1:]).sum())
            if viol_hat > capacity + 1e-9:
                raise DomainError(
                    "input means violate a cycle inequality by "
                    f"{viol_hat:.3g}, beyond the penalty box capacity "
                    f"{capacity:.3g}; the penalized problem is unbounded"
                )
        R_star = moment_matrix(eta_star)
        cut_violations.extend(violation(c, R_star) for c in fresh)
        cuts = cuts + fresh
        pending = True

    assert state is not None
    if pending or cfg.probe_inner_iters is not None:
        polish_cfg = replace(cfg, accept="monotone")
        state = inner_solve(eta_hat, cuts, polish_cfg, warm_state=state)
        rounds += 1
    eta_star = recover_eta(state, eta_hat)
    model = recover_theta(state, cfg.edge_tol)
    return FitResult(
        model=model,
        fitted_means=eta_star,
        cuts=cuts,
        cut_violations=cut_violations,
        rounds=rounds,
        objective=state.objective_trace[-1],
        per_round_cuts=per_round,
        wall_time=time.perf_counter() - t0,
        kkt=kkt_residuals(state, eta_hat, cfg),
        state=state,
    )


def _bound_inner_max(
    R: np.ndarray,
    cuts,
    grad_tol: float,
    max_iters: int,
) -> float:
    """Inner concave maximum of the log-partition bound.

    Maximizes h(nu, alpha) = nu'm - alpha'b + logdet(-R - diag(nu) + K(alpha))
    over free nu and alpha >= 0 by projected Newton ascent: multipliers
    pinned at zero with inward gradient are frozen, the Newton system is
    solved on the free block, and backtracking enforces both positive
    definiteness and monotone ascent.  The start nu0 = -(row sums of
    |R| + 1) is diagonally dominant, hence feasible.
    """
    n = R.shape[0]
    p = n - 1
    m = m_vector(p)
    mats, rhs = _leq_cuts(cuts)
    k = len(mats)
    tensor = np.stack(mats) if k else np.zeros((0, n, n))

    nu = -(np.sum(np.abs(R), axis=1) + 1.0)
    alpha = np.zeros(k)

    def evaluate(nu_v, alpha_v):
        X = -R - np.diag(nu_v)
        if k:
            X = X + np.tensordot(alpha_v, tensor, axes=1)
        L = _chol(X)
        if L is None:
            return None, None
        return float(nu_v @ m) - float(alpha_v @ rhs) + _logdet(L), L

    h_val, L = evaluate(nu, alpha)
    if h_val is None:
        raise DomainError("no positive definite point found for the bound")

    for _ in range(max_iters):
        Z = _inv_from_chol(L)
        g_nu = m - np.diag(Z)
        g_alpha = np.einsum("ij,kij->k", Z, tensor) - rhs if k else np.zeros(0)
        # Projected gradient: at alpha_j = 0 only an outward pull counts.
        proj_alpha = np.where(alpha > 0.0, g_alpha, np.maximum(g_alpha, 0.0))
        if max(np.max(np.abs(g_nu)), np.max(np.abs(proj_alpha), initial=0.0)) <= grad_tol:
            break
        free = alpha > 0.0
        free |= g_alpha > 0.0
        idx = np.flatnonzero(free)
        g = np.concatenate([g_nu, g_alpha[idx]])
        t_free = tensor[idx]
        # Hessian blocks of h: d2/dnu2 = -Z*Z, cross = (Z A Z)_ii,
        # d2/dalpha2 = -tr(Z A_j Z A_l).
        zaz = np.array([Z @ A @ Z for A in t_free])
        H = np.empty((n + idx.size, n + idx.size))
        H[:n, :n] = -(Z * Z)
        if idx.size:
            cross = zaz[:, np.arange(n), np.arange(n)].T
            H[:n, n:] = cross
            H[n:, :n] = cross.T
            H[n:, n:] = -np.einsum("jab,lab->jl", zaz, t_free)
        try:
            d = np.linalg.solve(H - 1e-12 * np.eye(H.shape[0]), -g)
        except np.linalg.LinAlgError:
            d = g.copy()
        if float(g @ d) <= 0.0:
            d = g.copy()
        step = 1.0
        accepted = False
        for _ in range(60):
            nu_t = nu + step * d[:n]
            alpha_t = alpha.copy()
            if idx.size:
                alpha_t[idx] = np.maximum(alpha[idx] + step * d[n:], 0.0)
            gain = float(g[:n] @ (nu_t - nu))
            if idx.size:
                gain += float(g[n:] @ (alpha_t[idx] - alpha[idx]))
            h_t, L_t = evaluate(nu_t, alpha_t)
            if h_t is not None and gain > 0.0 and h_t >= h_val + 1e-4 * gain:
                nu, alpha, h_val, L = nu_t, alpha_t, h_t, L_t
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return h_val


def surrogate_logpartition(
    model: IsingModel,
    cuts=(),
    cfg: SolverConfig | None = None,
    grad_tol: float = 1e-9,
    max_iters: int = 20000,
) -> float:
    """Upper bound B(theta) on the exact log-partition function.

    Evaluates the log-determinant relaxation, tightened by any cycle
    inequalities supplied; with no cuts this is the plain Gaussian-based
    bound.  Deterministic: repeated calls with nested cut prefixes give a
    non-increasing sequence of values.
    """
    del cfg  # tolerances are explicit; kept for call-site symmetry
    R = param_matrix(model)
    h_star = _bound_inner_max(R, list(cuts), grad_tol, max_iters)
    p = model.p
    return (p / 2.0) * math.log(math.e * math.pi / 2.0) - (p + 1) / 2.0 - h_star / 2.0


def surrogate_loglik(
    model: IsingModel,
    eta_test: MeanVector,
    cuts=(),
    cfg: SolverConfig | None = None,
) -> float:
    """Surrogate average log-likelihood <theta, eta_test> - B(theta)."""
    if eta_test.p != model.p:
        raise ValueError(f"model has p={model.p}, means have p={eta_test.p}")
    inner = float(np.dot(model.node_params, eta_test.node_means))
    for (u, v), w in model.edge_params.items():
        inner += w * eta_test.pair(u, v)
    return inner - surrogate_logpartition(model, cuts, cfg)


def write_fit_result(
    path, result: FitResult, method: str, cfg: SolverConfig, seed: int | None = None
) -> None:
    """Write a fit file: the estimated model plus fitted means, cut
    descriptions, penalty, round/objective diagnostics, and a config echo."""
    import json

    from .model import model_payload

    eta = result.fitted_means
    payload = {
        "method": method,
        "seed": seed,
        "lambda": cfg.lam,
        "rounds": result.rounds,
        "objective": result.objective,
        "per_round_cuts": result.per_round_cuts,
        "objective_trace": {
            "first": result.state.objective_trace[0],
            "last": result.state.objective_trace[-1],
            "evaluations": len(result.state.objective_trace),
        },
        "wall_time": result.wall_time,
        "kkt": result.kkt,
        "model": model_payload(result.model),
        "eta_star": {
            "nodes": [float(t) for t in eta.node_means],
            "pairs": [[u, v, float(eta.pair(u, v))] for u, v in iter_pairs(eta.p)],
        },
        "cuts": [
            {
                "cycle": list(c.cycle),
                "odd_set": [list(e) for e in c.odd_set],
                "rhs": c.rhs,
                "violation_at_add": viol,
            }
            for c, viol in zip(
                result.cuts,
                result.cut_violations + [math.nan] * max(
                    0, len(result.cuts) - len(result.cut_violations)
                ),
            )
        ],
        "config": asdict(cfg),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_fit_file(path) -> dict:
    """Read a fit file back; the model is reconstructed and validated."""
    import json

    from .model import model_from_payload
    from .separation import cycle_to_matrix

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    model = model_from_payload(payload["model"], context=f"fit file {path}")
    cuts = [
        cycle_to_matrix(entry["cycle"], [tuple(e) for e in entry["odd_set"]], model.p)
        for entry in payload.get("cuts", [])
    ]
    payload["model"] = model
    payload["cut_objects"] = cuts
    return payload
