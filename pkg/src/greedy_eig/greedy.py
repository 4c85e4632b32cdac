"""Outer greedy drivers for the rank-one eigenvalue algorithms.

Three correction rules are available (Rayleigh minimization, shifted residual
minimization, explicit correction equation), each in a pure flavor, where the
new iterate is the normalized sum of the previous iterate and the correction,
and an orthogonal flavor, where all coefficients over the collected basis
(u_0, z_1, ..., z_n) are re-optimized through a small generalized eigenproblem.
"""

from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adm import (
    AdmConfig,
    adm_explicit_step,
    adm_initial_guess,
    adm_rayleigh_step,
    adm_residual_step,
)
from .dense_kernels import gen_sym_eig_smallest
from .errors import (
    AdmFailure,
    DegenerateIterate,
    ExplicitStepFailure,
    GreedyEigError,
    IllConditionedGram,
    NuTooSmall,
)
from .tensor_core import (
    KroneckerSumOperator,
    MetricSet,
    RankOne,
    TensorSum,
    a_inner,
    a_norm,
    eig_residual,
    h_inner,
    h_norm,
    normalize,
    shifted_inner,
)

ITERATE_COLLAPSE_TOL = 1e-12


class Variant(enum.Enum):
    RAYLEIGH = "rayleigh"
    RESIDUAL = "residual"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class GreedyConfig:
    variant: Variant = Variant.RAYLEIGH
    orthogonal: bool = False
    nu: float = 0.0
    max_iter: int = 100
    tol_lambda: float = 1e-12
    tol_residual: float = 1e-9
    adm: AdmConfig = field(default_factory=AdmConfig)
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_lambda <= 0 or self.tol_residual <= 0:
            raise ValueError("tolerances must be positive")
        if self.nu < 0:
            raise ValueError("nu must be non-negative")


@dataclass(frozen=True)
class TraceRow:
    n: int
    lambda_n: float
    lambda_decrease: float
    z_norm_a: float
    euler_residual: float
    eig_residual_h: float
    alpha_n: float
    wall_time: float
    lambda_pure: float  # same-iteration pure-update value (= lambda_n when pure)


@dataclass
class GreedyState:
    n: int
    u: TensorSum
    lam: float
    basis: list          # RankOne elements: u_0, z_1, ..., z_n
    trace: list          # TraceRow per executed iteration
    gram_a: np.ndarray = None   # cached basis Gram of the operator form
    gram_b: np.ndarray = None   # cached basis Gram of the metric


@dataclass(frozen=True)
class GreedyResult:
    lam: float
    u: TensorSum
    trace: tuple
    reason: str
    iterations: int
    iterates: tuple = ()  # per-trace-row iterates when requested


def estimate_rank_one_minimum(op: KroneckerSumOperator, m: MetricSet,
                              adm_cfg: AdmConfig | None = None) -> float:
    """Cheap estimate of the smallest rank-one Rayleigh value."""
    out = adm_initial_guess(op, m, adm_cfg or AdmConfig())
    return out.objective


def warn_if_nu_risky(op: KroneckerSumOperator, m: MetricSet, nu: float) -> None:
    """Warn when the shifted form a + nu <.,.> may fail to be coercive."""
    lam0 = estimate_rank_one_minimum(op, m)
    if lam0 + nu <= 0:
        warnings.warn(
            f"shift nu={nu} may be too small: estimated smallest rank-one "
            f"Rayleigh value is {lam0:.3e}",
            stacklevel=2,
        )


def initialize(op: KroneckerSumOperator, m: MetricSet, cfg: GreedyConfig,
               rng=None) -> GreedyState:
    """Build the starting iterate: the best rank-one element, H-normalized."""
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    out = adm_initial_guess(op, m, cfg.adm, rng)
    u0 = TensorSum.from_rank_one(out.z)
    u0 = normalize(u0, m)
    lam0 = a_inner(op, u0, u0)
    res0 = eig_residual(op, m, u0, lam0)
    row = TraceRow(0, lam0, 0.0, 0.0, 0.0, res0, 1.0, 0.0, lam0)
    return GreedyState(0, u0, lam0, [out.z], [row])


def _compute_correction(op, m, state, cfg, rng) -> RankOne:
    if cfg.variant is Variant.RAYLEIGH:
        return adm_rayleigh_step(op, m, state.u, cfg.adm, rng).z
    if cfg.variant is Variant.RESIDUAL:
        return adm_residual_step(op, m, state.u, state.lam, cfg.adm, rng).z
    return adm_explicit_step(op, m, state.u, state.lam, cfg.adm, rng).z


def _euler_residual(op, m, variant, u_prev, u_new, z_ts, lam_prev, lam_new, nu):
    if variant is Variant.RAYLEIGH:
        return abs(a_inner(op, u_new, z_ts) - lam_new * h_inner(u_new, z_ts, m))
    if variant is Variant.RESIDUAL:
        u_plus = u_prev.plus(z_ts)
        return abs(
            shifted_inner(op, m, u_plus, z_ts)
            - (lam_prev + nu) * h_inner(u_prev, z_ts, m)
        )
    u_plus = u_prev.plus(z_ts)
    return abs(a_inner(op, u_plus, z_ts) - lam_prev * h_inner(u_plus, z_ts, m))


def step(state: GreedyState, op: KroneckerSumOperator, m: MetricSet,
         cfg: GreedyConfig, rng=None) -> GreedyState:
    """One pure greedy iteration: correction, update, normalize, record."""
    rng = np.random.default_rng(cfg.rng_seed + state.n + 1) if rng is None else rng
    t0 = time.perf_counter()
    z = _compute_correction(op, m, state, cfg, rng)
    z_ts = TensorSum.from_rank_one(z)
    candidate = state.u.plus(z_ts)
    nrm = h_norm(candidate, m)
    if nrm < ITERATE_COLLAPSE_TOL:
        raise DegenerateIterate(
            f"updated iterate has H-norm {nrm:.3e}; cannot normalize"
        )
    alpha = 1.0 / nrm
    u_new = candidate.scaled(alpha)
    lam_new = a_inner(op, u_new, u_new)
    euler = _euler_residual(op, m, cfg.variant, state.u, u_new, z_ts,
                            state.lam, lam_new, m.nu)
    res = eig_residual(op, m, u_new, lam_new)
    row = TraceRow(
        state.n + 1,
        lam_new,
        state.lam - lam_new,
        a_norm(op, m, z_ts),
        euler,
        res,
        alpha,
        time.perf_counter() - t0,
        lam_new,
    )
    return GreedyState(state.n + 1, u_new, lam_new, state.basis + [z],
                       state.trace + [row])


def _basis_grams(op, m, basis):
    terms = [TensorSum.from_rank_one(b) for b in basis]
    k = len(terms)
    A = np.zeros((k, k))
    B = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            A[i, j] = A[j, i] = a_inner(op, terms[i], terms[j])
            B[i, j] = B[j, i] = h_inner(terms[i], terms[j], m)
    return A, B


def _extend_grams(op, m, A, B, basis, new):
    """Grow the cached basis Grams by one row/column for ``new``."""
    k = len(basis)
    new_ts = TensorSum.from_rank_one(new)
    row_a = np.empty(k + 1)
    row_b = np.empty(k + 1)
    for i, b in enumerate(basis):
        b_ts = TensorSum.from_rank_one(b)
        row_a[i] = a_inner(op, b_ts, new_ts)
        row_b[i] = h_inner(b_ts, new_ts, m)
    row_a[k] = a_inner(op, new_ts, new_ts)
    row_b[k] = h_inner(new_ts, new_ts, m)
    A2 = np.zeros((k + 1, k + 1))
    B2 = np.zeros((k + 1, k + 1))
    A2[:k, :k] = A
    B2[:k, :k] = B
    A2[k, :] = A2[:, k] = row_a
    B2[k, :] = B2[:, k] = row_b
    return A2, B2


def _smallest_pivot_index(B) -> int:
    """Index at which an (unpivoted) Cholesky sweep first degenerates."""
    B = np.array(B, dtype=float)
    k = B.shape[0]
    L = np.zeros_like(B)
    scale = float(np.max(np.abs(np.diag(B)))) or 1.0
    worst, worst_val = k - 1, np.inf
    for i in range(k):
        s = B[i, i] - L[i, :i] @ L[i, :i]
        if s <= 1e-12 * scale:
            return i
        if s < worst_val:
            worst, worst_val = i, s
        L[i, i] = np.sqrt(s)
        for r in range(i + 1, k):
            L[r, i] = (B[r, i] - L[r, :i] @ L[i, :i]) / L[i, i]
    return worst


def orthogonal_update(state: GreedyState, op: KroneckerSumOperator,
                      m: MetricSet, cfg: GreedyConfig, rng=None) -> GreedyState:
    """One orthogonal iteration: correction, then coefficient re-optimization.

    The new iterate is the smallest generalized eigenvector of the Gram pair
    over (u_0, z_1, ..., z_n).  On a rank-deficient Gram the basis member at
    the failing Cholesky pivot is dropped and the solve retried once.
    """
    rng = np.random.default_rng(cfg.rng_seed + state.n + 1) if rng is None else rng
    t0 = time.perf_counter()
    z = _compute_correction(op, m, state, cfg, rng)
    z_ts = TensorSum.from_rank_one(z)

    # pure-update value for the dominance record
    candidate = state.u.plus(z_ts)
    nrm = h_norm(candidate, m)
    if nrm < ITERATE_COLLAPSE_TOL:
        raise DegenerateIterate(
            f"updated iterate has H-norm {nrm:.3e}; cannot normalize"
        )
    alpha = 1.0 / nrm
    u_pure = candidate.scaled(alpha)
    lam_pure = a_inner(op, u_pure, u_pure)

    if state.gram_a is None:
        gram_a, gram_b = _basis_grams(op, m, state.basis)
    else:
        gram_a, gram_b = state.gram_a, state.gram_b
    gram_a, gram_b = _extend_grams(op, m, gram_a, gram_b, state.basis, z)
    basis = state.basis + [z]
    active = list(range(len(basis)))
    A, B = gram_a, gram_b
    for attempt in range(2):
        # normalize basis members to unit metric norm for conditioning
        d = np.sqrt(np.maximum(np.diag(B), 1e-300))
        try:
            tau, coef = gen_sym_eig_smallest(A / np.outer(d, d),
                                             B / np.outer(d, d))
            coef = coef / d
            break
        except IllConditionedGram:
            if attempt == 1:
                raise
            drop = _smallest_pivot_index(B / np.outer(d, d))
            del active[drop]
            if not active:
                raise
            idx = np.ix_(active, active)
            A, B = gram_a[idx], gram_b[idx]
    u_new = TensorSum.combine(coef, [basis[i] for i in active])
    u_new = normalize(u_new, m)
    if h_inner(state.u, u_new, m) <= 0:
        u_new = u_new.scaled(-1.0)
    lam_new = a_inner(op, u_new, u_new)
    # the correction's stationarity identity involves the pure update
    euler = _euler_residual(op, m, cfg.variant, state.u, u_pure, z_ts,
                            state.lam, lam_pure, m.nu)
    res = eig_residual(op, m, u_new, lam_new)
    row = TraceRow(
        state.n + 1,
        lam_new,
        state.lam - lam_new,
        a_norm(op, m, z_ts),
        euler,
        res,
        alpha,
        time.perf_counter() - t0,
        lam_pure,
    )
    return GreedyState(state.n + 1, u_new, lam_new, basis, state.trace + [row],
                       gram_a, gram_b)


def run(op: KroneckerSumOperator, m: MetricSet, cfg: GreedyConfig,
        keep_iterates: bool = False) -> GreedyResult:
    """Drive a full greedy computation and report the termination reason.

    Stops when the eigenpair residual drops below tol_residual, when the
    eigenvalue decrease stays below tol_lambda for three consecutive
    iterations, at max_iter, or on a step failure.  With ``keep_iterates``
    the result also carries one normalized iterate per trace row.
    """
    m_eff = m if m.nu == cfg.nu else m.with_nu(cfg.nu)
    rng = np.random.default_rng(cfg.rng_seed)
    state = initialize(op, m_eff, cfg, rng)
    iterates = [state.u]
    if state.trace[0].eig_residual_h <= cfg.tol_residual:
        return GreedyResult(state.lam, state.u, tuple(state.trace),
                            "InitialGuessIsEigenvector", 0,
                            tuple(iterates) if keep_iterates else ())

    advance = orthogonal_update if cfg.orthogonal else step
    stall = 0
    reason = "max_iter"
    while state.n < cfg.max_iter:
        try:
            state = advance(state, op, m_eff, cfg, rng)
        except (AdmFailure, DegenerateIterate, ExplicitStepFailure,
                IllConditionedGram, NuTooSmall, GreedyEigError) as exc:
            reason = f"step_failure: {type(exc).__name__}: {exc}"
            break
        iterates.append(state.u)
        row = state.trace[-1]
        if row.eig_residual_h <= cfg.tol_residual:
            reason = "converged_residual"
            break
        if abs(row.lambda_decrease) < cfg.tol_lambda:
            stall += 1
            if stall >= 3:
                reason = "converged_lambda"
                break
        else:
            stall = 0
    return GreedyResult(state.lam, state.u, tuple(state.trace), reason, state.n,
                        tuple(iterates) if keep_iterates else ())
