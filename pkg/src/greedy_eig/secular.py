"""Reduction of the per-direction Rayleigh minimization to a secular equation.

The direction update minimizes a quotient of two inhomogeneous quadratics

    (S^T A S + 2 a^T S + alpha) / (S^T B S + 2 b^T S + beta),      B SPD.

A Cholesky congruence plus a diagonalization turns this into

    L(T) = (sum_i kappa_i t_i^2 + 2 c_i t_i + gamma) / (T^T T + delta),

whose minimum value rho is the smallest root of the scalar secular equation

    rho * delta = f(rho),    f(rho) = sum_i c_i^2 / (rho - kappa_i) + gamma,

located left of the smallest active pole.  The minimizer follows from
t_i = c_i / (rho - kappa_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dense_kernels import cholesky_spd, sym_eig_full
from .errors import DegenerateDenominator, PoleCollision

ACTIVE_RTOL = 1e-14
DEFAULT_TOL = 1e-12
_MAX_ROOT_ITER = 300


@dataclass(frozen=True)
class SecularProblem:
    kappa: np.ndarray  # ascending poles
    c: np.ndarray      # linear coefficients in the pole eigenbasis
    gamma: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.delta <= 0:
            raise DegenerateDenominator(f"delta must be positive, got {self.delta}")
        if np.any(np.diff(self.kappa) < 0):
            raise ValueError("kappa must be sorted ascending")

    def active_mask(self) -> np.ndarray:
        scale = np.linalg.norm(self.c)
        return np.abs(self.c) > ACTIVE_RTOL * scale

    def f(self, rho: float) -> float:
        mask = self.active_mask()
        return float(
            np.sum(self.c[mask] ** 2 / (rho - self.kappa[mask])) + self.gamma
        )

    def quotient(self, T) -> float:
        """L(T), the reduced quotient this problem minimizes."""
        T = np.asarray(T, dtype=float)
        num = float(self.kappa @ (T * T) + 2.0 * self.c @ T + self.gamma)
        return num / float(T @ T + self.delta)

    def m_of_rho(self, rho: float) -> float:
        """L(T(rho)) with t_i(rho) = c_i / (rho - kappa_i) on active poles."""
        mask = self.active_mask()
        t = np.zeros_like(self.c)
        t[mask] = self.c[mask] / (rho - self.kappa[mask])
        return self.quotient(t)


@dataclass(frozen=True)
class SecularReduction:
    problem: SecularProblem
    chol_L: np.ndarray      # Cholesky factor of the denominator quadratic
    shift_g: np.ndarray     # L^-1 b
    eigvecs: np.ndarray     # eigenbasis of the transformed numerator quadratic
    scale: float            # beta, the original denominator constant

    def to_original(self, T) -> np.ndarray:
        """Map reduced coordinates T back to the direction vector S."""
        y = self.eigvecs @ np.asarray(T, dtype=float) - self.shift_g
        return scipy.linalg.solve_triangular(self.chol_L.T, y, lower=False)


def reduce(A_eff, B_eff, a_lin, b_lin, alpha, beta: float = 1.0) -> SecularReduction:
    """Reduce the quadratic quotient to a SecularProblem.

    ``beta`` is the constant term of the denominator (1 for a normalized
    context).  The quotient is invariant under dividing numerator and
    denominator data by beta, which is how beta != 1 is handled.
    """
    if beta <= 0:
        raise DegenerateDenominator(f"denominator constant beta={beta} not positive")
    A_eff = np.asarray(A_eff, dtype=float) / beta
    a_lin = np.asarray(a_lin, dtype=float) / beta
    alpha = alpha / beta
    B = np.asarray(B_eff, dtype=float) / beta
    b = np.asarray(b_lin, dtype=float) / beta

    L = cholesky_spd(B)
    g = scipy.linalg.solve_triangular(L, b, lower=True)
    delta = 1.0 - float(g @ g)
    if delta <= 1e-14:
        raise DegenerateDenominator(
            f"reduced denominator constant {delta:.3e} <= 1e-14"
        )

    tmp = scipy.linalg.solve_triangular(L, A_eff, lower=True)
    Atil = scipy.linalg.solve_triangular(L, tmp.T, lower=True).T
    Atil = 0.5 * (Atil + Atil.T)
    atil = scipy.linalg.solve_triangular(L, a_lin, lower=True)

    dec = sym_eig_full(Atil)
    c = dec.vectors.T @ (atil - Atil @ g)
    gamma = float(g @ Atil @ g - 2.0 * atil @ g + alpha)
    problem = SecularProblem(dec.values, c, gamma, delta)
    return SecularReduction(problem, L, g, dec.vectors, beta)


def solve_secular(p: SecularProblem, tol: float = DEFAULT_TOL) -> float:
    """Smallest root of rho*delta = f(rho), left of the smallest active pole.

    Safeguarded Newton: the iterate is kept inside a sign-changing bracket
    and any Newton step leaving it is replaced by bisection.
    """
    mask = p.active_mask()
    if not np.any(mask):
        return p.gamma / p.delta

    kap = p.kappa[mask]
    cs = p.c[mask]
    k_min = float(np.min(kap))

    def g(rho):
        return rho * p.delta - float(np.sum(cs ** 2 / (rho - kap))) - p.gamma

    def gprime(rho):
        return p.delta + float(np.sum(cs ** 2 / (rho - kap) ** 2))

    # g -> +inf as rho -> k_min^- and g -> -inf as rho -> -inf; g is
    # strictly increasing on (-inf, k_min), so the bracket is clean.
    eps_gap = 1e-12 * (1.0 + float(np.max(np.abs(p.kappa))))
    hi = k_min - eps_gap
    shrink = 0
    while g(hi) <= 0.0 and shrink < 60:
        eps_gap *= 0.5
        hi = k_min - eps_gap
        shrink += 1
    lo = min(p.gamma / p.delta, k_min - 1.0)
    step = max(1.0, abs(k_min - lo))
    while g(lo) >= 0.0:
        lo -= step
        step *= 2.0
        if step > 1e200:
            raise PoleCollision("failed to bracket the secular root")

    x = 0.5 * (lo + hi)
    for _ in range(_MAX_ROOT_ITER):
        gx = g(x)
        if abs(gx) <= tol * max(1.0, abs(x) * p.delta):
            return x
        if gx > 0.0:
            hi = x
        else:
            lo = x
        x_new = x - gx / gprime(x)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x


def recover_minimizer(r: SecularReduction, rho_m: float) -> np.ndarray:
    """Direction vector S attaining the quotient value rho_m."""
    p = r.problem
    mask = p.active_mask()
    gaps = rho_m - p.kappa
    tol = 1e-14 * (1.0 + np.abs(p.kappa))
    if np.any(mask & (np.abs(gaps) < tol)):
        raise PoleCollision("secular root coincides with an active pole")
    t = np.zeros_like(p.c)
    t[mask] = p.c[mask] / gaps[mask]
    return r.to_original(t)
