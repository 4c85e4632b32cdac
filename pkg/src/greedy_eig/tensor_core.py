"""Kronecker-structured symmetric operators and low-rank tensor values.

The operator class represents a symmetric bilinear form a(u, v) whose matrix
is a sum of K Kronecker products of per-dimension symmetric factors,

    A = sum_k  D^(k,1) x D^(k,2) x ... x D^(k,d).

Iterates are kept in factored form: a ``RankOne`` is an outer product of d
vectors and a ``TensorSum`` is a linear combination of rank-one terms.  All
inner products are evaluated dimension by dimension through small Gram
matrices, so nothing of size prod(N_j) is ever formed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateDirection, DegenerateIterate, StructuralError

ZERO_NORM_TOL = 1e-14


def symmetrize_factor(mat) -> np.ndarray:
    """Validate and symmetrize a per-dimension factor matrix."""
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructuralError(f"factor must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise StructuralError("factor contains non-finite entries")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class KroneckerSumOperator:
    """Symmetric bilinear form given by a sum of Kronecker-product terms.

    ``terms[k][j]`` is the j-th dimension factor of the k-th term; all
    factors are symmetrized on construction.
    """

    terms: tuple

    def __init__(self, terms: Sequence[Sequence[np.ndarray]]):
        if len(terms) < 1:
            raise StructuralError("operator needs at least one Kronecker term")
        d = len(terms[0])
        if d < 2:
            raise StructuralError("operator needs at least two dimensions")
        clean = []
        sizes = None
        for term in terms:
            if len(term) != d:
                raise StructuralError("all terms must have the same number of factors")
            facs = tuple(symmetrize_factor(f) for f in term)
            term_sizes = tuple(f.shape[0] for f in facs)
            if sizes is None:
                sizes = term_sizes
            elif term_sizes != sizes:
                raise StructuralError(
                    f"term factor sizes {term_sizes} do not match {sizes}"
                )
            clean.append(facs)
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def d(self) -> int:
        return len(self.terms[0])

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def sizes(self) -> tuple:
        return tuple(f.shape[0] for f in self.terms[0])


@dataclass(frozen=True)
class MetricSet:
    """Per-dimension SPD mass matrices plus the coercivity shift nu.

    Defines <u, v> = u^T (M_1 x ... x M_d) v and the shifted product
    <u, v>_a = a(u, v) + nu * <u, v>.
    """

    masses: tuple
    nu: float = 0.0

    def __init__(self, masses: Sequence[np.ndarray], nu: float = 0.0):
        if nu < 0:
            raise StructuralError("shift nu must be non-negative")
        clean = []
        for m in masses:
            sm = symmetrize_factor(m)
            try:
                np.linalg.cholesky(sm)
            except np.linalg.LinAlgError:
                raise StructuralError("mass matrix is not positive definite") from None
            clean.append(sm)
        object.__setattr__(self, "masses", tuple(clean))
        object.__setattr__(self, "nu", float(nu))

    @property
    def sizes(self) -> tuple:
        return tuple(m.shape[0] for m in self.masses)

    def with_nu(self, nu: float) -> "MetricSet":
        return MetricSet(self.masses, nu)

    @classmethod
    def identity(cls, sizes: Sequence[int], nu: float = 0.0) -> "MetricSet":
        return cls([np.eye(n) for n in sizes], nu)


@dataclass(frozen=True)
class RankOne:
    """Outer product r^(1) x ... x r^(d); any zero factor gives the zero element."""

    factors: tuple

    def __init__(self, factors: Sequence[np.ndarray]):
        facs = tuple(np.asarray(f, dtype=float).ravel() for f in factors)
        if len(facs) < 2:
            raise StructuralError("rank-one element needs at least two factors")
        if not all(np.all(np.isfinite(f)) for f in facs):
            raise StructuralError("rank-one factor contains non-finite entries")
        object.__setattr__(self, "factors", facs)

    @property
    def sizes(self) -> tuple:
        return tuple(len(f) for f in self.factors)

    def is_zero(self, tol: float = 0.0) -> bool:
        return any(np.linalg.norm(f) <= tol for f in self.factors)

    def rebalanced(self) -> "RankOne":
        """Spread the overall magnitude evenly across factors."""
        norms = [np.linalg.norm(f) for f in self.factors]
        if any(n == 0.0 for n in norms):
            return self
        total = np.prod(norms) ** (1.0 / len(norms))
        return RankOne([total * (f / n) for f, n in zip(self.factors, norms)])


class TensorSum:
    """Linear combination sum_k c_k z_k of rank-one terms.

    Factors are stored column-stacked per dimension (shape ``(N_j, n_terms)``)
    so inner products reduce to per-dimension Gram matrices.  The empty sum
    represents zero.  Instances are immutable.
    """

    __slots__ = ("coeffs", "factors", "sizes")

    def __init__(self, sizes: Sequence[int], coeffs=None, factors=None):
        sizes = tuple(int(n) for n in sizes)
        if coeffs is None:
            coeffs = np.zeros(0)
            factors = tuple(np.zeros((n, 0)) for n in sizes)
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        factors = tuple(np.asarray(f, dtype=float) for f in factors)
        if len(factors) != len(sizes):
            raise StructuralError("factor count does not match dimension count")
        for n, f in zip(sizes, factors):
            if f.shape != (n, len(coeffs)):
                raise StructuralError(
                    f"factor block shape {f.shape} incompatible with "
                    f"size {n} and {len(coeffs)} terms"
                )
        self.coeffs = coeffs
        self.factors = factors
        self.sizes = sizes

    @classmethod
    def zero(cls, sizes: Sequence[int]) -> "TensorSum":
        return cls(sizes)

    @classmethod
    def from_rank_one(cls, z: RankOne, coeff: float = 1.0) -> "TensorSum":
        return cls(
            z.sizes,
            np.array([coeff]),
            tuple(f.reshape(-1, 1) for f in z.factors),
        )

    @classmethod
    def combine(cls, coeffs, terms: Sequence[RankOne]) -> "TensorSum":
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        if len(coeffs) != len(terms):
            raise StructuralError("coefficient count does not match term count")
        if not terms:
            raise StructuralError("combine needs at least one term")
        sizes = terms[0].sizes
        for z in terms:
            if z.sizes != sizes:
                raise StructuralError("rank-one shapes disagree")
        factors = tuple(
            np.column_stack([z.factors[j] for z in terms]) for j in range(len(sizes))
        )
        return cls(sizes, coeffs, factors)

    @property
    def num_terms(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return self.num_terms == 0

    def scaled(self, t: float) -> "TensorSum":
        return TensorSum(self.sizes, t * self.coeffs, self.factors)

    def plus(self, other: "TensorSum") -> "TensorSum":
        if other.sizes != self.sizes:
            raise StructuralError("cannot add tensors of different shapes")
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return TensorSum(
            self.sizes,
            np.concatenate([self.coeffs, other.coeffs]),
            tuple(
                np.hstack([a, b]) for a, b in zip(self.factors, other.factors)
            ),
        )

    def plus_rank_one(self, z: RankOne, coeff: float = 1.0) -> "TensorSum":
        return self.plus(TensorSum.from_rank_one(z, coeff))

    def terms_as_rank_ones(self):
        return [
            RankOne([self.factors[j][:, k] for j in range(len(self.sizes))])
            for k in range(self.num_terms)
        ]

    def to_dense(self) -> np.ndarray:
        """Assemble the full coefficient tensor, flattened C-order."""
        total = np.zeros(int(np.prod(self.sizes)))
        for k in range(self.num_terms):
            v = np.array([self.coeffs[k]])
            for j in range(len(self.sizes)):
                v = np.kron(v, self.factors[j][:, k])
            total += v
        return total


def _check_shapes(u: TensorSum, v: TensorSum, sizes) -> None:
    if u.sizes != tuple(sizes) or v.sizes != tuple(sizes):
        raise StructuralError(
            f"tensor shapes {u.sizes} / {v.sizes} do not match {tuple(sizes)}"
        )


def _pair_value(u: TensorSum, v: TensorSum, mats) -> float:
    """c_u^T (hadamard_j U_j^T mats_j V_j) c_v for one factor set."""
    had = None
    for uj, vj, mj in zip(u.factors, v.factors, mats):
        g = uj.T @ (mj @ vj)
        had = g if had is None else had * g
    return float(u.coeffs @ had @ v.coeffs)


def h_inner(u: TensorSum, v: TensorSum, m: MetricSet) -> float:
    """<u, v> under the product mass metric."""
    _check_shapes(u, v, m.sizes)
    if u.is_zero() or v.is_zero():
        return 0.0
    return _pair_value(u, v, m.masses)


def a_inner(op: KroneckerSumOperator, u: TensorSum, v: TensorSum) -> float:
    """a(u, v) for the Kronecker-sum operator."""
    _check_shapes(u, v, op.sizes)
    if u.is_zero() or v.is_zero():
        return 0.0
    return sum(_pair_value(u, v, term) for term in op.terms)


def shifted_inner(op: KroneckerSumOperator, m: MetricSet, u, v) -> float:
    """<u, v>_a = a(u, v) + nu <u, v>."""
    return a_inner(op, u, v) + m.nu * h_inner(u, v, m)


def h_norm(u: TensorSum, m: MetricSet) -> float:
    return float(np.sqrt(max(h_inner(u, u, m), 0.0)))


def a_norm(op: KroneckerSumOperator, m: MetricSet, u: TensorSum) -> float:
    return float(np.sqrt(max(shifted_inner(op, m, u, u), 0.0)))


def euclidean_norm(u: TensorSum) -> float:
    """Plain 2-norm of the flattened coefficient tensor, computed factored."""
    if u.is_zero():
        return 0.0
    had = None
    for uj in u.factors:
        g = uj.T @ uj
        had = g if had is None else had * g
    return float(np.sqrt(max(u.coeffs @ had @ u.coeffs, 0.0)))


def rayleigh(op: KroneckerSumOperator, m: MetricSet, u: TensorSum) -> float:
    """Rayleigh quotient a(u,u)/<u,u>; +inf for the zero element."""
    denom = h_inner(u, u, m)
    if denom == 0.0:
        return float("inf")
    return a_inner(op, u, u) / denom


def normalize(u: TensorSum, m: MetricSet) -> TensorSum:
    """Rescale u to unit H-norm; direction is preserved."""
    nrm = h_norm(u, m)
    if nrm < ZERO_NORM_TOL:
        raise DegenerateIterate(f"cannot normalize: H-norm {nrm:.3e}")
    return u.scaled(1.0 / nrm)


def apply_operator(op: KroneckerSumOperator, u: TensorSum) -> TensorSum:
    """A u in factored form; the result has K * num_terms rank-one terms."""
    if u.is_zero():
        return u
    out = TensorSum.zero(u.sizes)
    for term in op.terms:
        mapped = TensorSum(
            u.sizes,
            u.coeffs,
            tuple(dj @ fj for dj, fj in zip(term, u.factors)),
        )
        out = out.plus(mapped)
    return out


def apply_metric(m: MetricSet, u: TensorSum) -> TensorSum:
    """(M_1 x ... x M_d) u in factored form."""
    if u.is_zero():
        return u
    return TensorSum(
        u.sizes,
        u.coeffs,
        tuple(mj @ fj for mj, fj in zip(m.masses, u.factors)),
    )


def eig_residual(op: KroneckerSumOperator, m: MetricSet, u: TensorSum, lam: float) -> float:
    """Euclidean norm of A u - lam M u, evaluated without dense assembly."""
    r = apply_operator(op, u).plus(apply_metric(m, u).scaled(-lam))
    return euclidean_norm(r)


@dataclass(frozen=True)
class DirectionData:
    """Per-direction contraction of the bilinear forms around a rank-one hole.

    Writing z(s) for the frozen rank-one element with s in the open slot:
    a(z(s), z(t)) = s^T A_j t, <z(s), z(t)> = s^T Mj_eff t,
    a(context, z(s)) = b_j^T s, <context, z(s)> = m_j^T s,
    alpha = a(context, context), beta = <context, context>.
    """

    A_j: np.ndarray
    Mj_eff: np.ndarray
    b_j: np.ndarray
    m_j: np.ndarray
    alpha: float
    beta: float


class DirectionWorkspace:
    """Caches context contractions reused across ADM direction updates.

    The context (the accumulated greedy iterate) is fixed during an ADM
    solve, so a(context, context), <context, context> and the per-dimension
    images D^(k,j) U_j, M_j U_j are computed once.
    """

    def __init__(self, op: KroneckerSumOperator, m: MetricSet, context: TensorSum):
        _check_shapes(context, context, op.sizes)
        self.op = op
        self.m = m
        self.context = context
        self.alpha = a_inner(op, context, context)
        self.beta = h_inner(context, context, m)
        if context.is_zero():
            self._op_images = None
            self._mass_images = None
        else:
            self._op_images = [
                [term[j] @ context.factors[j] for j in range(op.d)]
                for term in op.terms
            ]
            self._mass_images = [
                m.masses[j] @ context.factors[j] for j in range(op.d)
            ]

    def reduce(self, frozen: Sequence, j: int) -> DirectionData:
        """Contract everything but direction ``j`` against the frozen factors."""
        op, m, ctx = self.op, self.m, self.context
        d = op.d
        if not (0 <= j < d):
            raise StructuralError(f"direction index {j} out of range for d={d}")
        for l in range(d):
            if l == j:
                continue
            f = np.asarray(frozen[l], dtype=float)
            if len(f) != op.sizes[l]:
                raise StructuralError("frozen factor length mismatch")
            if np.linalg.norm(f) < ZERO_NORM_TOL:
                raise DegenerateDirection(f"frozen factor in dimension {l} is zero")

        nj = op.sizes[j]
        A_j = np.zeros((nj, nj))
        for term in op.terms:
            w = 1.0
            for l in range(d):
                if l != j:
                    f = frozen[l]
                    w *= float(f @ term[l] @ f)
            A_j += w * term[j]
        w_m = 1.0
        for l in range(d):
            if l != j:
                f = frozen[l]
                w_m *= float(f @ m.masses[l] @ f)
        Mj_eff = w_m * m.masses[j]

        b_j = np.zeros(nj)
        m_j = np.zeros(nj)
        if not ctx.is_zero():
            for k in range(op.num_terms):
                weights = ctx.coeffs.copy()
                for l in range(d):
                    if l != j:
                        weights *= frozen[l] @ self._op_images[k][l]
                b_j += self._op_images[k][j] @ weights
            weights = ctx.coeffs.copy()
            for l in range(d):
                if l != j:
                    weights *= frozen[l] @ self._mass_images[l]
            m_j = self._mass_images[j] @ weights

        A_j = 0.5 * (A_j + A_j.T)
        Mj_eff = 0.5 * (Mj_eff + Mj_eff.T)
        return DirectionData(A_j, Mj_eff, b_j, m_j, self.alpha, self.beta)


def reduce_direction(
    op: KroneckerSumOperator,
    m: MetricSet,
    frozen: Sequence,
    j: int,
    context: TensorSum,
) -> DirectionData:
    """One-shot direction reduction (see :class:`DirectionWorkspace`)."""
    return DirectionWorkspace(op, m, context).reduce(frozen, j)
