"""Adjointable operators on A^n through the flattening X -> X @ M.

A vector x is flattened to the k x nk matrix X and an operator T to the
nk x nk matrix M with T(x) = X M.  Under this convention

    flat(T*)     = flat(T)^H
    flat(T o S)  = flat(S) @ flat(T)
    <Tx, Tx>     = X M M^H X^H

so A-valued inequalities between operators reduce to ordinary PSD
inequalities between nk x nk matrices.  Block (i, j) of M occupies rows
[i*k, (i+1)*k) and columns [j*k, (j+1)*k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Number
from typing import Optional

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    RANK_TOL,
    hermitian_deviation,
    psd_check,
    psd_pinv_sqrt,
    spectral_norm,
)
from .errors import MalformedElementError, NotInjectiveError, PreconditionError, ShapeMismatchError
from .module import ModuleVector, VectorSequence

FACTOR_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AdjointableOp:
    flat: np.ndarray
    k: int
    n: int

    def __init__(self, flat, k, n=None):
        arr = np.array(flat, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise MalformedElementError(f"operator matrix must be square, got {arr.shape}")
        if n is None:
            if arr.shape[0] % k:
                raise MalformedElementError(f"operator size {arr.shape[0]} is not a multiple of k={k}")
            n = arr.shape[0] // k
        if arr.shape[0] != n * k:
            raise MalformedElementError(f"operator must be {n * k} x {n * k} for k={k}, n={n}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MalformedElementError("operator entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "flat", arr)
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "n", int(n))

    @classmethod
    def identity(cls, k, n):
        return cls(np.eye(n * k), k, n)

    @classmethod
    def zero(cls, k, n):
        return cls(np.zeros((n * k, n * k)), k, n)

    @classmethod
    def from_blocks(cls, blocks):
        """Build from an n x n grid of k x k blocks (block (i, j) as in the flattening)."""
        return cls(np.block([[np.asarray(b) for b in row] for row in blocks]), np.asarray(blocks[0][0]).shape[0])

    @property
    def shape(self):
        return (self.k, self.n)

    @property
    def dim(self) -> int:
        return self.k * self.n

    def adjoint(self) -> AdjointableOp:
        return AdjointableOp(self.flat.conj().T, self.k, self.n)

    def _check(self, other):
        if other.shape != self.shape:
            raise ShapeMismatchError(f"operators of shape {self.shape} and {other.shape}")

    def __add__(self, other):
        self._check(other)
        return AdjointableOp(self.flat + other.flat, self.k, self.n)

    def __sub__(self, other):
        self._check(other)
        return AdjointableOp(self.flat - other.flat, self.k, self.n)

    def __neg__(self):
        return AdjointableOp(-self.flat, self.k, self.n)

    def __mul__(self, c):
        if isinstance(c, Number):
            return AdjointableOp(self.flat * c, self.k, self.n)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        return compose(self, other)

    def __call__(self, x):
        return apply(self, x)

    def __repr__(self):
        return f"AdjointableOp(k={self.k}, n={self.n})"


def compose(t: AdjointableOp, s: AdjointableOp) -> AdjointableOp:
    """The operator t o s (apply s first)."""
    t._check(s)
    return AdjointableOp(s.flat @ t.flat, t.k, t.n)


def apply(t: AdjointableOp, x: ModuleVector) -> ModuleVector:
    if x.shape != t.shape:
        raise ShapeMismatchError(f"operator of shape {t.shape} applied to vector of shape {x.shape}")
    return ModuleVector.from_flat(x.flat @ t.flat, t.k)


def op_norm(t: AdjointableOp) -> float:
    return spectral_norm(t.flat)


def _pinv(mat, rank_tol=RANK_TOL):
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(mat.shape[::-1], dtype=np.complex128)
    keep = s > rank_tol * s[0]
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def pseudo_inverse(t: AdjointableOp, rank_tol: float = RANK_TOL) -> AdjointableOp:
    if rank_tol < 0:
        raise ValueError("rank_tol must be non-negative")
    return AdjointableOp(_pinv(t.flat, rank_tol), t.k, t.n)


# -- Douglas factorization --------------------------------------------------

@dataclass
class DouglasResult:
    included: bool
    lam: Optional[float]
    factor: Optional[np.ndarray]
    residual: float
    statements: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return len(set(self.statements.values())) <= 1


def douglas_factor(t_flat, s_flat, rank_tol=RANK_TOL, tol=FACTOR_TOL) -> DouglasResult:
    """Douglas analysis on flat matrices of T: H1 -> H2 and S: H3 -> H2.

    Looks for Q: H1 -> H3 with T = S o Q, i.e. flat(T) = flat(Q) @ flat(S).
    The operator range of T is the row space of flat(T).  Returns the factor
    as a flat matrix so that callers can wrap it for their own spaces.
    """
    t_flat = np.asarray(t_flat, dtype=np.complex128)
    s_flat = np.asarray(s_flat, dtype=np.complex128)
    if t_flat.shape[1] != s_flat.shape[1]:
        raise ShapeMismatchError(f"T and S must share a codomain: {t_flat.shape} vs {s_flat.shape}")
    scale = max(spectral_norm(t_flat), 1.0)

    # (i) range inclusion via an orthonormal basis of the row space of S
    _, sv, vh = np.linalg.svd(s_flat)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    basis = vh[:rank].conj().T
    residual = spectral_norm(t_flat - (t_flat @ basis) @ basis.conj().T)
    range_ok = residual <= tol * scale

    # (iv) the minimal factor Q = S^+ T
    q = t_flat @ _pinv(s_flat, rank_tol)
    factor_ok = spectral_norm(q @ s_flat - t_flat) <= tol * scale

    # (ii) best constant in lam T T* <= S S*
    tt = t_flat.conj().T @ t_flat
    ss = s_flat.conj().T @ s_flat
    isqrt, _ = psd_pinv_sqrt(ss, rank_tol)
    top = float(np.linalg.eigvalsh((isqrt @ tt @ isqrt + (isqrt @ tt @ isqrt).conj().T) / 2)[-1])
    if spectral_norm(tt) == 0.0:
        lam = math.inf
        major_ok = True
    elif top <= 0.0:
        lam = None
        major_ok = False
    else:
        lam = 1.0 / top
        major_ok = psd_check(ss - lam * tt, DEFAULT_TOL)

    included = range_ok
    return DouglasResult(
        included=included,
        lam=lam if included else None,
        factor=q if included else None,
        residual=residual,
        statements={"i": range_ok, "ii": major_ok, "iv": factor_ok},
    )


def douglas_check(t: AdjointableOp, s: AdjointableOp, rank_tol: float = RANK_TOL):
    """Range inclusion range(T) <= range(S), with constant and factor.

    Returns a DouglasResult whose ``factor`` is an AdjointableOp Q with
    S o Q = T when included.
    """
    t._check(s)
    res = douglas_factor(t.flat, s.flat, rank_tol)
    if res.factor is not None:
        res.factor = AdjointableOp(res.factor, t.k, t.n)
    return res


# -- Lemma-style bounds -------------------------------------------------------

@dataclass(frozen=True)
class SurjectivityBounds:
    surjective: bool
    m: float
    M: float


def surjectivity_bounds(t: AdjointableOp, tol: float = DEFAULT_TOL) -> SurjectivityBounds:
    """m||x|| <= ||Tx|| <= M||x|| for self-adjoint T."""
    if hermitian_deviation(t.flat) > tol * max(op_norm(t), 1.0):
        raise PreconditionError("surjectivity bounds need a self-adjoint operator")
    s = np.linalg.svd(t.flat, compute_uv=False)
    surjective = bool(s[0] > 0 and s[-1] > 1e-9 * s[0])
    return SurjectivityBounds(surjective, float(s[-1]), float(s[0]))


@dataclass(frozen=True)
class TTStarBounds:
    lower: float
    upper: float
    sandwich_ok: bool


def ttstar_bounds(t: AdjointableOp, tol: float = 1e-9) -> TTStarBounds:
    """||(T*T)^{-1}||^{-1} <= T*T <= ||T||^2 for injective T."""
    u, s, _ = np.linalg.svd(t.flat)
    if s[0] == 0 or s[-1] <= tol * s[0]:
        # X = u^H kills the operator: X M = s_min v^H
        witness = np.zeros((t.k, t.dim), dtype=np.complex128)
        witness[0] = u[:, -1].conj()
        raise NotInjectiveError("operator is not injective", ModuleVector.from_flat(witness, t.k))
    tstar_t = t.flat @ t.flat.conj().T
    lower = 1.0 / spectral_norm(np.linalg.inv(tstar_t))
    upper = op_norm(t) ** 2
    eye = np.eye(t.dim)
    ok = psd_check(tstar_t - lower * eye) and psd_check(upper * eye - tstar_t)
    return TTStarBounds(lower, upper, ok)


def is_co_isometry(k_op: AdjointableOp, tol: float = 1e-10) -> bool:
    """K K* = I, i.e. flat(K)^H flat(K) = I."""
    return spectral_norm(k_op.flat.conj().T @ k_op.flat - np.eye(k_op.dim)) <= tol


def is_positive(t: AdjointableOp, tol: float = DEFAULT_TOL) -> bool:
    return psd_check(t.flat, tol)


# -- operators on l^2(H) ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockOperator:
    """A-linear map on H^J, flattened as a (J*nk) x (J*nk) matrix acting on the right."""

    flat: np.ndarray
    k: int
    n: int

    def __init__(self, flat, k, n):
        arr = np.array(flat, dtype=np.complex128)
        d = k * n
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % d or arr.shape[0] == 0:
            raise MalformedElementError(f"block operator must be (J*{d}) square, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "flat", arr)
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "n", int(n))

    @property
    def blocks(self) -> int:
        return self.flat.shape[0] // (self.k * self.n)

    def norm(self) -> float:
        return spectral_norm(self.flat)

    def __call__(self, s: VectorSequence) -> VectorSequence:
        if len(s) != self.blocks:
            raise ShapeMismatchError(f"sequence of length {len(s)} for operator on {self.blocks} blocks")
        return VectorSequence.from_flat(s.flat @ self.flat, self.k, self.n)
