"""Operator frames, K-operator frames and vector frames.

Optimal bounds are the extremal eigenvalues of the flattened frame operator
``S = sum_i flat(T_i) flat(T_i)^H``.  They are optimal for the A-valued
inequality and for the norm form at once: a rank-one vector X = e_1 w^H has
||<Sx, x>|| = w^H S w and ||x|| = |w|, which pins both optima to the same
eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .adjointable import AdjointableOp, apply, douglas_factor
from .algebra import DEFAULT_TOL, RANK_TOL, hermitian_part, psd_pinv_sqrt, spectral_norm
from .errors import EmptyFamilyError, EmptyRatioError, NotAFrameError, ShapeMismatchError
from .module import ModuleVector, VectorSequence, random_unit_flats

FRAME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    ops: tuple

    def __init__(self, ops: Iterable[AdjointableOp]):
        ops = tuple(ops)
        if ops:
            shape = ops[0].shape
            for i, t in enumerate(ops):
                if t.shape != shape:
                    raise ShapeMismatchError(f"operator {i} has shape {t.shape}, expected {shape}")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def from_flats(cls, flats, k, n=None):
        return cls(AdjointableOp(f, k, n) for f in flats)

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, i):
        return self.ops[i]

    @property
    def k(self) -> int:
        return self._first().k

    @property
    def n(self) -> int:
        return self._first().n

    @property
    def shape(self):
        return self._first().shape

    def _first(self):
        if not self.ops:
            raise EmptyFamilyError("operator family is empty")
        return self.ops[0]

    @property
    def flats(self):
        """(J, d, d) stack of the flattened operators."""
        self._first()
        return np.stack([t.flat for t in self.ops])

    def _check(self, other):
        if len(self) != len(other):
            raise ShapeMismatchError(f"families of length {len(self)} and {len(other)}")
        if self.ops and self.shape != other.shape:
            raise ShapeMismatchError(f"families of shape {self.shape} and {other.shape}")

    def __add__(self, other):
        self._check(other)
        return OperatorFamily(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        self._check(other)
        return OperatorFamily(a - b for a, b in zip(self, other))

    def __neg__(self):
        return OperatorFamily(-t for t in self)

    def scaled(self, coeffs) -> OperatorFamily:
        """{c_i T_i} for a scalar or a per-index sequence of scalars."""
        if np.isscalar(coeffs):
            coeffs = [coeffs] * len(self)
        if len(coeffs) != len(self):
            raise ShapeMismatchError(f"{len(coeffs)} coefficients for a family of {len(self)}")
        return OperatorFamily(c * t for c, t in zip(coeffs, self))

    def __repr__(self):
        if not self.ops:
            return "OperatorFamily(empty)"
        return f"OperatorFamily(len={len(self)}, k={self.k}, n={self.n})"


def combine(families: Sequence[OperatorFamily], alphas) -> OperatorFamily:
    """The summed family {sum_n alpha_n T_{n,i}}_i."""
    if not families:
        raise EmptyFamilyError("no families to combine")
    if len(alphas) != len(families):
        raise ShapeMismatchError(f"{len(alphas)} scalars for {len(families)} families")
    for f in families[1:]:
        families[0]._check(f)
    flats = sum(complex(a) * f.flats for a, f in zip(alphas, families))
    return OperatorFamily.from_flats(flats, families[0].k, families[0].n)


# -- frame operator, analysis, synthesis -------------------------------------

def frame_matrix(family: OperatorFamily):
    """Flattened frame operator as a Hermitian numpy array."""
    m = family.flats
    s = np.einsum("iab,icb->ac", m, m.conj())
    return hermitian_part(s)


def frame_operator(family: OperatorFamily) -> AdjointableOp:
    return AdjointableOp(frame_matrix(family), family.k, family.n)


def analysis_apply(family: OperatorFamily, x: ModuleVector) -> VectorSequence:
    return VectorSequence([apply(t, x) for t in family])


def synthesis_apply(family: OperatorFamily, s: VectorSequence) -> ModuleVector:
    if len(s) != len(family):
        raise ShapeMismatchError(f"sequence of length {len(s)} for a family of {len(family)}")
    if not len(family):
        raise EmptyFamilyError("operator family is empty")
    out = ModuleVector.zeros(family.k, family.n)
    for t, xi in zip(family, s):
        out = out + apply(t.adjoint(), xi)
    return out


def analysis_matrix(family: OperatorFamily):
    """Flat analysis operator H -> H^J: the d x (J*d) matrix [M_1 | ... | M_J]."""
    return np.concatenate(list(family.flats), axis=1)


# -- bounds -------------------------------------------------------------------

@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    classification: str
    tight_constant: Optional[float] = None

    @property
    def is_frame(self) -> bool:
        return self.classification in ("frame", "tight", "parseval")

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "classification": self.classification,
            "tight_constant": self.tight_constant,
        }


@dataclass(frozen=True)
class KFrameBounds:
    lower: float
    upper: float
    k_frame: bool
    unconstrained: bool = False

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "k_frame": self.k_frame,
            "unconstrained": self.unconstrained,
        }


def classify(lower, upper, tol=FRAME_TOL) -> FrameBounds:
    if upper <= tol:
        return FrameBounds(lower, upper, "degenerate")
    if lower <= tol * max(upper, 1.0):
        return FrameBounds(lower, upper, "bessel-only")
    if abs(upper - lower) <= tol * upper:
        if abs(upper - 1.0) <= tol:
            return FrameBounds(lower, upper, "parseval", upper)
        return FrameBounds(lower, upper, "tight", upper)
    return FrameBounds(lower, upper, "frame")


def bounds_of_matrix(s, tol=FRAME_TOL) -> FrameBounds:
    w = np.linalg.eigvalsh(hermitian_part(s))
    return classify(max(float(w[0]), 0.0), max(float(w[-1]), 0.0), tol)


def optimal_bounds(family: OperatorFamily, tol: float = FRAME_TOL) -> FrameBounds:
    return bounds_of_matrix(frame_matrix(family), tol)


def k_lower_of_matrices(s, p, rank_tol=RANK_TOL):
    """sup{A >= 0 : S - A P is PSD}; ``inf`` when P = 0."""
    if spectral_norm(p) == 0.0:
        return np.inf
    if not douglas_factor(p, s, rank_tol).included:
        return 0.0
    isqrt, _ = psd_pinv_sqrt(s, rank_tol)
    top = float(np.linalg.eigvalsh(hermitian_part(isqrt @ p @ isqrt))[-1])
    return 1.0 / top if top > 0 else np.inf


def kk_star(k_op: AdjointableOp):
    """flat(K K*) = flat(K)^H flat(K)."""
    return hermitian_part(k_op.flat.conj().T @ k_op.flat)


def k_optimal_bounds(family: OperatorFamily, k_op: AdjointableOp, tol: float = FRAME_TOL) -> KFrameBounds:
    """Optimal constants of A<K*x, K*x> <= sum <T_i x, T_i x> <= B<x, x>.

    K = 0 leaves the lower inequality vacuous; that case is reported with
    ``unconstrained=True`` and the lower bound set to the upper one.
    """
    if family.shape != k_op.shape:
        raise ShapeMismatchError(f"family of shape {family.shape} with K of shape {k_op.shape}")
    s = frame_matrix(family)
    upper = max(float(np.linalg.eigvalsh(s)[-1]), 0.0)
    lower = k_lower_of_matrices(s, kk_star(k_op))
    if np.isinf(lower):
        return KFrameBounds(upper, upper, True, unconstrained=True)
    return KFrameBounds(lower, upper, bool(lower > tol * max(upper, 1.0)))


def vector_frame_bounds(xs: Sequence[ModuleVector], tol: float = FRAME_TOL) -> FrameBounds:
    """Bounds of sum_i <x, x_i><x_i, x> against <x, x>."""
    if not xs:
        raise EmptyFamilyError("vector family is empty")
    shape = xs[0].shape
    for i, x in enumerate(xs):
        if x.shape != shape:
            raise ShapeMismatchError(f"vector {i} has shape {x.shape}, expected {shape}")
    return bounds_of_matrix(vector_frame_matrix(xs), tol)


def vector_frame_matrix(xs: Sequence[ModuleVector]):
    return hermitian_part(sum(x.flat.conj().T @ x.flat for x in xs))


def inverse_frame_operator(family: OperatorFamily) -> AdjointableOp:
    """S_T^{-1}; only defined once the family is known to be a frame."""
    b = optimal_bounds(family)
    if not b.is_frame:
        raise NotAFrameError(f"family is {b.classification}; its frame operator is not invertible")
    return AdjointableOp(np.linalg.inv(frame_matrix(family)), family.k, family.n)


def reconstruct(family: OperatorFamily, x: ModuleVector) -> ModuleVector:
    """S^{-1} S x, which returns x for a frame."""
    return apply(inverse_frame_operator(family), apply(frame_operator(family), x))


# -- norm characterization probe ---------------------------------------------

@dataclass
class ProbeResult:
    min_ratio: float
    max_ratio: float
    witnesses: dict
    evaluated: int
    skipped: int

    def to_dict(self):
        return {
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "witnesses": {
                key: [[[v.real, v.imag] for v in row] for row in w.flat] for key, w in self.witnesses.items()
            },
        }


def rank_one(w, k):
    """Flat vector with w^H as its first row and zeros elsewhere."""
    x = np.zeros((k, len(w)), dtype=np.complex128)
    x[0] = np.conj(w)
    return x


def norm_char_probe(family: OperatorFamily, samples: int, seed: int,
                    k_op: Optional[AdjointableOp] = None, skip_tol: float = 1e-9) -> ProbeResult:
    """Extremes of ||<Sx, x>|| / ||x||^2 over random and eigenvector-derived x.

    In K-mode the minimum is taken against ||K*x||^2 (vectors with
    ||K*x|| <= skip_tol * ||x|| are skipped) and the maximum against
    ||x||^2, matching the two sides of the K-frame inequality.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    k, d = family.k, family.k * family.n
    s = frame_matrix(family)
    rng = np.random.default_rng(seed)
    xs = random_unit_flats(k, d, samples, rng)

    w, v = np.linalg.eigh(s)
    cands = [rank_one(v[:, 0], k), rank_one(v[:, -1], k)]
    mats = [s, np.eye(d)]
    if k_op is not None:
        p = kk_star(k_op)
        mats.append(p)
        isqrt, _ = psd_pinv_sqrt(s)
        _, vv = np.linalg.eigh(hermitian_part(isqrt @ p @ isqrt))
        gen = isqrt @ vv[:, -1]
        if spectral_norm(gen[:, None]) > 0:
            cands.append(rank_one(gen / np.linalg.norm(gen), k))
    xs = np.concatenate([xs, np.stack(cands)])

    norms = _kernels.gram_norms(xs, np.stack(mats))
    upper_ratio = norms[:, 0] / norms[:, 1]
    if k_op is None:
        lower_ratio = upper_ratio
        valid = np.ones(len(xs), dtype=bool)
    else:
        kstar = norms[:, 2]
        valid = np.sqrt(kstar) > skip_tol * np.sqrt(norms[:, 1])
        if not valid.any():
            raise EmptyRatioError("K*x vanishes on every probe vector")
        lower_ratio = np.where(valid, norms[:, 0] / np.where(valid, kstar, 1.0), np.inf)
    i_min = int(np.argmin(lower_ratio))
    i_max = int(np.argmax(upper_ratio))
    return ProbeResult(
        min_ratio=float(lower_ratio[i_min]),
        max_ratio=float(upper_ratio[i_max]),
        witnesses={"min": ModuleVector.from_flat(xs[i_min], k), "max": ModuleVector.from_flat(xs[i_max], k)},
        evaluated=int(valid.sum()),
        skipped=int((~valid).sum()),
    )
