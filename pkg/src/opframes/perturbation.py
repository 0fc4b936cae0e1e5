"""Certifiers for the perturbation and finite-sum stability theorems.

Every certifier checks its theorem's hypothesis, evaluates the bound
interval the theorem guarantees, and compares it with the optimal bounds of
the perturbed family computed directly.

Hypotheses of the form ``||<L x, x>|| <= sum_j c_j ||<M_j x, x>||`` for all
x are decided exactly as the PSD inequality ``L <= sum_j c_j M_j`` between
flattened matrices.  Rank-one vectors turn the norm form into the quadratic
form ``w^H L w <= sum_j c_j w^H M_j w``, and PSD order is preserved by
``X . X^H`` and monotone under the norm, so both directions hold.  When
square roots of the norms are mixed no such reduction exists and the
hypothesis is sampled instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .adjointable import AdjointableOp, BlockOperator, douglas_factor, is_co_isometry
from .algebra import hermitian_part, pencil_max, psd_check, spectral_norm
from .errors import (
    EmptyFamilyError,
    HypothesisGateError,
    NotAFrameError,
    PreconditionError,
    RangeViolationError,
    ShapeMismatchError,
)
from .frames import (
    FrameBounds,
    KFrameBounds,
    OperatorFamily,
    analysis_matrix,
    combine,
    frame_matrix,
    k_optimal_bounds,
    kk_star,
    optimal_bounds,
    rank_one,
)
from .module import random_unit_flats

PSD_TOL = 1e-9
VALIDITY_SLACK = 1e-9
INTERTWINE_TOL = 1e-8
SAMPLED_SLACK = 1e-10


# -- hypothesis forms ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormInequality:
    """||<L x, x>|| <= sum_j c_j ||<M_j x, x>|| for every x.

    With ``sqrt=True`` every norm is replaced by its square root, which is
    the shape of the confined-sequence hypothesis.
    """

    lhs: np.ndarray
    terms: tuple
    sqrt: bool = False
    label: str = ""

    def rhs_matrix(self):
        return sum((c * m for c, m in self.terms), np.zeros_like(self.lhs))

    def exact(self, tol=PSD_TOL):
        if self.sqrt:
            raise ValueError("square-root forms have no exact PSD reduction")
        gap = hermitian_part(self.rhs_matrix() - self.lhs)
        return psd_check(gap, tol)

    def slack(self, norms):
        """Right side minus left side for rows of (lhs, M_1, ..., M_r) norms."""
        coeffs = np.array([c for c, _ in self.terms], dtype=float)
        if self.sqrt:
            norms = np.sqrt(np.maximum(norms, 0.0))
        return norms[:, 1:] @ coeffs - norms[:, 0]

    def witnesses(self, k):
        """Rank-one candidates from the eigenvectors of every matrix involved."""
        mats = [self.lhs] + [m for _, m in self.terms]
        if not self.sqrt:
            mats.append(self.rhs_matrix() - self.lhs)
        out = []
        for m in mats:
            _, v = np.linalg.eigh(hermitian_part(m))
            out.extend(rank_one(v[:, j], k) for j in range(v.shape[1]))
        return out


@dataclass
class SampledCheck:
    ok: bool
    worst_slack: float
    worst_form: str
    witness: Optional[np.ndarray]
    evaluated: int


def sample_inequalities(forms: Sequence[NormInequality], k: int, samples: int, seed: int,
                        tol: float = SAMPLED_SLACK, witnesses: bool = True) -> SampledCheck:
    """Evaluate each form at seeded unit vectors plus rank-one eigenvector witnesses.

    Slack is measured at unit module norm, so it is an absolute margin.
    """
    if samples < 0:
        raise ValueError("samples must be >= 0")
    rng = np.random.default_rng(seed)
    worst = (math.inf, "", None)
    evaluated = 0
    for form in forms:
        d = form.lhs.shape[0]
        xs = random_unit_flats(k, d, samples, rng) if samples else np.empty((0, k, d), dtype=np.complex128)
        if witnesses:
            xs = np.concatenate([xs, np.stack(form.witnesses(k))])
        if not len(xs):
            continue
        mats = np.stack([form.lhs] + [m for _, m in form.terms] + [np.eye(d)])
        norms = _kernels.gram_norms(xs, mats)
        # normalise every vector to unit module norm
        unit = norms[:, -1]
        nz = unit > 0
        scaled = norms[nz, :-1] / unit[nz, None]
        s = form.slack(scaled)
        evaluated += len(s)
        i = int(np.argmin(s))
        if s[i] < worst[0]:
            worst = (float(s[i]), form.label, xs[nz][i])
    return SampledCheck(worst[0] >= -tol, worst[0], worst[1], worst[2], evaluated)


# -- certificate -----------------------------------------------------------

@dataclass
class Certificate:
    theorem: str
    hypothesis_mode: str
    hypothesis_ok: bool
    certified_lower: float
    certified_upper: float
    actual: Union[FrameBounds, KFrameBounds]
    valid: bool
    details: dict = field(default_factory=dict)
    forms: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "hypothesis_mode": self.hypothesis_mode,
            "hypothesis_ok": self.hypothesis_ok,
            "certified_lower": self.certified_lower,
            "certified_upper": self.certified_upper,
            "actual": self.actual.to_dict(),
            "valid": self.valid,
            "details": self.details,
        }


def _finish(theorem, mode, ok, lower, upper, actual, details, forms=()):
    lower_ok = getattr(actual, "unconstrained", False) or lower <= actual.lower + VALIDITY_SLACK
    upper_ok = actual.upper <= upper + VALIDITY_SLACK
    return Certificate(
        theorem=theorem,
        hypothesis_mode=mode,
        hypothesis_ok=bool(ok),
        certified_lower=float(lower),
        certified_upper=float(upper),
        actual=actual,
        valid=bool(ok and lower_ok and upper_ok),
        details=details,
        forms=tuple(forms),
    )


def _bounds(family, k_op):
    return optimal_bounds(family) if k_op is None else k_optimal_bounds(family, k_op)


def _frame_constants(family, k_op, name="T"):
    """(A, B) of a frame, or of a K-frame with A against ||K*x||^2."""
    b = _bounds(family, k_op)
    ok = b.is_frame if k_op is None else b.k_frame
    if not ok:
        kind = "frame" if k_op is None else "K-frame"
        raise NotAFrameError(f"family {name} is not a {kind} (lower bound {b.lower:.3e})")
    return b.lower, b.upper


def _check_k(k_op, family):
    if k_op is not None and k_op.shape != family.shape:
        raise ShapeMismatchError(f"K of shape {k_op.shape} for families of shape {family.shape}")


def _require_co_isometry(k_op):
    if k_op is not None and not is_co_isometry(k_op):
        raise PreconditionError("the converse direction needs a co-isometric K")


# -- Bessel perturbation ---------------------------------------------------

def certify_bessel_perturbation(t: OperatorFamily, r: OperatorFamily, sign: str = "+") -> Certificate:
    """{T_i +/- R_i} for a frame T and a Bessel family R with bound M < A."""
    t._check(r)
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    a, b = _frame_constants(t, None)
    m = optimal_bounds(r).upper
    perturbed = t + r if sign == "+" else t - r
    lower = (math.sqrt(a) - math.sqrt(m)) ** 2
    upper = (math.sqrt(b) + math.sqrt(m)) ** 2
    details = {"A": a, "B": b, "M": m, "margin": a - m}
    return _finish("bessel-perturb", "exact-psd", m < a, lower, upper, optimal_bounds(perturbed), details)


# -- minimum-constant equivalence ------------------------------------------

def _min_constant_forms(t, r, m):
    diff = frame_matrix(t - r)
    return (
        NormInequality(diff, ((m, frame_matrix(t)),), label="T-R vs T"),
        NormInequality(diff, ((m, frame_matrix(r)),), label="T-R vs R"),
    )


def certify_min_constant(t: OperatorFamily, r: OperatorFamily, m: float,
                         k_op: Optional[AdjointableOp] = None) -> Certificate:
    t._check(r)
    _check_k(k_op, t)
    if not m > 0:
        raise PreconditionError(f"M must be positive, got {m}")
    a, b = _frame_constants(t, k_op)
    forms = _min_constant_forms(t, r, m)
    ok = all(f.exact() for f in forms)
    s = (math.sqrt(m) + 1.0) ** 2
    details = {"A": a, "B": b, "M": m, "exact_min_M": exact_min_constant(t, r)}
    return _finish("min-constant", "exact-psd", ok, a / s, b * s, _bounds(r, k_op), details, forms)


def exact_min_constant(t: OperatorFamily, r: OperatorFamily) -> float:
    """Smallest M for which the min-constant hypothesis holds (``inf`` if none)."""
    diff = frame_matrix(t - r)
    return max(pencil_max(diff, frame_matrix(t)), pencil_max(diff, frame_matrix(r)))


def derive_min_constant(t: OperatorFamily, r: OperatorFamily, k_op: Optional[AdjointableOp] = None) -> float:
    """Converse constant built from the bounds (A, B) of T and (C, D) of R.

    The triangle inequality gives ||{(T-R)x}|| <= (1 + sqrt(D/A)) ||{Tx}|| and
    ||{(T-R)x}|| <= (1 + sqrt(B/C)) ||{Rx}||.  Squaring and taking the worse
    of the two factors yields a constant for the squared-norm hypothesis
    against the minimum of both sides.
    """
    t._check(r)
    _check_k(k_op, t)
    _require_co_isometry(k_op)
    a, b = _frame_constants(t, k_op)
    c, d = _frame_constants(r, None, name="R")
    return max(1.0 + math.sqrt(d / a), 1.0 + math.sqrt(b / c)) ** 2


def literal_min_constant(t: OperatorFamily, r: OperatorFamily) -> float:
    """min(1 + sqrt(D/A), 1 + sqrt(B/C)) without squaring; kept for comparison only."""
    a, b = _frame_constants(t, None)
    c, d = _frame_constants(r, None, name="R")
    return min(1.0 + math.sqrt(d / a), 1.0 + math.sqrt(b / c))


# -- scalar finite sum -----------------------------------------------------

def _check_families(families):
    if not families:
        raise EmptyFamilyError("no families given")
    for f in families[1:]:
        families[0]._check(f)


def _check_index(p, count):
    if not 0 <= p < count:
        raise IndexError(f"family index {p} out of range for {count} families")


def certify_scalar_sum(families: Sequence[OperatorFamily], alphas, p: int, lam: float,
                       k_op: Optional[AdjointableOp] = None) -> Certificate:
    """{sum_n alpha_n T_{n,i}} given lam ||{T_{p,i} x}|| <= ||{sum_n alpha_n T_{n,i} x}||."""
    _check_families(families)
    _check_index(p, len(families))
    _check_k(k_op, families[0])
    if not lam > 0:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    w = combine(families, alphas)
    a_p, _ = _frame_constants(families[p], k_op, name=f"T{p + 1}")
    uppers = [optimal_bounds(f).upper for f in families]
    form = NormInequality(lam ** 2 * frame_matrix(families[p]), ((1.0, frame_matrix(w)),), label="T_p vs sum")
    ok = form.exact()
    amax = max(abs(complex(a)) for a in alphas)
    upper = amax ** 2 * sum(math.sqrt(u) for u in uppers) ** 2
    details = {"A_p": a_p, "B": uppers, "lambda": lam, "max_lambda": max_sum_lambda(families, alphas, p)}
    return _finish("scalar-sum", "exact-psd", ok, a_p * lam ** 2, upper, _bounds(w, k_op), details, (form,))


def max_sum_lambda(families, alphas, p) -> float:
    """Largest lam with lam^2 S_{T_p} <= S_W (the exact pencil value)."""
    w = combine(families, alphas)
    top = pencil_max(frame_matrix(families[p]), frame_matrix(w))
    if math.isinf(top):
        return 0.0
    return math.inf if top == 0 else 1.0 / math.sqrt(top)


def derive_sum_lambda(families: Sequence[OperatorFamily], alphas, p: int,
                      k_op: Optional[AdjointableOp] = None) -> float:
    """Converse constant A_W / B_p.

    It bounds squared norms: (A_W / B_p) ||{T_p x}||^2 <= ||{W x}||^2, so the
    forward certifier takes its square root.
    """
    _check_families(families)
    _check_index(p, len(families))
    _check_k(k_op, families[0])
    _require_co_isometry(k_op)
    w = combine(families, alphas)
    a_w, _ = _frame_constants(w, k_op, name="W")
    return a_w / optimal_bounds(families[p]).upper


# -- L-operator finite sum -------------------------------------------------

def build_intertwiner(families_t: Sequence[OperatorFamily], families_r: Sequence[OperatorFamily],
                      p: int) -> BlockOperator:
    """Minimal-norm L on l^2(H) with L({sum_n R_{n,i} x}_i) = {T_{p,i} x}_i."""
    _check_families(list(families_t) + list(families_r))
    _check_index(p, len(families_t))
    v = combine(families_r, [1.0] * len(families_r))
    a_v = analysis_matrix(v)
    a_t = analysis_matrix(families_t[p])
    # adjoint form: R_Tp* = R_V* o L*, i.e. a_t^H = flat(L*) @ a_v^H
    res = douglas_factor(a_t.conj().T, a_v.conj().T)
    if not res.included:
        raise RangeViolationError(
            f"no bounded L exists: analysis of T_{p + 1} leaves the range of the summed R (residual {res.residual:.3e})")
    return BlockOperator(res.factor.conj().T, v.k, v.n)


def certify_l_operator_sum(families_t: Sequence[OperatorFamily], families_r: Sequence[OperatorFamily], p: int,
                           lam: float, l_op: Optional[BlockOperator] = None,
                           k_op: Optional[AdjointableOp] = None) -> Certificate:
    if len(families_t) != len(families_r):
        raise ShapeMismatchError(f"{len(families_t)} T families and {len(families_r)} R families")
    _check_families(list(families_t) + list(families_r))
    _check_index(p, len(families_t))
    _check_k(k_op, families_t[0])
    if lam < 0:
        raise PreconditionError(f"lambda must be non-negative, got {lam}")
    consts = [_frame_constants(f, k_op, name=f"T{n + 1}") for n, f in enumerate(families_t)]
    forms = tuple(
        NormInequality(frame_matrix(tn - rn), ((lam, frame_matrix(tn)),), label=f"n={n + 1}")
        for n, (tn, rn) in enumerate(zip(families_t, families_r))
    )
    ok = all(f.exact() for f in forms)

    v = combine(families_r, [1.0] * len(families_r))
    a_v = analysis_matrix(v)
    a_t = analysis_matrix(families_t[p])
    if l_op is None:
        l_op = build_intertwiner(families_t, families_r, p)
        constructed = True
    else:
        if l_op.flat.shape[0] != a_v.shape[1] or (l_op.k, l_op.n) != v.shape:
            raise ShapeMismatchError(f"L of size {l_op.flat.shape} for sequences of width {a_v.shape[1]}")
        constructed = False
    resid = spectral_norm(a_v @ l_op.flat - a_t)
    if resid > INTERTWINE_TOL * max(spectral_norm(a_t), 1.0):
        raise PreconditionError(f"L does not map the summed R analysis onto T_{p + 1} (residual {resid:.3e})")
    l_norm = l_op.norm()
    a_p = consts[p][0]
    lower = a_p / l_norm ** 2
    upper = (1.0 + math.sqrt(lam)) ** 2 * sum(math.sqrt(b) for _, b in consts) ** 2
    details = {
        "A_p": a_p,
        "B": [b for _, b in consts],
        "lambda": lam,
        "L_norm": l_norm,
        "L_constructed": constructed,
        "intertwining_residual": resid,
        "min_lambda": min_l_lambda(families_t, families_r),
    }
    return _finish("l-sum", "exact-psd", ok, lower, upper, _bounds(v, k_op), details, forms)


def min_l_lambda(families_t, families_r) -> float:
    """Smallest lam meeting every per-family hypothesis of the L-sum theorem."""
    return max(pencil_max(frame_matrix(tn - rn), frame_matrix(tn)) for tn, rn in zip(families_t, families_r))


# -- positively confined sequences -----------------------------------------

@dataclass(frozen=True)
class ConfinedSequence:
    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise PreconditionError("a confined sequence needs at least one value")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise PreconditionError("confined sequence values must be finite and positive")
        object.__setattr__(self, "values", vals)

    @property
    def inf(self) -> float:
        return min(self.values)

    @property
    def sup(self) -> float:
        return max(self.values)

    def __len__(self):
        return len(self.values)


def certify_confined_perturbation(t: OperatorFamily, r: OperatorFamily, alpha: ConfinedSequence,
                                  beta: ConfinedSequence, lam: float, mu: float, k_op: AdjointableOp,
                                  samples: int = 500, seed: int = 0) -> Certificate:
    """Perturbation by positively confined weights; the hypothesis is sampled.

    The lower bound is certified against ||K*x||^2, which is what the
    argument through sqrt(A) ||K*x|| <= ||{T_i x}|| supports.
    """
    t._check(r)
    _check_k(k_op, t)
    if not (len(alpha) == len(beta) == len(t)):
        raise ShapeMismatchError(f"weights of length {len(alpha)}, {len(beta)} for a family of {len(t)}")
    for name, v in (("lambda", lam), ("mu", mu)):
        if not 0 <= v < 1:
            raise PreconditionError(f"{name} must lie in [0, 1), got {v}")
    a, b = _frame_constants(t, k_op)
    at = t.scaled(alpha.values)
    br = r.scaled(beta.values)
    form = NormInequality(frame_matrix(at - br), ((lam, frame_matrix(at)), (mu, frame_matrix(br))),
                          sqrt=True, label="confined")
    check = sample_inequalities((form,), t.k, samples, seed)
    lo = (1 - lam) * alpha.inf / ((1 + mu) * beta.sup)
    hi = (1 + lam) * alpha.sup / ((1 - mu) * beta.inf)
    details = {
        "A": a, "B": b, "lambda": lam, "mu": mu,
        "alpha_inf": alpha.inf, "alpha_sup": alpha.sup, "beta_inf": beta.inf, "beta_sup": beta.sup,
        "samples": samples, "seed": seed, "evaluated": check.evaluated, "worst_slack": check.worst_slack,
    }
    return _finish("confined", "sampled", check.ok, a * lo ** 2, b * hi ** 2, k_optimal_bounds(r, k_op),
                   details, (form,))


# -- alpha-beta perturbation -----------------------------------------------

def certify_alpha_beta(t: OperatorFamily, r: OperatorFamily, alpha: float, beta: float,
                       k_op: AdjointableOp) -> Certificate:
    """||<(T-R)x,(T-R)x>|| <= alpha ||sum <T_i x, T_i x>|| + beta ||<K*x, K*x>||.

    The corollary is the call with ``alpha=0``.
    """
    t._check(r)
    _check_k(k_op, t)
    if alpha < 0 or beta < 0:
        raise PreconditionError("alpha and beta must be non-negative")
    a, b = _frame_constants(t, k_op)
    c = alpha + beta / a
    if c >= 1:
        raise HypothesisGateError(f"alpha + beta/A = {c:.6g} must be < 1", c)
    form = NormInequality(frame_matrix(t - r), ((alpha, frame_matrix(t)), (beta, kk_star(k_op))), label="alpha-beta")
    ok = form.exact()
    root = math.sqrt(c)
    details = {"A": a, "B": b, "alpha": alpha, "beta": beta, "alpha_plus_beta_over_A": c}
    return _finish("alpha-beta", "exact-psd", ok, a * (1 - root) ** 2, b * (1 + root) ** 2,
                   k_optimal_bounds(r, k_op), details, (form,))
