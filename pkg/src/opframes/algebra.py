"""The matrix C*-algebra M_k(C).

Elements are immutable k x k complex arrays.  Besides the element type this
module holds the matrix-level PSD helpers that the rest of the package uses
on flattened operators, so every positivity decision goes through one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

from .errors import MalformedElementError, NotPositiveError, ShapeMismatchError

DEFAULT_TOL = 1e-9
RANK_TOL = 1e-10


def _frozen(arr):
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    entries: np.ndarray

    def __init__(self, entries, dim=None):
        arr = np.asarray(entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise MalformedElementError(f"expected a non-empty square matrix, got shape {arr.shape}")
        if dim is not None and arr.shape[0] != dim:
            raise MalformedElementError(f"declared dimension {dim} but entries are {arr.shape[0]}x{arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise MalformedElementError("entries must be finite")
        object.__setattr__(self, "entries", _frozen(arr))

    @classmethod
    def identity(cls, k):
        return cls(np.eye(k))

    @classmethod
    def zero(cls, k):
        return cls(np.zeros((k, k)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> AlgebraElement:
        return AlgebraElement(self.entries.conj().T)

    def _check(self, other):
        if other.dim != self.dim:
            raise ShapeMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.entries - other.entries)

    def __neg__(self):
        return AlgebraElement(-self.entries)

    def __matmul__(self, other):
        self._check(other)
        return AlgebraElement(self.entries @ other.entries)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return self @ other
        if isinstance(other, Number):
            return AlgebraElement(self.entries * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return AlgebraElement(other * self.entries)
        return NotImplemented

    def allclose(self, other, atol=1e-12) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.entries, other.entries, rtol=0, atol=atol))

    def __repr__(self):
        return f"AlgebraElement(dim={self.dim})"


# -- matrix-level helpers --------------------------------------------------

def spectral_norm(mat) -> float:
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def hermitian_deviation(mat) -> float:
    mat = np.asarray(mat)
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def hermitian_part(mat):
    mat = np.asarray(mat)
    return (mat + mat.conj().T) / 2


def min_eigenvalue(mat) -> float:
    """Smallest eigenvalue of the Hermitian part of ``mat``."""
    return float(np.linalg.eigvalsh(hermitian_part(mat))[0])


def psd_check(mat, tol=DEFAULT_TOL) -> bool:
    """PSD test on a square matrix with the package's scale-aware tolerance."""
    mat = np.asarray(mat, dtype=np.complex128)
    scale = max(spectral_norm(mat), 1.0)
    if hermitian_deviation(mat) > tol * scale:
        return False
    return min_eigenvalue(mat) >= -tol * scale


def psd_sqrt(mat):
    """Positive square root of a Hermitian PSD matrix (negative roundoff clipped)."""
    w, v = np.linalg.eigh(hermitian_part(mat))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_pinv_sqrt(mat, rank_tol=RANK_TOL):
    """Returns ``(S^{+1/2}, range_basis)`` for Hermitian PSD ``mat``.

    Eigenvalues below ``rank_tol * lambda_max`` count as zero.
    """
    w, v = np.linalg.eigh(hermitian_part(mat))
    top = w[-1] if w.size else 0.0
    keep = w > rank_tol * max(top, 0.0) if top > 0 else np.zeros_like(w, dtype=bool)
    vk = v[:, keep]
    return (vk / np.sqrt(w[keep])) @ vk.conj().T, vk


def pencil_max(num, den, rank_tol=RANK_TOL):
    """Largest generalized eigenvalue of the Hermitian PSD pencil (num, den).

    This is the least ``c`` with ``num <= c * den``.  Returns ``inf`` when
    range(num) is not contained in range(den).
    """
    num = hermitian_part(np.asarray(num, dtype=np.complex128))
    den_isqrt, basis = psd_pinv_sqrt(den, rank_tol)
    scale = max(spectral_norm(num), 1.0)
    outside = num - basis @ (basis.conj().T @ num)
    if spectral_norm(outside) > 1e-8 * scale:
        return np.inf
    if basis.shape[1] == 0:
        return 0.0
    core = den_isqrt @ num @ den_isqrt
    return max(float(np.linalg.eigvalsh(hermitian_part(core))[-1]), 0.0)


# -- element operations ----------------------------------------------------

def positivity_check(a: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return psd_check(a.entries, tol)


def positive_sqrt(a: AlgebraElement) -> AlgebraElement:
    if not positivity_check(a):
        lam = min_eigenvalue(a.entries)
        raise NotPositiveError(f"element is not positive (min eigenvalue {lam:.3e})", lam)
    return AlgebraElement(psd_sqrt(a.entries))


def operator_norm(a: AlgebraElement) -> float:
    return spectral_norm(a.entries)
