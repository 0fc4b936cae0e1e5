"""The free Hilbert A-module H = A^n and finite sequences in l^2(H).

A vector is stored as its n blocks; ``flat`` gives the k x nk horizontal
concatenation used by the operator layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, operator_norm, spectral_norm
from .errors import MalformedElementError, ShapeMismatchError


@dataclass(frozen=True, eq=False)
class ModuleVector:
    blocks: np.ndarray  # (n, k, k)

    def __init__(self, blocks):
        if isinstance(blocks, (list, tuple)) and blocks and isinstance(blocks[0], AlgebraElement):
            blocks = [b.entries for b in blocks]
        arr = np.array(blocks, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] != arr.shape[2] or arr.shape[1] < 1:
            raise MalformedElementError(f"expected n >= 1 blocks of shape k x k, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "blocks", arr)

    @classmethod
    def from_flat(cls, flat, k):
        flat = np.asarray(flat)
        if flat.ndim != 2 or flat.shape[0] != k or flat.shape[1] % k:
            raise ShapeMismatchError(f"flat vector must be {k} x (n*{k}), got {flat.shape}")
        n = flat.shape[1] // k
        return cls(flat.reshape(k, n, k).transpose(1, 0, 2))

    @classmethod
    def zeros(cls, k, n):
        return cls(np.zeros((n, k, k)))

    @property
    def k(self) -> int:
        return self.blocks.shape[1]

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def shape(self):
        return (self.k, self.n)

    @property
    def flat(self):
        return np.concatenate(list(self.blocks), axis=1)

    def block(self, i) -> AlgebraElement:
        return AlgebraElement(self.blocks[i])

    def _check(self, other):
        if other.shape != self.shape:
            raise ShapeMismatchError(f"module vectors of shape {self.shape} and {other.shape}")

    def __add__(self, other):
        self._check(other)
        return ModuleVector(self.blocks + other.blocks)

    def __sub__(self, other):
        self._check(other)
        return ModuleVector(self.blocks - other.blocks)

    def __neg__(self):
        return ModuleVector(-self.blocks)

    def __rmul__(self, a):
        """Left module action by an algebra element, or scalar multiplication."""
        if isinstance(a, AlgebraElement):
            if a.dim != self.k:
                raise ShapeMismatchError(f"algebra dimension {a.dim} vs block size {self.k}")
            return ModuleVector(np.einsum("ij,njk->nik", a.entries, self.blocks))
        return ModuleVector(a * self.blocks)

    def __truediv__(self, c):
        return ModuleVector(self.blocks / c)

    def __repr__(self):
        return f"ModuleVector(k={self.k}, n={self.n})"


def inner_product(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """<x, y> = sum_i x_i y_i^*."""
    if x.shape != y.shape:
        raise ShapeMismatchError(f"inner product of shapes {x.shape} and {y.shape}")
    acc = np.zeros((x.k, x.k), dtype=np.complex128)
    for xi, yi in zip(x.blocks, y.blocks):
        acc += xi @ yi.conj().T
    return AlgebraElement(acc)


def norm(x: ModuleVector) -> float:
    return operator_norm(inner_product(x, x)) ** 0.5


def random_unit_vector(k, n, rng) -> ModuleVector:
    """Gaussian blocks normalized by the module norm."""
    g = (rng.standard_normal((n, k, k)) + 1j * rng.standard_normal((n, k, k))) / np.sqrt(2)
    x = ModuleVector(g)
    return x / norm(x)


def random_unit_flats(k, d, count, rng):
    """``count`` random flat vectors (k x d) of unit module norm."""
    g = (rng.standard_normal((count, k, d)) + 1j * rng.standard_normal((count, k, d))) / np.sqrt(2)
    # ||x||^2 = ||X X^H|| = sigma_max(X)^2
    s = np.linalg.norm(g, ord=2, axis=(1, 2))
    return g / s[:, None, None]


@dataclass(frozen=True, eq=False)
class VectorSequence:
    items: tuple

    def __init__(self, items: Sequence[ModuleVector] = ()):
        items = tuple(items)
        if items:
            shape = items[0].shape
            for i, it in enumerate(items):
                if it.shape != shape:
                    raise ShapeMismatchError(f"item {i} has shape {it.shape}, expected {shape}")
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def _check(self, other):
        if len(self) != len(other):
            raise ShapeMismatchError(f"sequences of length {len(self)} and {len(other)}")

    def __add__(self, other):
        self._check(other)
        return VectorSequence([a + b for a, b in zip(self, other)])

    def __sub__(self, other):
        self._check(other)
        return VectorSequence([a - b for a, b in zip(self, other)])

    @property
    def flat(self):
        """k x (J*nk) concatenation of the item flats."""
        return np.concatenate([it.flat for it in self.items], axis=1)

    @classmethod
    def from_flat(cls, flat, k, n):
        d = n * k
        flat = np.asarray(flat)
        if flat.shape[1] % d:
            raise ShapeMismatchError(f"flat sequence width {flat.shape[1]} is not a multiple of {d}")
        return cls([ModuleVector.from_flat(flat[:, j:j + d], k) for j in range(0, flat.shape[1], d)])


def sequence_inner(s: VectorSequence, t: VectorSequence) -> AlgebraElement:
    """l^2(H) inner product sum_i <s_i, t_i>."""
    s._check(t)
    if not len(s):
        raise ShapeMismatchError("inner product of empty sequences has no algebra dimension")
    acc = inner_product(s[0], t[0])
    for a, b in zip(s.items[1:], t.items[1:]):
        acc = acc + inner_product(a, b)
    return acc


def sequence_norm(s: VectorSequence) -> float:
    """||sum_i <x_i, x_i>||^{1/2}; the empty sequence has norm 0."""
    if not len(s):
        return 0.0
    gram = sum((it.flat @ it.flat.conj().T for it in s.items[1:]), s[0].flat @ s[0].flat.conj().T)
    return spectral_norm(gram) ** 0.5
