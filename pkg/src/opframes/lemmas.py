"""Randomized checks of the operator inequalities the frame results rest on.

Each check draws its own trials from a seeded generator and returns pass /
fail counts; ``run_lemma_suite`` bundles all four for the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adjointable import (
    AdjointableOp,
    apply,
    compose,
    douglas_check,
    op_norm,
    surjectivity_bounds,
    ttstar_bounds,
)
from .algebra import positivity_check, psd_sqrt, spectral_norm
from .frames import frame_matrix, rank_one
from .module import ModuleVector, inner_product, norm, random_unit_flats

FACTOR_TOL = 1e-8


@dataclass
class LemmaCount:
    trials: int = 0
    passed: int = 0

    @property
    def failed(self) -> int:
        return self.trials - self.passed

    def record(self, ok):
        self.trials += 1
        self.passed += bool(ok)

    def to_dict(self):
        return {"trials": self.trials, "passed": self.passed, "failed": self.failed}


def _gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _random_vector(rng, k, n):
    return ModuleVector.from_flat(random_unit_flats(k, n * k, 1, rng)[0], k)


def check_norm_domination(ops, trials, rng) -> LemmaCount:
    """<Tx, Tx> <= ||T||^2 <x, x> as an A-valued inequality."""
    out = LemmaCount()
    for j in range(trials):
        t = ops[j % len(ops)]
        x = _random_vector(rng, t.k, t.n)
        tx = apply(t, x)
        gap = op_norm(t) ** 2 * inner_product(x, x) - inner_product(tx, tx)
        out.record(positivity_check(gap))
    return out


def engineered_douglas_pair(base: AdjointableOp, included: bool, rng):
    """(T, S) with range(T) inside range(S) or, for ``included=False``, not."""
    d = base.dim
    if included:
        q = AdjointableOp(_gaussian(rng, (d, d)), base.k, base.n)
        return compose(base, q), base
    rank = int(rng.integers(0, d))
    left = _gaussian(rng, (d, rank))
    right = _gaussian(rng, (rank, d))
    s = AdjointableOp(left @ right @ base.flat, base.k, base.n)
    return base, s


def check_douglas(ops, trials, rng, samples=200) -> LemmaCount:
    """Range inclusion, majorization and factorization agree with the construction.

    Half the trials are included pairs, half excluded.  For included pairs
    the norm statement mu ||T*x||^2 <= ||S*x||^2 with mu = lambda is sampled;
    for excluded pairs a vector with S*x = 0 != T*x is exhibited.
    """
    out = LemmaCount()
    for j in range(trials):
        base = ops[j % len(ops)]
        want = j % 2 == 0
        t, s = engineered_douglas_pair(base, want, rng)
        res = douglas_check(t, s)
        ok = res.included == want and res.consistent and all(v == want for v in res.statements.values())
        pt = t.flat.conj().T @ t.flat
        ps = s.flat.conj().T @ s.flat
        if want and ok:
            ok = spectral_norm(compose(s, res.factor).flat - t.flat) <= FACTOR_TOL * max(op_norm(t), 1.0)
            xs = random_unit_flats(t.k, t.dim, samples, rng)
            norms = _kernels.gram_norms(xs, np.stack([pt, ps]))
            ok = ok and bool(np.all(res.lam * norms[:, 0] <= norms[:, 1] * (1 + 1e-9) + 1e-12))
        elif not want and ok:
            w, v = np.linalg.eigh((ps + ps.conj().T) / 2)
            kernel = v[:, w <= 1e-10 * max(w[-1], 1e-300)]
            proj = kernel.conj().T @ pt @ kernel
            wk, vk = np.linalg.eigh((proj + proj.conj().T) / 2)
            x = rank_one(kernel @ vk[:, -1], t.k)
            n_t = spectral_norm(x @ pt @ x.conj().T)
            n_s = spectral_norm(x @ ps @ x.conj().T)
            ok = n_t > 1e-8 and n_s <= 1e-8 * max(n_t, 1.0)
        out.record(ok)
    return out


def self_adjoint_candidates(ops, families=()):
    cands = [AdjointableOp((t.flat + t.flat.conj().T) / 2, t.k, t.n) for t in ops]
    for f in families:
        cands.append(AdjointableOp(psd_sqrt(frame_matrix(f)), f.k, f.n))
    return cands


def check_surjectivity(cands, trials, rng) -> LemmaCount:
    """m'<x,x> <= <Tx,Tx> <= M'<x,x> and m||x|| <= ||Tx|| <= M||x|| for surjective self-adjoint T."""
    out = LemmaCount()
    eligible = [c for c in cands if surjectivity_bounds(c).surjective]
    if not eligible:
        return out
    for j in range(trials):
        t = eligible[j % len(eligible)]
        b = surjectivity_bounds(t)
        x = _random_vector(rng, t.k, t.n)
        tx = apply(t, x)
        g, gt = inner_product(x, x), inner_product(tx, tx)
        ok = positivity_check(gt - b.m ** 2 * g) and positivity_check(b.M ** 2 * g - gt)
        ratio = norm(tx) / norm(x)
        ok = ok and b.m - 1e-9 <= ratio <= b.M + 1e-9
        out.record(ok)
    return out


def check_ttstar(ops, trials, rng) -> LemmaCount:
    """||(T*T)^{-1}||^{-1} <= T*T <= ||T||^2, against an eigenvalue computation and at sampled x."""
    out = LemmaCount()
    for j in range(trials):
        t = ops[j % len(ops)]
        try:
            b = ttstar_bounds(t)
        except ValueError:
            continue
        lam_min = float(np.linalg.eigvalsh(t.flat @ t.flat.conj().T)[0])
        x = _random_vector(rng, t.k, t.n)
        tx = apply(t, x)
        g, gt = inner_product(x, x), inner_product(tx, tx)
        ok = (
            b.sandwich_ok
            and abs(b.lower - lam_min) <= 1e-9 * max(lam_min, 1.0)
            and positivity_check(gt - b.lower * g)
            and positivity_check(b.upper * g - gt)
        )
        out.record(ok)
    return out


def run_lemma_suite(ops, families=(), trials=100, seed=0) -> dict:
    """All four checks on the operators of an instance."""
    if not ops:
        raise ValueError("the lemma suite needs at least one operator")
    seeds = np.random.SeedSequence(seed).spawn(4)
    rngs = [np.random.default_rng(s) for s in seeds]
    results = {
        "norm_domination": check_norm_domination(ops, trials, rngs[0]),
        "douglas": check_douglas(ops, trials, rngs[1]),
        "surjectivity": check_surjectivity(self_adjoint_candidates(ops, families), trials, rngs[2]),
        "ttstar": check_ttstar(ops, trials, rngs[3]),
    }
    return {name: c.to_dict() for name, c in results.items()}
