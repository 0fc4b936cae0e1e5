"""Batched quadratic-form kernels.

The sampling paths (norm probes, sampled hypotheses, lemma trials) spend
nearly all their time evaluating ``||X M X^H||`` for thousands of k x d
matrices ``X``.  With d <= 12 the numpy version is dominated by per-call
overhead, so a numba kernel is used when available.

Set ``OPFRAMES_NUMBA=0`` to force the pure-numpy path.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_enabled():
    return os.environ.get("OPFRAMES_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = numba is not None and _env_enabled()


def gram_norms_numpy(xs, mats):
    """Spectral norms of ``X_m M_r X_m^H`` for every sample m and matrix r.

    xs: (m, k, d) complex; mats: (r, d, d) complex Hermitian.  Returns (m, r).
    """
    xs = np.ascontiguousarray(xs, dtype=np.complex128)
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    g = np.einsum("mij,rjl,mkl->mrik", xs, mats, xs.conj(), optimize=True)
    g = (g + np.conj(np.swapaxes(g, -1, -2))) / 2
    w = np.linalg.eigvalsh(g)
    return np.maximum(np.abs(w[..., 0]), np.abs(w[..., -1]))


if numba is not None:

    @numba.njit(cache=True)
    def _gram_norms_jit(xs, mats):
        m, k, d = xs.shape
        r = mats.shape[0]
        out = np.empty((m, r))
        tmp = np.empty((k, d), dtype=np.complex128)
        g = np.empty((k, k), dtype=np.complex128)
        for s in range(m):
            x = xs[s]
            for q in range(r):
                mat = mats[q]
                for i in range(k):
                    for j in range(d):
                        acc = 0j
                        for l in range(d):
                            acc += x[i, l] * mat[l, j]
                        tmp[i, j] = acc
                for i in range(k):
                    for j in range(i, k):
                        acc = 0j
                        for l in range(d):
                            acc += tmp[i, l] * np.conj(x[j, l])
                        g[i, j] = acc
                # only the upper triangle was formed; mirror it
                for i in range(k):
                    for j in range(i + 1, k):
                        g[j, i] = np.conj(g[i, j])
                    g[i, i] = g[i, i].real + 0j
                if k == 1:
                    out[s, q] = abs(g[0, 0].real)
                else:
                    w = np.linalg.eigvalsh(g)
                    out[s, q] = max(abs(w[0]), abs(w[-1]))
        return out


def gram_norms_jit(xs, mats):
    if numba is None:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    xs = np.ascontiguousarray(xs, dtype=np.complex128)
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    return _gram_norms_jit(xs, mats)


def gram_norms(xs, mats):
    mats = np.asarray(mats)
    if mats.ndim == 2:
        mats = mats[None]
    if len(xs) == 0:
        return np.empty((0, mats.shape[0]))
    if USE_NUMBA:
        return gram_norms_jit(xs, mats)
    return gram_norms_numpy(xs, mats)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
