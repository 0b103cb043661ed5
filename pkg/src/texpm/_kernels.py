"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

Set the environment variable ``TEXPM_NO_NUMBA=1`` (before import) to force
the numpy implementations; the default uses ``numba.njit`` when numba is
importable.  ``benchmarks/kernel_bench.py`` compares the two paths.

Both implementations of each kernel are importable directly (suffixes
``_py`` / ``_nb``) so tests and benchmarks can compare them regardless of
the flag.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = bool(os.environ.get("TEXPM_NO_NUMBA", ""))

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


# ---------------------------------------------------------------------------
# pivoted generalized Schur elimination on a Cauchy-like system
#
# The matrix C satisfies diag(d1) C - C diag(d2) = G B^H with well separated
# nodes, so any entry is reconstructible as (G[i] B[j]^H) / (d1[i] - d2[j]).
# Partial pivoting permutes d1 and the rows of G.  Returns the packed LU
# (unit lower triangle holds the multipliers), the row permutation, and 0 on
# success or 1 + step index at which the pivot fell below threshold.

def _gko_factor_py(d1, d2, G, B, eps_rel):
    n = d1.shape[0]
    LU = np.zeros((n, n), dtype=np.complex128)
    perm = np.arange(n, dtype=np.int64)
    scale = 0.0
    for k in range(n):
        colk = (G[k:] @ B[k].conj()) / (d1[k:] - d2[k])
        p = int(np.argmax(np.abs(colk)))
        mx = abs(colk[p])
        if mx > scale:
            scale = mx
        if mx <= eps_rel * scale:
            return LU, perm, k + 1
        p += k
        if p != k:
            G[[k, p]] = G[[p, k]]
            d1[[k, p]] = d1[[p, k]]
            LU[[k, p], :k] = LU[[p, k], :k]
            perm[[k, p]] = perm[[p, k]]
            colk[[0, p - k]] = colk[[p - k, 0]]
        piv = colk[0]
        LU[k, k] = piv
        if k + 1 < n:
            l = colk[1:] / piv
            LU[k + 1:, k] = l
            u = (G[k] @ B[k + 1:].conj().T) / (d1[k] - d2[k + 1:])
            LU[k, k + 1:] = u
            G[k + 1:] -= np.outer(l, G[k])
            B[k + 1:] -= np.outer((u / piv).conj(), B[k])
    return LU, perm, 0


def _diag_cumsum_py(D):
    """In-place cumulative sums along every diagonal of D."""
    n = D.shape[0]
    for i in range(1, n):
        D[i, 1:] += D[i - 1, :-1]
    return D


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _gko_factor_nb(d1, d2, G, B, eps_rel):  # pragma: no cover - jitted
        n = d1.shape[0]
        r = G.shape[1]
        LU = np.zeros((n, n), dtype=np.complex128)
        perm = np.arange(n)
        scale = 0.0
        for k in range(n):
            p = k
            best = -1.0
            for i in range(k, n):
                s = 0.0 + 0.0j
                for t in range(r):
                    s += G[i, t] * np.conj(B[k, t])
                cik = s / (d1[i] - d2[k])
                LU[i, k] = cik
                a = abs(cik)
                if a > best:
                    best = a
                    p = i
            if best > scale:
                scale = best
            if best <= eps_rel * scale:
                return LU, perm, k + 1
            if p != k:
                for t in range(r):
                    tmp = G[k, t]
                    G[k, t] = G[p, t]
                    G[p, t] = tmp
                tmpd = d1[k]
                d1[k] = d1[p]
                d1[p] = tmpd
                for j in range(k + 1):
                    tmp = LU[k, j]
                    LU[k, j] = LU[p, j]
                    LU[p, j] = tmp
                tmpi = perm[k]
                perm[k] = perm[p]
                perm[p] = tmpi
            piv = LU[k, k]
            for i in range(k + 1, n):
                LU[i, k] /= piv
            for j in range(k + 1, n):
                s = 0.0 + 0.0j
                for t in range(r):
                    s += G[k, t] * np.conj(B[j, t])
                LU[k, j] = s / (d1[k] - d2[j])
            for i in range(k + 1, n):
                m = LU[i, k]
                for t in range(r):
                    G[i, t] -= m * G[k, t]
            for j in range(k + 1, n):
                mu = np.conj(LU[k, j] / piv)
                for t in range(r):
                    B[j, t] -= mu * B[k, t]
        return LU, perm, 0

    @numba.njit(cache=True)
    def _diag_cumsum_nb(D):  # pragma: no cover - jitted
        n = D.shape[0]
        for i in range(1, n):
            for j in range(1, n):
                D[i, j] += D[i - 1, j - 1]
        return D

else:  # pragma: no cover
    _gko_factor_nb = None
    _diag_cumsum_nb = None


gko_factor_core = _gko_factor_nb if USE_NUMBA else _gko_factor_py
diag_cumsum_core = _diag_cumsum_nb if USE_NUMBA else _diag_cumsum_py


def warmup():
    """Trigger jit compilation on tiny inputs (no-op on the numpy path)."""
    d1 = np.exp(2j * np.pi * np.arange(2) / 2)
    d2 = np.exp(1j * np.pi * (2 * np.arange(2) + 1) / 2)
    G = np.ones((2, 1), dtype=np.complex128)
    B = np.ones((2, 1), dtype=np.complex128)
    gko_factor_core(d1.copy(), d2, G, B, 1e-14)
    diag_cumsum_core(np.ones((2, 2), dtype=np.complex128))
