"""Fast solver for Toeplitz-like linear systems.

Pipeline: a Stein generator is converted to a Sylvester generator with
respect to the (+1)/(-1) cyclic shifts, the shifts are diagonalized by FFTs
(turning the system into Cauchy-like form with unit-circle nodes), and a
pivoted generalized Schur elimination factors the Cauchy-like matrix in
O(r n^2).  One factorization serves both the matrix and its adjoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .displacement import EPS, Generator, compress, tl_matvec, toeplitz_generator
from .toeplitz import ToeplitzMatrix

__all__ = [
    "SingularMatrixError",
    "SylvesterGenerator",
    "CauchyLikeSystem",
    "CauchyFactorization",
    "stein_to_sylvester",
    "sylvester_to_cauchy",
    "gko_factor",
    "gko_solve",
    "TLFactorization",
    "tl_factor",
    "tl_solve",
]


class SingularMatrixError(np.linalg.LinAlgError):
    """Elimination hit a pivot below the singularity threshold."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"matrix numerically singular at elimination step {step}")


@dataclass
class SylvesterGenerator:
    """Factors of Z1 A - A Zm1 = Gs Bs^H (cyclic shifts with corners +1/-1)."""

    Gs: np.ndarray
    Bs: np.ndarray

    @property
    def n(self) -> int:
        return self.Gs.shape[0]

    @property
    def r(self) -> int:
        return self.Gs.shape[1]


@dataclass
class CauchyLikeSystem:
    """Nodes and generators with diag(d1) C - C diag(d2) = Gc Bc^H.

    For systems produced by the pipeline the nodes are the n-th roots of
    unity (d1) and the odd 2n-th roots (d2): disjoint unit-circle sets, so
    every entry of C is (Gc Bc^H)[i,j] / (d1[i] - d2[j]).
    """

    d1: np.ndarray
    d2: np.ndarray
    Gc: np.ndarray
    Bc: np.ndarray

    @property
    def n(self) -> int:
        return self.d1.shape[0]

    def dense(self) -> np.ndarray:
        num = self.Gc @ self.Bc.conj().T
        return num / (self.d1[:, None] - self.d2[None, :])


@dataclass
class CauchyFactorization:
    """Packed LU of a row-permuted Cauchy-like matrix: C[perm] = L U."""

    lu: np.ndarray
    perm: np.ndarray

    def solve(self, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """Solve C x = rhs, or C^H x = rhs using the same factors."""
        if not adjoint:
            y = scipy.linalg.solve_triangular(self.lu, rhs[self.perm], lower=True,
                                              unit_diagonal=True)
            return scipy.linalg.solve_triangular(self.lu, y, lower=False)
        u = scipy.linalg.solve_triangular(self.lu, rhs, lower=False, trans="C")
        v = scipy.linalg.solve_triangular(self.lu, u, lower=True, unit_diagonal=True,
                                          trans="C")
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def dump_pivots(self, path) -> None:
        """Write the pivot sequence as CSV (step, original_row, abs_pivot)."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "row", "abs_pivot"])
            for k in range(self.lu.shape[0]):
                w.writerow([k, int(self.perm[k]), abs(self.lu[k, k])])


def stein_to_sylvester(gen: Generator, last_col: np.ndarray,
                       last_row: np.ndarray) -> SylvesterGenerator:
    """Convert a Stein generator into Sylvester form, length at most r+2.

    The Sylvester displacement equals (M - nabla(A)) Zm1 where M is the
    displacement of the Toeplitz matrix with first column [-alpha; -c] and
    first row [-alpha, rr], built from the last column [c; alpha] and last
    row [rr, alpha] of A.  Nothing is densified; the output is assembled
    from the factors and compressed to numerical rank.
    """
    n = gen.n
    last_col = np.asarray(last_col, dtype=np.complex128)
    last_row = np.asarray(last_row, dtype=np.complex128)
    alpha = last_col[-1]
    tcol = np.concatenate([[-alpha], -last_col[:-1]])
    trow = np.concatenate([[-alpha], last_row[:-1]])
    helper = toeplitz_generator(ToeplitzMatrix(tcol, trow))
    Gs = np.hstack([helper.G, gen.G])
    Braw = np.hstack([helper.B, -gen.B])
    # Bs = Zm1^H Braw; Zm1^H shifts rows up and wraps the first row negated.
    Bs = np.vstack([Braw[1:], -Braw[:1]])
    trimmed, _ = compress(Generator(Gs, Bs), tol=n * EPS)
    return SylvesterGenerator(trimmed.G, trimmed.B)


def sylvester_to_cauchy(sg: SylvesterGenerator) -> CauchyLikeSystem:
    """Diagonalize the cyclic shifts by FFTs and diagonal phase scalings.

    With F the DFT matrix and D0 = diag(exp(-i pi k / n)), the transformed
    matrix is C = F^{-1} A (D0 F); the generators map accordingly.  The
    scalings are pinned by the defining invariant diag(d1) C - C diag(d2)
    = Gc Bc^H, which the tests check densely.
    """
    n = sg.n
    k = np.arange(n)
    d1 = np.exp(2j * np.pi * k / n)
    d2 = np.exp(1j * np.pi * (2 * k + 1) / n)
    phase = np.exp(1j * np.pi * k / n)  # conj of the D0 diagonal
    Gc = np.fft.ifft(sg.Gs, axis=0)
    Bc = n * np.fft.ifft(phase[:, None] * sg.Bs, axis=0)
    return CauchyLikeSystem(d1, d2, Gc, Bc)


def gko_factor(cls: CauchyLikeSystem, pivot_rtol: float | None = None,
               safeguard: bool = False) -> CauchyFactorization:
    """Generalized Schur elimination with partial pivoting, O(r n^2).

    At step k the k-th column of the current Schur complement is rebuilt
    from the generators, the largest entry is promoted to the pivot (by
    permuting d1 and the rows of Gc), and the generators receive the usual
    rank-one Schur update.  Fails with `SingularMatrixError` when the best
    pivot falls below ``pivot_rtol`` times the running pivot scale
    (default n*eps).

    With ``safeguard=True`` the trailing generator block is re-orthonormalized
    by a thin QR after every step (extra insurance against generator growth);
    this path always runs the pure numpy kernel.
    """
    n = cls.n
    if pivot_rtol is None:
        pivot_rtol = n * EPS
    d1 = cls.d1.astype(np.complex128).copy()
    G = cls.Gc.astype(np.complex128).copy()
    B = cls.Bc.astype(np.complex128).copy()
    if G.shape[1] == 0:
        raise SingularMatrixError(0, "empty generator (zero matrix)")
    if safeguard:
        lu, perm, fail = _gko_factor_safeguarded(d1, cls.d2, G, B, pivot_rtol)
    else:
        lu, perm, fail = _kernels.gko_factor_core(d1, cls.d2, G, B, pivot_rtol)
    if fail:
        step = fail - 1
        raise SingularMatrixError(
            step, f"pivot below {pivot_rtol:.2e} of scale at elimination step {step}")
    return CauchyFactorization(lu, perm)


def _gko_factor_safeguarded(d1, d2, G, B, eps_rel):
    n = d1.shape[0]
    LU = np.zeros((n, n), dtype=np.complex128)
    perm = np.arange(n, dtype=np.int64)
    scale = 0.0
    for k in range(n):
        colk = (G[k:] @ B[k].conj()) / (d1[k:] - d2[k])
        p = int(np.argmax(np.abs(colk)))
        mx = abs(colk[p])
        scale = max(scale, mx)
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
            Q, R = np.linalg.qr(G[k + 1:], mode="reduced")
            G[k + 1:] = Q
            B[k + 1:] = B[k + 1:] @ R.conj().T
    return LU, perm, 0


def gko_solve(cls: CauchyLikeSystem, rhs: np.ndarray, adjoint: bool = False,
              pivot_rtol: float | None = None, safeguard: bool = False,
              pivot_dump=None) -> np.ndarray:
    """Factor the Cauchy-like system and solve for all right-hand sides."""
    rhs = np.asarray(rhs, dtype=np.complex128)
    single = rhs.ndim == 1
    R = rhs[:, None] if single else rhs
    if R.shape[0] != cls.n:
        raise ValueError(f"dimension mismatch: n={cls.n}, rhs has {R.shape[0]} rows")
    fac = gko_factor(cls, pivot_rtol=pivot_rtol, safeguard=safeguard)
    if pivot_dump is not None:
        fac.dump_pivots(pivot_dump)
    X = fac.solve(R, adjoint=adjoint)
    return X[:, 0] if single else X


class TLFactorization:
    """Reusable factorization of a Toeplitz-like matrix.

    Wraps the Cauchy-like LU together with the Fourier transforms that map
    right-hand sides in and solutions out.  ``solve(rhs, adjoint=True)``
    solves with the conjugate transpose through the same factors.
    """

    def __init__(self, factorization: CauchyFactorization, n: int):
        self._fac = factorization
        self.n = n
        k = np.arange(n)
        self._phi = np.exp(-1j * np.pi * k / n)

    @property
    def perm(self) -> np.ndarray:
        return self._fac.perm

    def solve(self, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.complex128)
        single = rhs.ndim == 1
        R = rhs[:, None] if single else rhs
        if R.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: n={self.n}, rhs has {R.shape[0]} rows")
        n = self.n
        phi = self._phi
        if not adjoint:
            # A = F C W^{-1}:  C (W^{-1} x) = F^{-1} b
            y = self._fac.solve(np.fft.ifft(R, axis=0))
            X = phi[:, None] * np.fft.fft(y, axis=0)
        else:
            # A^H = W^{-H} C^H F^H:  C^H (F^H x) = W^H b
            y = self._fac.solve(n * np.fft.ifft(np.conj(phi)[:, None] * R, axis=0),
                                adjoint=True)
            X = np.fft.fft(y, axis=0) / n
        return X[:, 0] if single else X

    def dump_pivots(self, path) -> None:
        self._fac.dump_pivots(path)


def _last_col_row(obj) -> tuple[Generator, np.ndarray, np.ndarray]:
    if isinstance(obj, ToeplitzMatrix):
        return toeplitz_generator(obj), obj.last_column(), obj.last_row()
    if isinstance(obj, Generator):
        en = np.zeros(obj.n, dtype=np.complex128)
        en[-1] = 1.0
        last_col = tl_matvec(obj, en)
        last_row = np.conj(tl_matvec(obj, en, adjoint=True))
        return obj, last_col, last_row
    raise TypeError(f"expected ToeplitzMatrix or Generator, got {type(obj).__name__}")


def tl_factor(obj, pivot_rtol: float | None = None,
              safeguard: bool = False) -> TLFactorization:
    """Factor a ToeplitzMatrix or Generator for repeated solves."""
    gen, last_col, last_row = _last_col_row(obj)
    sg = stein_to_sylvester(gen, last_col, last_row)
    cls = sylvester_to_cauchy(sg)
    fac = gko_factor(cls, pivot_rtol=pivot_rtol, safeguard=safeguard)
    return TLFactorization(fac, gen.n)


def tl_solve(obj, rhs: np.ndarray, adjoint: bool = False,
             pivot_rtol: float | None = None, safeguard: bool = False,
             pivot_dump=None) -> np.ndarray:
    """End-to-end Toeplitz-like solve.

    ``obj`` is a ToeplitzMatrix or a Generator.  Adjoint solves run the
    pipeline on the adjoint representation of the input.  Right-hand sides
    may be a vector or an (n, k) block, solved in one factorization.
    """
    if adjoint:
        obj = obj.adjoint()
    fac = tl_factor(obj, pivot_rtol=pivot_rtol, safeguard=safeguard)
    if pivot_dump is not None:
        fac.dump_pivots(pivot_dump)
    return fac.solve(rhs)
