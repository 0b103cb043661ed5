"""Compact Toeplitz matrices: FFT matrix-vector products and norm estimation.

A Toeplitz matrix is stored as its first column and first row only.  Products
with vectors (or blocks of vectors) go through a cached circulant embedding,
so a single product costs O(n log n) and repeated products reuse the plan.
"""

from __future__ import annotations

import csv
import json

import numpy as np

__all__ = [
    "ToeplitzMatrix",
    "CirculantPlan",
    "make_toeplitz",
    "toeplitz_matvec",
    "norm1",
    "norm2_estimate",
    "save_toeplitz_json",
    "load_toeplitz_json",
    "save_toeplitz_csv",
    "load_toeplitz_csv",
]


def fft_length(n: int) -> int:
    """Smallest power of two >= 2n-1, the circulant embedding size."""
    m = 1
    while m < 2 * n - 1:
        m *= 2
    return m


class CirculantPlan:
    """Eigenvalues of the circulant embedding of a Toeplitz matrix.

    The embedding has first column ``[col, 0...0, row[n-1], ..., row[1]]`` of
    length ``m = fft_length(n)``; its leading n-by-n block is the Toeplitz
    matrix itself, so padding a vector with zeros, multiplying in Fourier
    space and truncating reproduces the dense product.
    """

    def __init__(self, col: np.ndarray, row: np.ndarray):
        n = len(col)
        m = fft_length(n)
        first = np.zeros(m, dtype=np.complex128)
        first[:n] = col
        if n > 1:
            first[m - n + 1:] = row[:0:-1]
        self.n = n
        self.m = m
        self.eigenvalues = np.fft.fft(first)

    def apply(self, x: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """Multiply the embedded Toeplitz block (or its adjoint) with x.

        x may be a vector of length n or an (n, k) block.
        """
        lam = self.eigenvalues.conj() if adjoint else self.eigenvalues
        if x.ndim == 1:
            fx = np.fft.fft(x, n=self.m)
            return np.fft.ifft(lam * fx)[: self.n]
        fx = np.fft.fft(x, n=self.m, axis=0)
        return np.fft.ifft(lam[:, None] * fx, axis=0)[: self.n]


class ToeplitzMatrix:
    """n-by-n Toeplitz matrix given by its first column and first row.

    Entry (i, j) equals ``col[i-j]`` for i >= j and ``row[j-i]`` otherwise.
    Instances are immutable; the circulant plan is created lazily and shared
    by all subsequent products (idempotent, hence safe under concurrent
    first use).
    """

    __slots__ = ("col", "row", "_plan")

    def __init__(self, col, row):
        col = np.asarray(col, dtype=np.complex128).reshape(-1).copy()
        row = np.asarray(row, dtype=np.complex128).reshape(-1).copy()
        if col.size == 0 or row.size == 0:
            raise ValueError("col and row must be nonempty")
        if col.size != row.size:
            raise ValueError(f"col and row lengths differ: {col.size} != {row.size}")
        if col[0] != row[0]:
            raise ValueError(f"corner mismatch: col[0]={col[0]} != row[0]={row[0]}")
        col.setflags(write=False)
        row.setflags(write=False)
        object.__setattr__(self, "col", col)
        object.__setattr__(self, "row", row)
        object.__setattr__(self, "_plan", None)

    def __setattr__(self, name, value):
        raise AttributeError("ToeplitzMatrix is immutable")

    @property
    def n(self) -> int:
        return self.col.size

    @property
    def plan(self) -> CirculantPlan:
        if self._plan is None:
            object.__setattr__(self, "_plan", CirculantPlan(self.col, self.row))
        return self._plan

    def adjoint(self) -> "ToeplitzMatrix":
        """Conjugate transpose, again a Toeplitz matrix."""
        return ToeplitzMatrix(np.conj(self.row), np.conj(self.col))

    def scaled(self, factor: complex) -> "ToeplitzMatrix":
        return ToeplitzMatrix(factor * self.col, factor * self.row)

    def shifted(self, alpha: complex) -> "ToeplitzMatrix":
        """T + alpha*I; only the corner entry changes."""
        col = self.col.copy()
        row = self.row.copy()
        col[0] += alpha
        row[0] += alpha
        return ToeplitzMatrix(col, row)

    def dense(self) -> np.ndarray:
        n = self.n
        idx = np.subtract.outer(np.arange(n), np.arange(n))
        out = np.where(idx >= 0, self.col[np.abs(idx)], self.row[np.abs(idx)])
        return np.ascontiguousarray(out)

    def last_column(self) -> np.ndarray:
        return np.concatenate([self.row[:0:-1], self.col[:1]])

    def last_row(self) -> np.ndarray:
        return self.col[::-1].copy()

    def __repr__(self):
        return f"ToeplitzMatrix(n={self.n})"


def make_toeplitz(col, row) -> ToeplitzMatrix:
    """Validate and wrap a first column / first row pair."""
    return ToeplitzMatrix(col, row)


def toeplitz_matvec(T: ToeplitzMatrix, x, adjoint: bool = False) -> np.ndarray:
    """Compute T @ x (or T^H @ x) in O(n log n) via the circulant embedding.

    x may be an (n,) vector or an (n, k) block; the output matches its shape.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[0] != T.n:
        raise ValueError(f"dimension mismatch: matrix is {T.n}, vector has {x.shape[0]} rows")
    return T.plan.apply(x, adjoint=adjoint)


def norm1(T: ToeplitzMatrix) -> float:
    """Exact 1-norm (max absolute column sum) in O(n).

    Column sums of a Toeplitz matrix obey a sliding-window recursion: moving
    one column to the right trades the last column entry for a new row entry.
    """
    ac = np.abs(T.col)
    ar = np.abs(T.row)
    mu0 = ac.sum()
    if T.n == 1:
        return float(mu0)
    deltas = ar[1:] - ac[1:][::-1]
    mus = mu0 + np.cumsum(deltas)
    return float(max(mu0, mus.max()))


def norm2_estimate(T: ToeplitzMatrix, max_iters: int = 20, tol: float = 1e-3,
                   seed: int = 1234) -> float:
    """Power-method lower bound on the spectral norm.

    One forward and one adjoint product per iteration (power iteration on
    T^H T), with a fixed-seed start vector for reproducibility.  The returned
    value is a Rayleigh quotient, hence never exceeds the true norm beyond
    roundoff.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(T.n) + 1j * rng.standard_normal(T.n)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return 0.0
    x /= nx
    best = 0.0
    prev = 0.0
    for _ in range(max_iters):
        y = toeplitz_matvec(T, x)
        sigma = float(np.linalg.norm(y))
        best = max(best, sigma)
        if sigma == 0.0:
            return 0.0
        z = toeplitz_matvec(T, y, adjoint=True)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        x = z / nz
        if prev > 0.0 and abs(sigma - prev) < tol * sigma:
            break
        prev = sigma
    return best


# ---------------------------------------------------------------------------
# serialization

def _pairs(v: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in v]


def _unpairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def toeplitz_to_dict(T: ToeplitzMatrix) -> dict:
    return {"n": T.n, "col": _pairs(T.col), "row": _pairs(T.row)}


def toeplitz_from_dict(d: dict) -> ToeplitzMatrix:
    T = ToeplitzMatrix(_unpairs(d["col"]), _unpairs(d["row"]))
    if T.n != int(d["n"]):
        raise ValueError(f"inconsistent JSON: n={d['n']} but vectors have length {T.n}")
    return T


def save_toeplitz_json(T: ToeplitzMatrix, path) -> None:
    with open(path, "w") as f:
        json.dump(toeplitz_to_dict(T), f)


def load_toeplitz_json(path) -> ToeplitzMatrix:
    with open(path) as f:
        return toeplitz_from_dict(json.load(f))


def save_toeplitz_csv(T: ToeplitzMatrix, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "col_re", "col_im", "row_re", "row_im"])
        for i in range(T.n):
            w.writerow([i, repr(T.col[i].real), repr(T.col[i].imag),
                        repr(T.row[i].real), repr(T.row[i].imag)])


def load_toeplitz_csv(path) -> ToeplitzMatrix:
    col_re, col_im, row_re, row_im = [], [], [], []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            col_re.append(float(rec["col_re"]))
            col_im.append(float(rec["col_im"]))
            row_re.append(float(rec["row_re"]))
            row_im.append(float(rec["row_im"]))
    col = np.asarray(col_re) + 1j * np.asarray(col_im)
    row = np.asarray(row_re) + 1j * np.asarray(row_im)
    return ToeplitzMatrix(col, row)
