"""Generators for matrices of low displacement rank.

The displacement of A is ``A - Z A Z^H`` with Z the downward shift.  A
generator is a factorization ``A - Z A Z^H = G B^H`` with G, B of shape
(n, r); r is the generator length.  All fast arithmetic in this package
operates on generators instead of dense matrices.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import diag_cumsum_core
from .toeplitz import ToeplitzMatrix, fft_length

__all__ = [
    "Generator",
    "CompressionReport",
    "toeplitz_generator",
    "identity_generator",
    "reconstruct",
    "extract_band",
    "tl_matvec",
    "compress",
    "displacement_of_dense",
    "generator_from_dense",
    "generator_singular_values",
    "numerical_rank",
    "save_generator_json",
    "load_generator_json",
    "save_generator_binary",
    "load_generator_binary",
]

EPS = float(np.finfo(np.float64).eps)


class Generator:
    """Immutable generator pair (G, B) with ``A - Z A Z^H = G B^H``.

    FFTs of the generator columns are cached lazily; they are what every
    fast product needs and they never change.
    """

    __slots__ = ("G", "B", "_fft_cache")

    def __init__(self, G, B):
        G = np.asarray(G, dtype=np.complex128)
        B = np.asarray(B, dtype=np.complex128)
        if G.ndim != 2 or B.ndim != 2:
            raise ValueError("G and B must be 2-d arrays")
        if G.shape != B.shape:
            raise ValueError(f"G and B shapes differ: {G.shape} != {B.shape}")
        if G.shape[1] > G.shape[0]:
            raise ValueError(f"generator length {G.shape[1]} exceeds dimension {G.shape[0]}")
        G = G.copy()
        B = B.copy()
        G.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "_fft_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("Generator is immutable")

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def r(self) -> int:
        return self.G.shape[1]

    def adjoint(self) -> "Generator":
        """Generator of A^H (swap the factors)."""
        return Generator(self.B, self.G)

    def scaled(self, factor: complex) -> "Generator":
        return Generator(factor * self.G, self.B)

    def column_ffts(self, which: str):
        """fft of G, B, conj(G) or conj(B) columns at the embedding length."""
        key = which
        cache = self._fft_cache
        if key not in cache:
            m = fft_length(self.n)
            src = {"G": self.G, "B": self.B,
                   "cG": np.conj(self.G), "cB": np.conj(self.B)}[which]
            cache[key] = np.fft.fft(src, n=m, axis=0)
        return cache[key]

    def __repr__(self):
        return f"Generator(n={self.n}, r={self.r})"


@dataclass
class CompressionReport:
    """Certified truncation record for one compression call.

    ``bound_2norm = n * sigma_{r+1}`` and the Frobenius analogue are the
    reconstruction error bounds implied by the discarded singular values.
    """

    retained_rank: int
    discarded_singular_values: np.ndarray
    bound_2norm: float
    bound_fro: float


def toeplitz_generator(T: ToeplitzMatrix) -> Generator:
    """Canonical length-2 generator of a Toeplitz matrix.

    G = [col | e1], B = [e1 | b] with b = (0, conj(row[1]), ..., conj(row[n-1])).
    """
    n = T.n
    G = np.zeros((n, 2), dtype=np.complex128)
    B = np.zeros((n, 2), dtype=np.complex128)
    G[:, 0] = T.col
    G[0, 1] = 1.0
    B[0, 0] = 1.0
    B[1:, 1] = np.conj(T.row[1:])
    return Generator(G, B)


def identity_generator(n: int) -> Generator:
    e1 = np.zeros((n, 1), dtype=np.complex128)
    e1[0, 0] = 1.0
    return Generator(e1, e1)


def reconstruct(gen: Generator) -> np.ndarray:
    """Dense matrix represented by the generator, in O(r n^2).

    Forms D = G B^H and takes cumulative sums along every diagonal; this is
    the unique solution of the displacement equation.
    """
    if gen.r == 0:
        return np.zeros((gen.n, gen.n), dtype=np.complex128)
    D = gen.G @ gen.B.conj().T
    return diag_cumsum_core(D)


def extract_band(gen: Generator, lower: int, upper: int) -> dict[int, np.ndarray]:
    """Diagonals -lower..upper of the represented matrix, keyed by offset.

    Only the requested diagonals of G B^H are formed, so the cost is
    O((lower+upper+1) r n); the main diagonal alone costs O(r n).
    """
    n = gen.n
    if not (0 <= lower <= n - 1 and 0 <= upper <= n - 1):
        raise ValueError(f"band ({lower},{upper}) out of range for n={n}")
    G, B = gen.G, gen.B
    out = {}
    for off in range(-lower, upper + 1):
        if gen.r == 0:
            out[off] = np.zeros(n - abs(off), dtype=np.complex128)
            continue
        if off <= 0:
            d = np.einsum("ij,ij->i", G[-off:], np.conj(B[: n + off]))
        else:
            d = np.einsum("ij,ij->i", G[: n - off], np.conj(B[off:]))
        out[off] = np.cumsum(d)
    return out


def _lower_product(fc, X, m, n):
    """L(c) @ X given fc = fft of the column c at length m."""
    FX = np.fft.fft(X, n=m, axis=0)
    return np.fft.ifft(fc[:, None] * FX, axis=0)[:n]


def tl_matvec(gen: Generator, x, adjoint: bool = False) -> np.ndarray:
    """Product of the represented matrix (or its adjoint) with x.

    Expands the reconstruction into r products of lower and upper triangular
    Toeplitz factors, each evaluated by FFT: O(r n log n) per column.
    """
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    X = x[:, None] if single else x
    if X.shape[0] != gen.n:
        raise ValueError(f"dimension mismatch: n={gen.n}, x has {X.shape[0]} rows")
    n = gen.n
    if gen.r == 0:
        y = np.zeros_like(X)
        return y[:, 0] if single else y
    m = fft_length(n)
    # A = sum_j L(g_j) U(conj b_j); the adjoint swaps the roles of G and B.
    FG = gen.column_ffts("B" if adjoint else "G")
    FcB = gen.column_ffts("cG" if adjoint else "cB")
    # U(c) x = reverse(L(c) reverse(x))
    FXr = np.fft.fft(X[::-1], n=m, axis=0)
    Y = np.zeros((n, X.shape[1]), dtype=np.complex128)
    for j in range(gen.r):
        U = np.fft.ifft(FcB[:, j][:, None] * FXr, axis=0)[:n][::-1]
        Y += _lower_product(FG[:, j], U, m, n)
    return Y[:, 0] if single else Y


def compress(gen: Generator, tol: float | None = None,
             max_rank: int | None = None) -> tuple[Generator, CompressionReport]:
    """SVD truncation of the generator through thin QR factors.

    Singular values below ``tol * sigma_1`` (default tol = n*eps, the scale
    at which truncation is invisible next to roundoff) are dropped, subject
    to ``max_rank``.  The discarded singular values yield certified bounds
    ``n*sigma_{r+1}`` (spectral) and ``n*sqrt(sum sigma_j^2)`` (Frobenius)
    on the reconstruction error.  Cost O(r^2 n + r^3).
    """
    n = gen.n
    if tol is None and max_rank is None:
        tol = n * EPS
    if tol is None:
        tol = 0.0
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if gen.r == 0:
        empty = np.zeros(0)
        return gen, CompressionReport(0, empty, 0.0, 0.0)
    QG, RG = np.linalg.qr(gen.G, mode="reduced")
    QB, RB = np.linalg.qr(gen.B, mode="reduced")
    S = RG @ RB.conj().T
    U, sig, Vh = np.linalg.svd(S)
    if sig.size == 0 or sig[0] == 0.0:
        keep = 0
    else:
        keep = int(np.sum(sig > tol * sig[0]))
    if max_rank is not None:
        keep = min(keep, max_rank)
    discarded = sig[keep:]
    bound2 = float(n * discarded[0]) if discarded.size else 0.0
    boundf = float(n * np.sqrt(np.sum(discarded ** 2))) if discarded.size else 0.0
    root = np.sqrt(sig[:keep])
    Gt = QG @ (U[:, :keep] * root)
    Bt = QB @ (Vh[:keep].conj().T * root)
    return Generator(Gt, Bt), CompressionReport(keep, discarded, bound2, boundf)


def displacement_of_dense(A: np.ndarray) -> np.ndarray:
    """A - Z A Z^H for a dense matrix (test and oracle utility)."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    D = A.copy()
    D[1:, 1:] -= A[:-1, :-1]
    return D


def generator_from_dense(A: np.ndarray, tol: float | None = None,
                         max_rank: int | None = None) -> Generator:
    """Minimal generator of a dense matrix via SVD of its displacement."""
    D = displacement_of_dense(A)
    U, sig, Vh = np.linalg.svd(D)
    if tol is None:
        tol = D.shape[0] * EPS
    keep = int(np.sum(sig > tol * sig[0])) if sig.size and sig[0] > 0 else 0
    if max_rank is not None:
        keep = min(keep, max_rank)
    root = np.sqrt(sig[:keep])
    return Generator(U[:, :keep] * root, Vh[:keep].conj().T * root)


def generator_singular_values(gen: Generator) -> np.ndarray:
    """Singular values of G B^H without forming it densely."""
    if gen.r == 0:
        return np.zeros(0)
    RG = np.linalg.qr(gen.G, mode="r")
    RB = np.linalg.qr(gen.B, mode="r")
    return scipy.linalg.svdvals(RG @ RB.conj().T)


def numerical_rank(gen: Generator, rel_threshold: float = 1e-10) -> int:
    """Number of displacement singular values above rel_threshold * sigma_1."""
    sig = generator_singular_values(gen)
    if sig.size == 0 or sig[0] == 0.0:
        return 0
    return int(np.sum(sig > rel_threshold * sig[0]))


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"TLGN"


def _matrix_pairs(M: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _matrix_unpairs(rows, n, r) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (n, r, 2):
        raise ValueError(f"expected shape {(n, r, 2)}, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def generator_to_dict(gen: Generator) -> dict:
    return {"n": gen.n, "r": gen.r,
            "G": _matrix_pairs(gen.G), "B": _matrix_pairs(gen.B)}


def generator_from_dict(d: dict) -> Generator:
    n, r = int(d["n"]), int(d["r"])
    return Generator(_matrix_unpairs(d["G"], n, r), _matrix_unpairs(d["B"], n, r))


def save_generator_json(gen: Generator, path) -> None:
    with open(path, "w") as f:
        json.dump(generator_to_dict(gen), f)


def load_generator_json(path) -> Generator:
    with open(path) as f:
        return generator_from_dict(json.load(f))


def save_generator_binary(gen: Generator, path) -> None:
    """16-byte header (magic, version, n, r) then G and B column-major."""
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIII", _MAGIC, 1, gen.n, gen.r))
        f.write(np.asfortranarray(gen.G).tobytes(order="F"))
        f.write(np.asfortranarray(gen.B).tobytes(order="F"))


def load_generator_binary(path) -> Generator:
    with open(path, "rb") as f:
        magic, version, n, r = struct.unpack("<4sIII", f.read(16))
        if magic != _MAGIC:
            raise ValueError(f"not a generator file (magic {magic!r})")
        if version != 1:
            raise ValueError(f"unsupported version {version}")
        count = n * r
        G = np.frombuffer(f.read(16 * count), dtype=np.complex128).reshape((n, r), order="F")
        B = np.frombuffer(f.read(16 * count), dtype=np.complex128).reshape((n, r), order="F")
    return Generator(G, B)
