"""Dense complex matrix kernel: tuple evaluation, PSD checks, exp/log.

Tensor layout convention, fixed once: a word acts on the left Kronecker
factor and the coefficient on the right, eval = sum of kron(X^w, c_w).
With this layout evaluation commutes with direct sums and unitary
conjugation without any shuffle permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import exprs
from .words import EMPTY_WORD, NCSeries, Word


class SingularInverse(ValueError):
    pass


class LogBranchViolation(ValueError):
    """Spectrum touches the closed negative real ray."""


class NotHermitian(ValueError):
    pass


class MatrixTuple:
    """A point of the matrix universe: d complex matrices of common size n."""

    def __init__(self, mats):
        self.mats = [np.asarray(m, dtype=complex) for m in mats]
        if not self.mats:
            raise ValueError("empty tuple")
        n = self.mats[0].shape[0]
        for m in self.mats:
            if m.shape != (n, n):
                raise ValueError("tuple entries must be square of common size")
        self.n = n
        self.d = len(self.mats)

    def __getitem__(self, i):
        return self.mats[i]

    def __repr__(self):
        return f"MatrixTuple(n={self.n}, d={self.d})"

    @staticmethod
    def zero(d, n):
        return MatrixTuple([np.zeros((n, n), dtype=complex) for _ in range(d)])

    def __add__(self, other):
        self._check(other)
        return MatrixTuple([a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other):
        self._check(other)
        return MatrixTuple([a - b for a, b in zip(self.mats, other.mats)])

    def scaled(self, z):
        return MatrixTuple([z * m for m in self.mats])

    def shifted(self, other, z):
        """self + z * other for a complex scalar z."""
        self._check(other)
        return MatrixTuple([a + z * b for a, b in zip(self.mats, other.mats)])

    def norm(self):
        return max(op_norm(m) for m in self.mats)

    def _check(self, other):
        if self.n != other.n or self.d != other.d:
            raise ValueError("matrix tuple size mismatch")

    def allclose(self, other, tol=1e-12):
        return self.n == other.n and self.d == other.d and all(
            np.allclose(a, b, atol=tol) for a, b in zip(self.mats, other.mats))


def direct_sum(*blocks):
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    return scipy.linalg.block_diag(*blocks)


def tuple_direct_sum(X: MatrixTuple, Y: MatrixTuple) -> MatrixTuple:
    if X.d != Y.d:
        raise ValueError("tuple length mismatch in direct sum")
    return MatrixTuple([direct_sum(a, b) for a, b in zip(X.mats, Y.mats)])


def unitary_conjugate(X: MatrixTuple, U) -> MatrixTuple:
    U = np.asarray(U, dtype=complex)
    return MatrixTuple([U.conj().T @ m @ U for m in X.mats])


def op_norm(M) -> float:
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


# -- evaluation -------------------------------------------------------------


def word_value(w: Word, X: MatrixTuple) -> np.ndarray:
    """The word product X^w; the empty word gives the identity."""
    out = np.eye(X.n, dtype=complex)
    for i, starred in w.letters:
        m = X.mats[i - 1]
        out = out @ (m.conj().T if starred else m)
    return out


def eval_series(s: NCSeries, X: MatrixTuple) -> np.ndarray:
    """Sum of kron(X^w, c_w) over stored words; size (n*kout, n*kin)."""
    if s.d != X.d:
        raise ValueError(f"series in {s.d} variables evaluated at a {X.d}-tuple")
    out = np.zeros((X.n * s.shape[0], X.n * s.shape[1]), dtype=complex)
    for w, c in s.coeffs.items():
        out += np.kron(word_value(w, X), c)
    return out


def eval_expr(e: exprs.NCExpr, X: MatrixTuple) -> np.ndarray:
    """Evaluate an expression tree at a matrix tuple."""
    k = exprs._infer_k(e)
    return _eval_expr(e, X, k)


def _eval_expr(e, X, k):
    n = X.n
    if isinstance(e, exprs.Const):
        if isinstance(e.value, np.ndarray):
            return np.kron(np.eye(n), e.value)
        return e.value * np.eye(n * k, dtype=complex)
    if isinstance(e, exprs.Var):
        if e.index > X.d:
            raise ValueError(f"variable x{e.index} beyond tuple length {X.d}")
        m = X.mats[e.index - 1]
        return np.kron(m, np.eye(k)) if k > 1 else m.copy()
    if isinstance(e, exprs.Add):
        return _eval_expr(e.left, X, k) + _eval_expr(e.right, X, k)
    if isinstance(e, exprs.Sub):
        return _eval_expr(e.left, X, k) - _eval_expr(e.right, X, k)
    if isinstance(e, exprs.Mul):
        return _eval_expr(e.left, X, k) @ _eval_expr(e.right, X, k)
    if isinstance(e, exprs.ScalarMul):
        return e.scalar * _eval_expr(e.child, X, k)
    if isinstance(e, exprs.Pow):
        return np.linalg.matrix_power(_eval_expr(e.child, X, k), e.exponent)
    if isinstance(e, exprs.Adjoint):
        return _eval_expr(e.child, X, k).conj().T
    if isinstance(e, exprs.RealPart):
        m = _eval_expr(e.child, X, k)
        return 0.5 * (m + m.conj().T)
    if isinstance(e, exprs.Inv):
        m = _eval_expr(e.child, X, k)
        try:
            inv = np.linalg.inv(m)
        except np.linalg.LinAlgError as err:
            raise SingularInverse(str(err)) from None
        if not np.all(np.isfinite(inv)) or op_norm(m @ inv - np.eye(m.shape[0])) > 1e-8:
            raise SingularInverse("inverse did not verify; matrix is singular or near-singular")
        return inv
    if isinstance(e, exprs.Exp):
        return matrix_exp(_eval_expr(e.child, X, k))
    if isinstance(e, exprs.Log):
        return principal_log(_eval_expr(e.child, X, k))
    raise TypeError(f"cannot evaluate {type(e).__name__}")


# -- spectral helpers --------------------------------------------------------


@dataclass
class PsdReport:
    psd: bool
    min_eig: float
    witness: np.ndarray | None = None
    herm_defect: float = 0.0

    @property
    def verdict(self) -> str:
        return "PSD" if self.psd else "NotPSD"


def psd_check(M, tol: float = 1e-9) -> PsdReport:
    """Check positive semidefiniteness of a Hermitian matrix.

    The matrix is symmetrized first; asymmetry beyond tol * ||M|| raises
    NotHermitian.  NotPSD reports carry a unit witness vector v with
    <Mv, v> equal to the minimum eigenvalue.
    """
    M = np.asarray(M, dtype=complex)
    H = 0.5 * (M + M.conj().T)
    scale = op_norm(H)
    defect = op_norm(M - H)
    if defect > tol * max(scale, 1e-300):
        raise NotHermitian(f"asymmetry {defect:.3e} exceeds {tol:.1e} * ||M||")
    vals, vecs = np.linalg.eigh(H)
    min_eig = float(vals[0])
    if min_eig >= -tol * scale:
        return PsdReport(True, min_eig, None, defect)
    return PsdReport(False, min_eig, vecs[:, 0].copy(), defect)


def matrix_exp(M) -> np.ndarray:
    return scipy.linalg.expm(np.asarray(M, dtype=complex))


def principal_log(M, branch_tol: float = 1e-9) -> np.ndarray:
    """Principal matrix logarithm; the spectrum must avoid (-inf, 0]."""
    M = np.asarray(M, dtype=complex)
    eigs = np.linalg.eigvals(M)
    scale = max(float(np.max(np.abs(eigs))), 1.0)
    on_cut = (eigs.real <= branch_tol * scale) & (np.abs(eigs.imag) <= branch_tol * scale)
    if np.any(on_cut):
        bad = eigs[on_cut][0]
        raise LogBranchViolation(
            f"eigenvalue {bad:.6g} lies on the closed negative ray")
    L = scipy.linalg.logm(M)
    if op_norm(matrix_exp(L) - M) > 1e-8 * max(op_norm(M), 1.0):
        raise LogBranchViolation("log did not verify against exp round-trip")
    return L


def hermitian_sqrt(M, tol: float = 1e-10) -> np.ndarray:
    """PSD square root of a Hermitian positive semidefinite matrix."""
    M = np.asarray(M, dtype=complex)
    H = 0.5 * (M + M.conj().T)
    if op_norm(M - H) > tol * max(op_norm(H), 1.0):
        raise NotHermitian("hermitian_sqrt needs a Hermitian input")
    vals, vecs = np.linalg.eigh(H)
    scale = max(float(vals[-1]), 0.0)
    if vals[0] < -tol * max(scale, 1.0):
        raise ValueError(f"matrix not PSD (min eig {vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


# -- seeded generators ---------------------------------------------------------


def ginibre(rng, n: int, scale: float = 1.0) -> np.ndarray:
    """n x n matrix of i.i.d. complex Gaussians scaled by 1/sqrt(n)."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * z / np.sqrt(2.0 * n)


def random_tuple(rng, d: int, n: int, radius: float = 1.0) -> MatrixTuple:
    """Ginibre-normalized tuple; entries have operator norm about radius."""
    return MatrixTuple([ginibre(rng, n, radius) for _ in range(d)])


def random_tuple_bounded(rng, d: int, n: int, radius: float = 1.0) -> MatrixTuple:
    """Like random_tuple but each entry rescaled to operator norm <= radius."""
    mats = []
    for _ in range(d):
        g = ginibre(rng, n)
        nrm = op_norm(g)
        if nrm > 0:
            g *= radius * rng.uniform(0.3, 1.0) / nrm
        mats.append(g)
    return MatrixTuple(mats)


def random_contraction(rng, n: int, bound: float = 0.9) -> np.ndarray:
    g = ginibre(rng, n)
    nrm = op_norm(g)
    if nrm == 0:
        return g
    return g * (bound * rng.uniform(0.2, 1.0) / nrm)


def random_positive_gap(rng, n: int, margin: float = 0.05) -> np.ndarray:
    """Random A with 1 - A - A* positive definite (min eigenvalue >= margin)."""
    g = ginibre(rng, n)
    s = float(np.linalg.eigvalsh(g + g.conj().T)[-1])
    if s > 0:
        g *= (1.0 - margin) / s * rng.uniform(0.3, 1.0)
    return g


def random_unitary(rng, n: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))
