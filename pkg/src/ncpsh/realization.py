"""GNS-style realization of a plurisubharmonic series and the convex form.

From the two coefficient Gram matrices the construction produces analytic
data (g, v+, v-, T) with

    f(Z) = Re g(Z) + [v+(Z); v-(Z)]* [[1, -T(Z)], [-T(Z)*, 1]]^-1 [v+(Z); v-(Z)],

T contractive near 0 and T, v+, v- vanishing at 0.  Operators are obtained
by orthonormalizing the Gram spans: eigendirections below the null cutoff
are dropped, and word actions leaving the truncation are dropped from the
compressed operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import MatrixTuple, eval_series, op_norm, word_value
from .middle import MiddleMatrix, build_split_gram
from .words import EMPTY_WORD, NCSeries, Word, word_involution, word_to_str


class GramNotPSD(ValueError):
    pass


class TNotContractive(ValueError):
    def __init__(self, norm):
        super().__init__(f"||T(Z)|| = {norm:.6f} >= 1")
        self.norm = norm


class OutOfTruncation(ValueError):
    pass


class InconsistentAction(ValueError):
    """A word action leaves the truncation where its inner products matter."""


class ResolventSingular(ValueError):
    pass


def _split_blocks(w: Word):
    """Maximal runs of constant star flag, as (subword, starred) pairs."""
    blocks = []
    for i, s in w.letters:
        if blocks and blocks[-1][1] == s:
            blocks[-1][0].append((i, s))
        else:
            blocks.append(([(i, s)], s))
    return [(Word(ls), s) for ls, s in blocks]


@dataclass
class Realization:
    """Realization data over Gram coordinates, centered at the origin.

    Q_plus / Q_minus map an analytic / coanalytic word to the compressed
    injection matrix; T maps an analytic word to the compressed action
    from the minus space into the plus space.
    """

    d: int
    k: int
    N: int
    g: NCSeries
    gram_plus: MiddleMatrix
    gram_minus: MiddleMatrix
    Q_plus: dict
    Q_minus: dict
    T: dict
    rank_plus: int
    rank_minus: int
    null_cutoff: float
    diagnostics: dict = field(default_factory=dict)
    center = None  # origin; recentered realizations live in transforms

    def component_values(self, Y: MatrixTuple):
        """(g, v+, v-, T) evaluated at a displacement Y from the center."""
        n = Y.n
        gval = eval_series(self.g, Y)
        vp = _eval_operator_series(self.Q_plus, Y, self.rank_plus, self.k)
        vm = _eval_operator_series(self.Q_minus, Y, self.rank_minus, self.k)
        tv = _eval_operator_series(self.T, Y, self.rank_plus, self.rank_minus)
        return gval, vp, vm, tv

    def growth_diagnostic(self) -> float:
        """max over stored alpha of ||T_alpha||^(1/|alpha|)."""
        vals = [op_norm(m) ** (1.0 / len(a)) for a, m in self.T.items() if op_norm(m) > 0]
        return max(vals, default=0.0)


def _eval_operator_series(table: dict, Z: MatrixTuple, rows: int, cols: int) -> np.ndarray:
    out = np.zeros((Z.n * rows, Z.n * cols), dtype=complex)
    for w, c in table.items():
        out += np.kron(word_value(w, Z), c)
    return out


def _eval_operator_series_deriv(table: dict, Z: MatrixTuple, H: MatrixTuple,
                                rows: int, cols: int) -> np.ndarray:
    """Directional derivative: one letter of each word replaced by H (stars kept)."""
    out = np.zeros((Z.n * rows, Z.n * cols), dtype=complex)
    for w, c in table.items():
        for p in range(len(w)):
            acc = np.eye(Z.n, dtype=complex)
            for q, (i, starred) in enumerate(w.letters):
                m = (H if q == p else Z).mats[i - 1]
                acc = acc @ (m.conj().T if starred else m)
            out += np.kron(acc, c)
    return out


def _orthonormalize(gram: np.ndarray, rel_cutoff: float):
    vals, vecs = np.linalg.eigh(gram)
    top = float(vals[-1]) if vals.size else 0.0
    cutoff = rel_cutoff * max(top, 0.0)
    keep = vals > cutoff
    vr = vals[keep]
    Vr = vecs[:, keep]
    phi = (np.sqrt(vr)[:, None]) * Vr.conj().T          # coords of index vectors
    lift = Vr / np.sqrt(vr)[None, :] if vr.size else Vr  # right inverse of phi
    return phi, lift, int(vr.size)


def build_realization(s: NCSeries, N: int, null_cutoff: float = 1e-10,
                      tol: float = 1e-8, index_perm_seed=None) -> Realization:
    """GNS construction from the coefficient Gram matrices at truncation N.

    Preconditions: s self-adjoint with c_0 Hermitian, Gram matrices PSD
    within tol (run the certificate first).  index_perm_seed reorders the
    Gram index before orthonormalization; any seed yields an equivalent
    realization, which the uniqueness tests exercise.
    """
    if 2 * N > s.maxdeg:
        raise OutOfTruncation(f"need coefficients to degree {2 * N}, have {s.maxdeg}")
    c0 = s.coeff(EMPTY_WORD)
    if op_norm(c0 - c0.conj().T) > 1e-8 * max(op_norm(c0), 1.0):
        raise ValueError("constant coefficient must be self-adjoint")

    grams = {}
    for kind in ("plus", "minus"):
        mm = build_split_gram(s, kind, N)
        if index_perm_seed is not None:
            rng = np.random.default_rng([index_perm_seed, kind == "minus"])
            perm = rng.permutation(len(mm.words))
            words = [mm.words[p] for p in perm]
            blocks = np.arange(len(mm.words) * s.k).reshape(len(mm.words), s.k)[perm].ravel()
            mm = MiddleMatrix(kind, N, words, s.k, mm.gram[np.ix_(blocks, blocks)], mm.herm_defect)
        scale = max(op_norm(mm.gram), 1e-300)
        min_eig = float(np.linalg.eigvalsh(mm.gram)[0])
        if min_eig < -tol * scale:
            raise GramNotPSD(f"{kind} Gram has min eigenvalue {min_eig:.3e}")
        grams[kind] = mm

    gp, gm = grams["plus"], grams["minus"]
    k = s.k
    phi_p, lift_p, rp = _orthonormalize(gp.gram, null_cutoff)
    phi_m, lift_m, rm = _orthonormalize(gm.gram, null_cutoff)
    pos_p = {w: i for i, w in enumerate(gp.words)}
    pos_m = {w: i for i, w in enumerate(gm.words)}

    def embed(phi, pos, w):
        J = np.zeros((phi.shape[1], k), dtype=complex)
        J[pos[w] * k:(pos[w] + 1) * k, :] = np.eye(k)
        return phi @ J

    Q_plus = {}
    Q_minus = {}
    for w in all_analytic_words(s.d, N):
        Q_plus[w] = embed(phi_p, pos_p, w)
        Q_minus[word_involution(w)] = embed(phi_m, pos_m, word_involution(w))

    # The action alpha: e_beta -> e_{alpha beta} is compressed through the
    # available inner products c_{gamma* alpha beta} rather than the raw
    # index-level shift: inner products against Gram null vectors then
    # vanish exactly even where the shifted word leaves the index window.
    # Entries needing coefficients beyond the series truncation are dropped.
    T = {}
    for alpha in all_analytic_words(s.d, N):
        K = np.zeros((len(gp.words) * k, len(gm.words) * k), dtype=complex)
        for j, beta in enumerate(gm.words):
            target = alpha * beta
            for i, gamma in enumerate(gp.words):
                if len(gamma) + len(target) <= s.maxdeg:
                    K[i * k:(i + 1) * k, j * k:(j + 1) * k] = \
                        s.coeff(word_involution(gamma) * target)
        if np.any(K):
            mat = lift_p.conj().T @ K @ lift_m
            if op_norm(mat) > 1e-14 * max(op_norm(K), 1.0):
                T[alpha] = mat

    g = NCSeries(s.d, s.shape, s.maxdeg)
    g.set_coeff(EMPTY_WORD, c0)
    for w, c in s.coeffs.items():
        if len(w) > 0 and w.is_analytic():
            g.set_coeff(w, 2 * c)

    r = Realization(s.d, k, N, g, gp, gm, Q_plus, Q_minus, T, rp, rm, null_cutoff)
    r.diagnostics = {
        "rank_plus": rp,
        "rank_minus": rm,
        "growth": r.growth_diagnostic(),
        "max_T_norm": max((op_norm(m) for m in T.values()), default=0.0),
    }
    return r


def all_analytic_words(d: int, max_len: int):
    from .words import all_words
    return all_words(d, max_len, min_len=1, alphabet="analytic")


# -- evaluation ------------------------------------------------------------------


def _resolvent_blocks(vp, vm, tv):
    """Stack V = [v+; v-] and B = [[1, -T], [-T*, 1]]."""
    p, q = vp.shape[0], vm.shape[0]
    V = np.vstack([vp, vm])
    B = np.eye(p + q, dtype=complex)
    B[:p, p:] = -tv
    B[p:, :p] = -tv.conj().T
    return V, B


def eval_realization(r, Z: MatrixTuple) -> np.ndarray:
    """Re g(Z) + V(Z)* B(Z)^-1 V(Z); requires ||T(Z)|| < 1."""
    Y = Z if r.center is None else Z - r.center
    gval, vp, vm, tv = r.component_values(Y)
    tnorm = op_norm(tv)
    if tnorm >= 1:
        raise TNotContractive(tnorm)
    V, B = _resolvent_blocks(vp, vm, tv)
    quad = V.conj().T @ np.linalg.solve(B, V)
    return 0.5 * (gval + gval.conj().T) + quad


def reconstruct_coefficient(r: Realization, beta: Word) -> np.ndarray:
    """The realization's coefficient at the word beta.

    Pure analytic and coanalytic words come from the g part; mixed words
    come from the alternating operator chain through the Gram data.
    """
    if len(beta) == 0:
        c0 = r.g.coeff(EMPTY_WORD)
        return 0.5 * (c0 + c0.conj().T)
    if beta.is_analytic():
        if len(beta) > r.g.maxdeg:
            raise OutOfTruncation(f"word {word_to_str(beta)} beyond g truncation")
        return 0.5 * r.g.coeff(beta)
    if beta.is_coanalytic():
        if len(beta) > r.g.maxdeg:
            raise OutOfTruncation(f"word {word_to_str(beta)} beyond g truncation")
        return 0.5 * r.g.coeff(word_involution(beta)).conj().T
    return resolvent_coefficient(r, beta)


def resolvent_coefficient(r: Realization, beta: Word) -> np.ndarray:
    """Coefficient contributed by the resolvent part: for a mixed word
    split into alternating blocks a_0 a_1 ... a_n, the chain
    Q*_{a_0*} T_{a_1} ... T_{a_{n-1}} Q_{a_n}.
    """
    blocks = _split_blocks(beta)
    if len(blocks) < 2:
        return np.zeros((r.k, r.k), dtype=complex)
    a0 = blocks[0][0]
    tail_len = len(beta) - len(a0)
    if len(a0) > r.N or tail_len > r.N:
        raise OutOfTruncation(
            f"word {word_to_str(beta)} needs blocks beyond truncation N={r.N}")

    def t_apply(alpha, starred, M):
        if starred:  # coanalytic block: apply T_{alpha}* = T_{alpha_unstarred}^H
            key = word_involution(alpha)
            mat = r.T.get(key)
            return (mat.conj().T @ M) if mat is not None else None
        mat = r.T.get(alpha)
        return (mat @ M) if mat is not None else None

    last, last_star = blocks[-1]
    M = r.Q_minus[last] if last_star else r.Q_plus[last]
    for alpha, starred in reversed(blocks[1:-1]):
        M = t_apply(alpha, starred, M)
        if M is None:
            return np.zeros((r.k, r.k), dtype=complex)
    lead_star = blocks[0][1]
    a0_inv = word_involution(a0)
    Q0 = r.Q_plus[a0_inv] if lead_star else r.Q_minus[a0_inv]
    return Q0.conj().T @ M


def realization_hessian(r, Z: MatrixTuple, H: MatrixTuple) -> np.ndarray:
    """Complex Hessian of the realization at (Z, H) via the resolvent formula.

    Positive semidefinite wherever T is contractive; matches the stencil
    Hessian of eval_realization.
    """
    Y = Z if r.center is None else Z - r.center
    _, vp, vm, tv = r.component_values(Y)
    tnorm = op_norm(tv)
    if tnorm >= 1:
        raise TNotContractive(tnorm)
    n = Y.n
    dvp = _eval_operator_series_deriv(r.Q_plus, Y, H, r.rank_plus, r.k)
    dvm = _eval_operator_series_deriv(r.Q_minus, Y, H, r.rank_minus, r.k)
    dtv = _eval_operator_series_deriv(r.T, Y, H, r.rank_plus, r.rank_minus)

    V, B = _resolvent_blocks(vp, vm, tv)
    R = np.linalg.inv(B)
    RV = R @ V
    p = vp.shape[0]
    top, bottom = RV[:p, :], RV[p:, :]

    wplus = np.vstack([dvp + dtv @ bottom, np.zeros_like(bottom)])
    wminus = np.vstack([np.zeros_like(top), dvm + dtv.conj().T @ top])
    return wplus.conj().T @ R @ wplus + wminus.conj().T @ R @ wminus


# -- the convex (butterfly) form ----------------------------------------------------


class LinearMap:
    """Real-linear map of a matrix tuple with matrix coefficients:
    X -> sum kron(X_i, A_i) + kron(X_i*, B_i).
    """

    def __init__(self, analytic_coeffs, conj_coeffs=None):
        self.A = [np.atleast_2d(np.asarray(a, dtype=complex)) for a in analytic_coeffs]
        if conj_coeffs is None:
            conj_coeffs = [np.zeros_like(a) for a in self.A]
        self.B = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in conj_coeffs]
        if len(self.A) != len(self.B):
            raise ValueError("coefficient lists must have equal length")
        self.shape = self.A[0].shape

    @property
    def d(self):
        return len(self.A)

    def __call__(self, X: MatrixTuple) -> np.ndarray:
        out = np.zeros((X.n * self.shape[0], X.n * self.shape[1]), dtype=complex)
        for m, a, b in zip(X.mats, self.A, self.B):
            out += np.kron(m, a) + np.kron(m.conj().T, b)
        return out

    @staticmethod
    def zero(d, shape):
        z = np.zeros(shape, dtype=complex)
        return LinearMap([z] * d, [z] * d)


def butterfly_eval(a0, L: LinearMap, Lam: LinearMap, Gam: LinearMap,
                   X: MatrixTuple) -> np.ndarray:
    """a0 + L(X) + Lam(X)* (I - Gam(X))^-1 Lam(X), requiring I - Gam(X) > 0."""
    a0 = np.atleast_2d(np.asarray(a0, dtype=complex))
    G = Gam(X)
    E = np.eye(G.shape[0]) - G
    Eh = 0.5 * (E + E.conj().T)
    if float(np.linalg.eigvalsh(Eh)[0]) <= 0:
        raise ResolventSingular("I - Gamma(X) is not positive definite")
    lam = Lam(X)
    return np.kron(np.eye(X.n), a0) + L(X) + lam.conj().T @ np.linalg.solve(E, lam)


def butterfly_second_derivative(a0, L: LinearMap, Lam: LinearMap, Gam: LinearMap,
                                X: MatrixTuple, H: MatrixTuple) -> np.ndarray:
    """Second derivative along X + tH: 2 v(X,H)* R(X) v(X,H) with
    R = (I - Gamma(X))^-1 and v = Gamma(H) R Lambda(X) + Lambda(H).
    """
    G = Gam(X)
    E = np.eye(G.shape[0]) - G
    Eh = 0.5 * (E + E.conj().T)
    if float(np.linalg.eigvalsh(Eh)[0]) <= 0:
        raise ResolventSingular("I - Gamma(X) is not positive definite")
    R = np.linalg.inv(E)
    v = Gam(H) @ R @ Lam(X) + Lam(H)
    return 2 * v.conj().T @ R @ v
