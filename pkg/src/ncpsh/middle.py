"""Gram matrices of series coefficients and the positivity certificate.

For a self-adjoint series the matrix indexed by (word, basis vector) pairs
with entries G[(u,a),(v,b)] = c_{u* v}[a,b] is Hermitian.  Restricting the
index words to analytic words of length 1..N gives the certificate matrix
of kind "plus", coanalytic words give kind "minus".  Positivity of both at
every truncation is necessary for plurisubharmonicity near 0, and a failed
check decodes into a concrete point and direction where the complex
Hessian is not positive semidefinite.

Certification is one-sided and truncation-relative: a PSD verdict means
"certified up to degree N", never a global claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import MatrixTuple, PsdReport, op_norm, psd_check
from .words import NCSeries, Word, all_words, word_involution, word_to_str


class TruncationTooDeep(ValueError):
    """Needed coefficient words exceed the series truncation degree."""


@dataclass
class MiddleMatrix:
    kind: str                       # "plus" | "minus"
    N: int
    words: list                     # index words, graded-lex order
    k: int
    gram: np.ndarray                # Hermitian, size len(words) * k
    herm_defect: float = 0.0

    def index(self):
        """(word, basis) pairs in row order."""
        return [(w, a) for w in self.words for a in range(self.k)]


def _gram_from_words(s: NCSeries, words, N: int) -> tuple[np.ndarray, float]:
    if 2 * N > s.maxdeg:
        raise TruncationTooDeep(
            f"middle matrix at N={N} needs coefficients up to degree {2 * N}, "
            f"series truncated at {s.maxdeg}")
    k = s.k
    m = len(words)
    G = np.zeros((m * k, m * k), dtype=complex)
    for i, u in enumerate(words):
        ustar = word_involution(u)
        for j, v in enumerate(words):
            G[i * k:(i + 1) * k, j * k:(j + 1) * k] = s.coeff(ustar * v)
    H = 0.5 * (G + G.conj().T)
    return H, op_norm(G - H)


def build_middle(s: NCSeries, kind: str, N: int) -> MiddleMatrix:
    """Certificate Gram matrix over analytic (plus) or coanalytic (minus) words."""
    if N < 1:
        raise ValueError("N must be at least 1")
    alphabet = {"plus": "analytic", "minus": "coanalytic"}[kind]
    words = all_words(s.d, N, min_len=1, alphabet=alphabet)
    gram, defect = _gram_from_words(s, words, N)
    return MiddleMatrix(kind, N, words, s.k, gram, defect)


def build_split_gram(s: NCSeries, kind: str, N: int) -> MiddleMatrix:
    """Gram over all words of length 1..N whose first letter is unstarred
    (plus) or starred (minus).  This is the full span the realization is
    built on; the certificate matrix is its leading principal block.
    """
    starred_first = kind == "minus"
    words = [w for w in all_words(s.d, N, min_len=1)
             if w.letters[0][1] == starred_first]
    gram, defect = _gram_from_words(s, words, N)
    return MiddleMatrix(kind, N, words, s.k, gram, defect)


# -- certificate ---------------------------------------------------------------


@dataclass
class Witness:
    kind: str
    index: list                    # (word, basis) pairs
    vector: np.ndarray
    min_eig: float

    def as_dict(self):
        return {
            "kind": self.kind,
            "words": [[word_to_str(w), a] for w, a in self.index],
            "vector": [[float(z.real), float(z.imag)] for z in self.vector],
            "min_eig": self.min_eig,
        }


@dataclass
class CertificateReport:
    N: int
    cplus: PsdReport
    cminus: PsdReport
    witness: Witness | None = None
    tol: float = 1e-9

    @property
    def certified(self) -> bool:
        return self.cplus.psd and self.cminus.psd

    def as_dict(self):
        return {
            "N": self.N,
            "cplus": {"min_eig": self.cplus.min_eig, "psd": self.cplus.psd},
            "cminus": {"min_eig": self.cminus.min_eig, "psd": self.cminus.psd},
            "witness": self.witness.as_dict() if self.witness else None,
            "tol": self.tol,
        }


def psh_certificate(s: NCSeries, N: int, tol: float = 1e-9) -> CertificateReport:
    """PSD verdicts for both certificate matrices at truncation N.

    A NotPSD verdict ships the eigen-witness decoded as the coefficient
    vector of an analytic (or coanalytic) polynomial over the index words.
    """
    mplus = build_middle(s, "plus", N)
    mminus = build_middle(s, "minus", N)
    rplus = psd_check(mplus.gram, tol)
    rminus = psd_check(mminus.gram, tol)
    witness = None
    for mm, rep in ((mplus, rplus), (mminus, rminus)):
        if not rep.psd and (witness is None or rep.min_eig < witness.min_eig):
            witness = Witness(mm.kind, mm.index(), rep.witness, rep.min_eig)
    return CertificateReport(N, rplus, rminus, witness, tol)


# -- witness decoding -----------------------------------------------------------


def witness_point(s_d: int, s_k: int, N: int, witness: Witness, t: float = 0.25):
    """Materialize a certificate witness as a concrete (Z, H) pair.

    Builds truncated shift matrices on a word-indexed space (one copy per
    coefficient basis vector), a block direction encoding the witness
    polynomial, and a test vector tau.  The quadratic form of the complex
    Hessian at (Z, H) against tau reproduces the witness quadratic form
    xi* G xi exactly whenever every mixed word of the series has a single
    analytic/coanalytic junction (hereditary and antihereditary shapes);
    in general it is still an honest Hessian sample near 0.

    Returns (Z, H, tau).
    """
    kind = witness.kind
    alphabet = "analytic" if kind == "plus" else "coanalytic"
    basis_words = all_words(s_d, N - 1, min_len=0, alphabet=alphabet)
    pos = {}
    for g in basis_words:
        for scopy in range(s_k):
            pos[(g, scopy)] = len(pos)
    n0 = len(pos)

    xi = {}
    for (w, a), val in zip(witness.index, witness.vector):
        xi[(w, a)] = complex(val)

    zmats = []
    hmats = []
    for i in range(1, s_d + 1):
        S = np.zeros((n0, n0), dtype=complex)
        lead = (i, kind == "minus")
        for g in basis_words:
            if len(g) + 1 > N - 1:
                continue
            target = Word([lead]) * g
            for scopy in range(s_k):
                S[pos[(target, scopy)], pos[(g, scopy)]] = 1.0
        Z = t * (S if kind == "plus" else S.conj().T)
        zmats.append(np.pad(Z, ((0, 1), (0, 1))))

        Hd = np.zeros((n0 + 1, n0 + 1), dtype=complex)
        for g in basis_words:
            idx_word = Word([lead]) * g
            for scopy in range(s_k):
                val = xi.get((idx_word, scopy), 0.0) * t ** (-len(g))
                if kind == "plus":
                    Hd[n0, pos[(g, scopy)]] = val
                else:
                    Hd[pos[(g, scopy)], n0] = np.conj(val)
        hmats.append(Hd)

    tau = np.zeros((n0 + 1) * s_k, dtype=complex)
    empty = Word()
    for scopy in range(s_k):
        tau[pos[(empty, scopy)] * s_k + scopy] = 1.0
    return MatrixTuple(zmats), MatrixTuple(hmats), tau


def confirm_witness(s: NCSeries, report: CertificateReport, t: float = 0.25):
    """Evaluate the complex Hessian at the decoded witness point.

    Returns (value, min_eig): the witness quadratic form value and the
    smallest eigenvalue of the evaluated Hessian.  Both negative confirms
    the certificate against the sampler's notion of non-positivity.
    """
    from .calculus import complex_hessian, eval_form

    if report.witness is None:
        raise ValueError("report carries no witness")
    Z, H, tau = witness_point(s.d, s.k, report.N, report.witness, t)
    M = eval_form(complex_hessian(s), Z, H)
    M = 0.5 * (M + M.conj().T)
    value = float(np.real(tau.conj() @ M @ tau))
    min_eig = float(np.linalg.eigvalsh(M)[0])
    return value, min_eig
