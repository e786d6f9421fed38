"""Words over noncommuting letters and truncated series with matrix coefficients.

Letters are pairs (index, starred) with index in 1..d.  A word is a finite
tuple of letters; the empty word is the multiplicative identity.  A series
maps words to dense complex coefficient matrices and carries a truncation
degree: words absent from the map have zero coefficient, words longer than
the truncation degree are unknown.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np

Letter = tuple[int, bool]  # (variable index, starred flag)


class Word:
    """Immutable word over letters z_i / z_i*.

    Ordering is graded lexicographic with the unstarred letter sorting
    before the starred letter at equal index, so matrix layouts built from
    sorted word lists are deterministic.
    """

    __slots__ = ("letters",)

    def __init__(self, letters=()):
        self.letters = tuple((int(i), bool(s)) for i, s in letters)

    def __len__(self):
        return len(self.letters)

    def __hash__(self):
        return hash(self.letters)

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (len(self.letters), self.letters)

    def __mul__(self, other):
        return Word(self.letters + other.letters)

    def __repr__(self):
        return f"Word({word_to_str(self)!r})"

    def is_analytic(self):
        """True when no letter is starred (the empty word qualifies)."""
        return all(not s for _, s in self.letters)

    def is_coanalytic(self):
        """True when every letter is starred (the empty word qualifies)."""
        return all(s for _, s in self.letters)

    def is_mixed(self):
        return not (self.is_analytic() or self.is_coanalytic())

    def max_index(self):
        return max((i for i, _ in self.letters), default=0)


EMPTY_WORD = Word()


def word_involution(w: Word) -> Word:
    """Reverse the letter order and toggle every star: (ab)* = b*a*."""
    return Word([(i, not s) for i, s in reversed(w.letters)])


def word_to_str(w: Word) -> str:
    """Render as space-separated letters, e.g. "z1 z2* z1"; empty word -> "1"."""
    if not w.letters:
        return "1"
    return " ".join(f"z{i}*" if s else f"z{i}" for i, s in w.letters)


def word_from_str(text: str) -> Word:
    text = text.strip()
    if text in ("", "1"):
        return EMPTY_WORD
    letters = []
    for tok in text.split():
        starred = tok.endswith("*")
        if starred:
            tok = tok[:-1]
        if not tok.startswith("z") or not tok[1:].isdigit():
            raise ValueError(f"bad letter {tok!r} in word")
        letters.append((int(tok[1:]), starred))
    return Word(letters)


def all_words(d: int, max_len: int, min_len: int = 0, alphabet: str = "full"):
    """Sorted list of words over d variables with min_len <= length <= max_len.

    alphabet: "full" (both letter kinds), "analytic", or "coanalytic".
    """
    if alphabet == "analytic":
        letters = [(i, False) for i in range(1, d + 1)]
    elif alphabet == "coanalytic":
        letters = [(i, True) for i in range(1, d + 1)]
    else:
        letters = [(i, False) for i in range(1, d + 1)] + [(i, True) for i in range(1, d + 1)]
    out = []
    for n in range(min_len, max_len + 1):
        out.extend(Word(p) for p in itertools.product(letters, repeat=n))
    out.sort(key=Word.sort_key)
    return out


def _as_coeff(value, shape):
    c = np.asarray(value, dtype=complex)
    if c.ndim == 0:
        c = c.reshape(1, 1)
    if c.shape != shape:
        raise ValueError(f"coefficient shape {c.shape} != {shape}")
    return c


class NCSeries:
    """Truncated noncommutative power series with dense matrix coefficients.

    coeffs maps Word -> (kout, kin) complex matrix.  Exact-zero coefficients
    are never stored; the algebra layer applies no numeric thresholds.
    Typically kout == kin == k (the spec's square coefficient size); the
    rectangular case carries operator-valued components of realizations.
    """

    def __init__(self, d: int, shape=(1, 1), maxdeg: int = 0, coeffs=None):
        if isinstance(shape, int):
            shape = (shape, shape)
        self.d = int(d)
        self.shape = (int(shape[0]), int(shape[1]))
        self.maxdeg = int(maxdeg)
        self.coeffs: dict[Word, np.ndarray] = {}
        if coeffs:
            for w, c in coeffs.items():
                self.set_coeff(w, c)

    # -- basics ---------------------------------------------------------

    @property
    def k(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise ValueError("series has rectangular coefficients")
        return self.shape[0]

    def set_coeff(self, w: Word, value):
        if len(w) > self.maxdeg:
            raise ValueError(f"word {word_to_str(w)} exceeds maxdeg {self.maxdeg}")
        if w.max_index() > self.d:
            raise ValueError(f"word {word_to_str(w)} uses index beyond d={self.d}")
        c = _as_coeff(value, self.shape)
        if np.any(c != 0):
            self.coeffs[w] = c
        else:
            self.coeffs.pop(w, None)

    def coeff(self, w: Word) -> np.ndarray:
        c = self.coeffs.get(w)
        if c is None:
            return np.zeros(self.shape, dtype=complex)
        return c

    def add_to_coeff(self, w: Word, value):
        self.set_coeff(w, self.coeff(w) + _as_coeff(value, self.shape))

    def copy(self):
        return NCSeries(self.d, self.shape, self.maxdeg, self.coeffs)

    def degree(self) -> int:
        """Largest stored word length (0 for the zero series)."""
        return max((len(w) for w in self.coeffs), default=0)

    def words(self):
        return sorted(self.coeffs, key=Word.sort_key)

    def __repr__(self):
        terms = ", ".join(word_to_str(w) for w in self.words()[:6])
        more = "" if len(self.coeffs) <= 6 else f", ... ({len(self.coeffs)} terms)"
        return f"NCSeries(d={self.d}, shape={self.shape}, maxdeg={self.maxdeg}, [{terms}{more}])"

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(d, shape=(1, 1), maxdeg=0):
        return NCSeries(d, shape, maxdeg)

    @staticmethod
    def constant(d, value, maxdeg=0):
        value = np.atleast_2d(np.asarray(value, dtype=complex))
        return NCSeries(d, value.shape, maxdeg, {EMPTY_WORD: value})

    @staticmethod
    def one(d, k=1, maxdeg=0):
        return NCSeries.constant(d, np.eye(k), maxdeg)

    @staticmethod
    def variable(d, index, k=1, maxdeg=1, starred=False):
        if not 1 <= index <= d:
            raise ValueError(f"variable index {index} outside 1..{d}")
        w = Word([(index, starred)])
        return NCSeries(d, (k, k), maxdeg, {w: np.eye(k)})

    # -- linear structure -------------------------------------------------

    def __add__(self, other):
        a, b = self, other
        if a.d != b.d or a.shape != b.shape:
            raise ValueError("series dimension mismatch in add")
        out = NCSeries(a.d, a.shape, min(a.maxdeg, b.maxdeg))
        for w in set(a.coeffs) | set(b.coeffs):
            if len(w) <= out.maxdeg:
                out.set_coeff(w, a.coeff(w) + b.coeff(w))
        return out

    def __neg__(self):
        return self.scaled(-1)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, scalar):
        out = NCSeries(self.d, self.shape, self.maxdeg)
        for w, c in self.coeffs.items():
            out.set_coeff(w, scalar * c)
        return out

    def __mul__(self, other):
        if isinstance(other, NCSeries):
            return series_mul(self, other)
        return self.scaled(other)

    def __rmul__(self, scalar):
        return self.scaled(scalar)

    # -- structure maps ----------------------------------------------------

    def adjoint(self):
        return series_adjoint(self)

    def truncate(self, maxdeg: int):
        out = NCSeries(self.d, self.shape, maxdeg)
        for w, c in self.coeffs.items():
            if len(w) <= maxdeg:
                out.set_coeff(w, c)
        return out

    def degree_filter(self, predicate):
        """Keep words whose length satisfies predicate(len)."""
        out = NCSeries(self.d, self.shape, self.maxdeg)
        for w, c in self.coeffs.items():
            if predicate(len(w)):
                out.set_coeff(w, c)
        return out

    def word_filter(self, predicate):
        out = NCSeries(self.d, self.shape, self.maxdeg)
        for w, c in self.coeffs.items():
            if predicate(w):
                out.set_coeff(w, c)
        return out

    def analytic_part(self, include_constant=True):
        """Terms on analytic words; the constant term counts as analytic."""
        return self.word_filter(
            lambda w: w.is_analytic() and (include_constant or len(w) > 0))

    def coanalytic_part(self):
        """Terms on nonempty all-starred words (constant goes to analytic_part)."""
        return self.word_filter(lambda w: len(w) > 0 and w.is_coanalytic())

    def mixed_part(self):
        return self.word_filter(Word.is_mixed)

    def is_selfadjoint(self, tol=0.0):
        for w, c in self.coeffs.items():
            delta = np.max(np.abs(c - self.coeff(word_involution(w)).conj().T))
            if delta > tol:
                return False
        return True

    def allclose(self, other, tol=1e-12):
        if self.d != other.d or self.shape != other.shape:
            return False
        for w in set(self.coeffs) | set(other.coeffs):
            if np.max(np.abs(self.coeff(w) - other.coeff(w))) > tol:
                return False
        return True


def series_mul(a: NCSeries, b: NCSeries) -> NCSeries:
    """Product by word concatenation, truncated at min(a.maxdeg, b.maxdeg)."""
    if a.d != b.d:
        raise ValueError("series variable count mismatch in mul")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"coefficient shapes {a.shape} x {b.shape} do not chain")
    maxdeg = min(a.maxdeg, b.maxdeg)
    out = NCSeries(a.d, (a.shape[0], b.shape[1]), maxdeg)
    by_len = defaultdict(list)
    for v, cv in b.coeffs.items():
        by_len[len(v)].append((v, cv))
    acc: dict[Word, np.ndarray] = {}
    for u, cu in a.coeffs.items():
        room = maxdeg - len(u)
        for n in range(0, room + 1):
            for v, cv in by_len.get(n, ()):
                w = u * v
                prod = cu @ cv
                if w in acc:
                    acc[w] = acc[w] + prod
                else:
                    acc[w] = prod
    for w, c in acc.items():
        out.set_coeff(w, c)
    return out


def series_adjoint(a: NCSeries) -> NCSeries:
    """Coefficient at w becomes the conjugate transpose of a at w*."""
    out = NCSeries(a.d, (a.shape[1], a.shape[0]), a.maxdeg)
    for w, c in a.coeffs.items():
        out.set_coeff(word_involution(w), c.conj().T)
    return out


def real_part(a: NCSeries) -> NCSeries:
    return (a + series_adjoint(a)).scaled(0.5)


def series_add(a: NCSeries, b: NCSeries) -> NCSeries:
    return a + b


def scalar_mul(scalar, a: NCSeries) -> NCSeries:
    return a.scaled(scalar)


def series_neumann(p: NCSeries, maxdeg=None) -> NCSeries:
    """Truncated sum of powers of p, requiring p to vanish at the empty word.

    Yields the inverse of (1 - p) up to the truncation degree.
    """
    if EMPTY_WORD in p.coeffs:
        raise ValueError("Neumann expansion needs a series vanishing at 0")
    if p.shape[0] != p.shape[1]:
        raise ValueError("Neumann expansion needs square coefficients")
    if maxdeg is None:
        maxdeg = p.maxdeg
    p = p.truncate(maxdeg)
    out = NCSeries.one(p.d, p.shape[0], maxdeg)
    power = NCSeries.one(p.d, p.shape[0], maxdeg)
    for _ in range(maxdeg):
        power = series_mul(power, p)
        if not power.coeffs:
            break
        out = out + power
    return out
