"""Derivative operators on truncated series, symbolically and by stencils.

A directional form lives over the doubled alphabet: variables 1..d are the
point letters, variables d+1..2d are the direction letters (H_i, starred or
not).  Each derivative operator replaces point letters by direction letters;
direction letters are never replaced again, so operators compose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import MatrixTuple, eval_expr, eval_series
from .words import NCSeries, Word, word_involution


class NotPluriharmonic(ValueError):
    def __init__(self, word):
        from .words import word_to_str
        super().__init__(f"mixed word {word_to_str(word)} survives in the Hessian")
        self.word = word


@dataclass
class DirectionalForm:
    """Series over the doubled alphabet, homogeneous in the direction letters.

    bidegrees lists the allowed (H, H*) letter counts per word.
    """

    series: NCSeries
    d: int
    bidegrees: frozenset

    def eval(self, Z: MatrixTuple, H: MatrixTuple) -> np.ndarray:
        return eval_form(self, Z, H)

    def check_homogeneity(self):
        for w in self.series.coeffs:
            a = sum(1 for i, s in w.letters if i > self.d and not s)
            b = sum(1 for i, s in w.letters if i > self.d and s)
            if (a, b) not in self.bidegrees:
                raise ValueError(f"word with direction bidegree {(a, b)} not in {set(self.bidegrees)}")
        return self


def _lift(s: NCSeries) -> NCSeries:
    """Reinterpret a d-variable series over the doubled alphabet."""
    return NCSeries(2 * s.d, s.shape, s.maxdeg, s.coeffs)


def _as_form(f, d=None) -> DirectionalForm:
    if isinstance(f, DirectionalForm):
        return f
    return DirectionalForm(_lift(f), f.d, frozenset({(0, 0)}))


def _replace_one(form: DirectionalForm, starred: bool) -> DirectionalForm:
    """Sum over replacing one point letter of the given kind by its direction letter."""
    d = form.d
    out = NCSeries(form.series.d, form.series.shape, form.series.maxdeg)
    for w, c in form.series.coeffs.items():
        for p, (i, s) in enumerate(w.letters):
            if i <= d and s == starred:
                letters = list(w.letters)
                letters[p] = (d + i, starred)
                out.add_to_coeff(Word(letters), c)
    shift = (0, 1) if starred else (1, 0)
    degs = frozenset((a + shift[0], b + shift[1]) for a, b in form.bidegrees)
    return DirectionalForm(out, d, degs)


def derivative(s) -> DirectionalForm:
    """Analytic directional derivative: one unstarred letter becomes H_i."""
    return _replace_one(_as_form(s), starred=False)


def conj_derivative(s) -> DirectionalForm:
    """Conjugate directional derivative: one starred letter becomes H_i*."""
    return _replace_one(_as_form(s), starred=True)


def complex_hessian(s) -> DirectionalForm:
    """Replace one unstarred and one starred letter in all ordered ways.

    Coincides with conj_derivative(derivative(s)) and with the composition
    in the other order.
    """
    form = _as_form(s)
    d = form.d
    out = NCSeries(form.series.d, form.series.shape, form.series.maxdeg)
    for w, c in form.series.coeffs.items():
        positions = list(enumerate(w.letters))
        for p, (i, si) in positions:
            if i > d or si:
                continue
            for q, (j, sj) in positions:
                if j > d or not sj or q == p:
                    continue
                letters = list(w.letters)
                letters[p] = (d + i, False)
                letters[q] = (d + j, True)
                out.add_to_coeff(Word(letters), c)
    return DirectionalForm(out, d, frozenset({(1, 1)}))


def real_derivative(s) -> DirectionalForm:
    """d/dt at t=0 along Z + tH: replace one letter of either kind."""
    a = _replace_one(_as_form(s), starred=False)
    b = _replace_one(_as_form(s), starred=True)
    return DirectionalForm(a.series + b.series, a.d, a.bidegrees | b.bidegrees)


def real_second_derivative(s) -> DirectionalForm:
    """Second t-derivative: replace an ordered pair of distinct letters."""
    return real_derivative(real_derivative(s))


def eval_form(form: DirectionalForm, Z: MatrixTuple, H: MatrixTuple) -> np.ndarray:
    if Z.d != form.d or H.d != form.d:
        raise ValueError("point/direction tuple length mismatch with form")
    if Z.n != H.n:
        raise ValueError("point and direction sizes differ")
    doubled = MatrixTuple(Z.mats + H.mats)
    return eval_series(form.series, doubled)


# -- finite differences ------------------------------------------------------

FD_OPS = ("D", "Dstar", "hessian", "DR", "DR2")


def fd_derivative(target, Z: MatrixTuple, H: MatrixTuple, which: str,
                  step: float = 1e-4, richardson: bool = True) -> np.ndarray:
    """Stencil derivatives of z -> target(Z + zH) at z = 0.

    target may be an NCSeries, an expression tree, or a callable on
    matrix tuples.  One Richardson extrapolation level is applied by
    default (both stencils have O(h^2) error).
    """
    if which not in FD_OPS:
        raise ValueError(f"unknown operator {which!r}; pick from {FD_OPS}")
    if callable(target) and not isinstance(target, NCSeries):
        func = target
    elif isinstance(target, NCSeries):
        func = lambda P: eval_series(target, P)
    else:
        func = lambda P: eval_expr(target, P)

    def stencil(h):
        f = lambda z: func(Z.shifted(H, z))
        if which == "D":
            fx = (f(h) - f(-h)) / (2 * h)
            fy = (f(1j * h) - f(-1j * h)) / (2 * h)
            return 0.5 * (fx - 1j * fy)
        if which == "Dstar":
            fx = (f(h) - f(-h)) / (2 * h)
            fy = (f(1j * h) - f(-1j * h)) / (2 * h)
            return 0.5 * (fx + 1j * fy)
        if which == "hessian":
            return (f(h) + f(-h) + f(1j * h) + f(-1j * h) - 4 * f(0)) / (4 * h * h)
        if which == "DR":
            return (f(h) - f(-h)) / (2 * h)
        return (f(h) - 2 * f(0) + f(-h)) / (h * h)

    coarse = stencil(step)
    if not richardson:
        return coarse
    fine = stencil(step / 2)
    return (4 * fine - coarse) / 3


SYMBOLIC_OPS = {
    "D": derivative,
    "Dstar": conj_derivative,
    "hessian": complex_hessian,
    "DR": real_derivative,
    "DR2": real_second_derivative,
}


# -- plurisubharmonicity sampling ---------------------------------------------


@dataclass
class PshSample:
    found: bool
    Z: MatrixTuple | None = None
    H: MatrixTuple | None = None
    min_eig: float = 0.0
    checked: int = 0

    def __bool__(self):
        return self.found


def psh_sample_test(s: NCSeries, radius: float = 0.8, sizes=(1, 2, 3, 4),
                    samples: int = 100, seed: int = 0, tol: float = 1e-9,
                    extra_candidates=()) -> PshSample:
    """Search for a point and direction where the complex Hessian is not PSD.

    Ginibre-normalized sampling within the given radius; deterministic via
    per-sample seeds derived from the root seed.  extra_candidates are
    (Z, H) pairs checked before any random sampling.  A sampler can only
    produce witnesses, never certify positivity.
    """
    from .linalg import random_tuple

    form = complex_hessian(s)
    checked = 0

    def probe(Z, H):
        M = form.eval(Z, H)
        Hm = 0.5 * (M + M.conj().T)
        return float(np.linalg.eigvalsh(Hm)[0]) if Hm.size else 0.0

    for Z, H in extra_candidates:
        checked += 1
        m = probe(Z, H)
        if m < -tol:
            return PshSample(True, Z, H, m, checked)
    for idx in range(samples):
        rng = np.random.default_rng([seed, idx])
        n = sizes[idx % len(sizes)]
        Z = random_tuple(rng, s.d, n, radius)
        H = random_tuple(rng, s.d, n, 1.0)
        checked += 1
        m = probe(Z, H)
        if m < -tol:
            return PshSample(True, Z, H, m, checked)
    return PshSample(False, checked=checked)


# -- pluriharmonic conjugates ---------------------------------------------------


def pluriharmonic_conjugate(u: NCSeries, tol: float = 0.0) -> NCSeries:
    """Analytic f with real_part(f) = u and Im f(0) = 0.

    Requires u self-adjoint with identically vanishing complex Hessian: any
    surviving mixed word raises NotPluriharmonic naming the offender.
    """
    if not u.is_selfadjoint(tol):
        raise ValueError("pluriharmonic conjugate needs a self-adjoint series")
    mixed = u.mixed_part()
    if mixed.coeffs:
        raise NotPluriharmonic(mixed.words()[0])
    out = NCSeries(u.d, u.shape, u.maxdeg)
    for w, c in u.coeffs.items():
        if len(w) == 0:
            out.set_coeff(w, c)
        elif w.is_analytic():
            out.set_coeff(w, 2 * c)
    return out
