"""Exact characteristic numbers and Chern-Weil densities.

Rationals are ``fractions.Fraction``.  The Chern character form is
``ch(F) = Tr exp(i F / 2pi)``, so ``ch_k = (1/k!) (i/2pi)^k Tr(F^k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exterior import FormError, FormValue, top_coefficient, wedge

CharNumber = Fraction


class DegenerateError(ValueError):
    """Root query on the zero polynomial."""


def as_char(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def fmt(x: Fraction) -> str:
    """``"p/q"`` (or ``"p"`` for integers)."""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- closed formulas ---------------------------------------------------------------

def ahat_hypersurface(n: int, d: int) -> Fraction:
    """``A-hat[V^{2n}(2d)] = 2d/(2n+1)! * prod_{k=1}^n (d^2 - k^2)``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    prod = math.prod(d * d - k * k for k in range(1, n + 1))
    return Fraction(2 * d * prod, math.factorial(2 * n + 1))


def hypersurface_is_spin(n: int, d: int) -> bool:
    """``V^{2n}(2d)`` is spin iff ``2n + 2d`` is even, which always holds."""
    return (2 * n + 2 * d) % 2 == 0


def p_poly(j: int, l: int) -> Fraction:
    """``p_j(l) = (-1)^j/(2j)! * sum_{s=0}^{l} (l - 2s)^{2j}``."""
    if j < 0 or l < 0:
        raise ValueError("j and l must be non-negative")
    total = sum((l - 2 * s) ** (2 * j) for s in range(l + 1))
    return Fraction((-1) ** j * total, math.factorial(2 * j))


@dataclass(frozen=True)
class CharVector:
    """``a = (a_0, ..., a_n)`` with ``a_l = A-hat_{n-l}(TM) c_2(E)^l [M]``."""

    a: tuple

    def __post_init__(self):
        if len(self.a) == 0:
            raise ValueError("CharVector needs at least a_0")
        object.__setattr__(self, "a", tuple(as_char(v) for v in self.a))

    @property
    def n(self) -> int:
        return len(self.a) - 1

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.a)


def su2_index(a: CharVector, l: int) -> Fraction:
    """``ind(D^+_{E_l}) = sum_j p_j(l) a_j``."""
    return sum((p_poly(j, l) * aj for j, aj in enumerate(a.a)), Fraction(0))


def index_polynomial(a: CharVector) -> list[Fraction]:
    """Exact coefficients (ascending powers of l) of ``q(l) = su2_index(a, l)``.

    ``q`` has degree at most ``2n + 1``; it is recovered by interpolation at
    ``l = 0, ..., 2n + 1`` (p_j is a polynomial in l of degree 2j + 1).
    """
    deg = 2 * a.n + 1
    xs = list(range(deg + 1))
    ys = [su2_index(a, x) for x in xs]
    coeffs = [Fraction(0)] * (deg + 1)
    for i, xi in enumerate(xs):
        # Lagrange basis polynomial for node i
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            basis = [Fraction(0)] + basis  # multiply by l
            for t in range(len(basis) - 1):
                basis[t] -= xj * basis[t + 1]
            denom *= xi - xj
        for t, c in enumerate(basis):
            coeffs[t] += ys[i] * c / denom
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def poly_eval(coeffs, x) -> Fraction:
    out = Fraction(0)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


@dataclass
class RootReport:
    roots: list
    degenerate: bool
    bound: int
    within_bound: bool
    scan_limit: int
    scan_agrees: bool


def positive_roots(a: CharVector, scan_limit: int = 10_000) -> RootReport:
    """Positive integers l with ``q(l) = 0``.

    Exact path: integer-scale the polynomial, strip powers of l, and test the
    positive divisors of the constant term.  A direct scan up to ``scan_limit``
    cross-checks.  Raises ``DegenerateError`` when ``a = 0``.
    """
    if a.is_zero():
        raise DegenerateError("the zero CharVector has index identically 0")
    coeffs = index_polynomial(a)
    lcm = math.lcm(*[c.denominator for c in coeffs])
    ints = [int(c * lcm) for c in coeffs]
    while ints and ints[0] == 0:
        ints = ints[1:]
    roots = [r for r in _divisors(ints[0]) if poly_eval(coeffs, r) == 0] if ints[0] else []
    scan = [l for l in range(1, scan_limit + 1) if su2_index(a, l) == 0] if scan_limit else []
    bound = 2 * a.n - 1
    return RootReport(roots, False, bound, len(roots) <= max(bound, 0),
                      scan_limit, scan == [r for r in roots if r <= scan_limit])


def ad_st_relation(N: int, ind_E, ind_partial) -> Fraction:
    """``ind(D^+_ad) = 2N ind(D^+_E) - (N^2 + 1) ind(d^+)``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    return 2 * N * as_char(ind_E) - (N * N + 1) * as_char(ind_partial)


def two_implies_third(N: int, ind_partial, ind_E, ind_ad=None) -> bool:
    """Check that any two vanishing indices force the third to vanish.

    ``ind_ad`` defaults to the value given by ``ad_st_relation``; a supplied value
    inconsistent with the relation returns False.
    """
    rel = ad_st_relation(N, ind_E, ind_partial)
    if ind_ad is None:
        ind_ad = rel
    elif as_char(ind_ad) != rel:
        return False
    vals = [as_char(ind_partial) == 0, as_char(ind_E) == 0, as_char(ind_ad) == 0]
    return sum(vals) != 2


# -- Chern-Weil ---------------------------------------------------------------------

def _check_antihermitian(F: FormValue, tol):
    c = F.coeffs
    if np.max(np.abs(c + np.conj(np.swapaxes(c, -1, -2))), initial=0.0) > tol:
        raise FormError("curvature values are not anti-Hermitian")


def chern_weil_ch(F: FormValue, k: int, tol: float = 1e-10) -> FormValue:
    """``ch_k = (1/k!) (i/2pi)^k Tr(F^k)`` as a real scalar 2k-form."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if F.degree != 2 or F.kind not in ("lie", "endo"):
        raise FormError("ch_k needs a matrix-valued 2-form")
    _check_antihermitian(F, tol)
    m, r = F.m, F.coeffs.shape[-1]
    if k == 0:
        return FormValue(m, 0, np.array(float(r)))
    if 2 * k > m:
        return FormValue.zero(m, min(2 * k, m))  # vanishes identically
    P = F
    for _ in range(k - 1):
        P = wedge(P, F)
    tr = np.trace(P.coeffs, axis1=-2, axis2=-1) * ((1j / (2 * math.pi)) ** k / math.factorial(k))
    scale = max(1.0, float(np.max(np.abs(tr))))
    if np.max(np.abs(tr.imag)) > tol * scale:
        raise FormError("Chern-Weil density has an imaginary part")
    return FormValue(m, 2 * k, tr.real)


def chern_weil_density(F: FormValue, k: int) -> float:
    """Top coefficient of ``ch_k`` when ``2k = m``."""
    if 2 * k != F.m:
        raise FormError("density needs 2k equal to the dimension")
    return float(top_coefficient(chern_weil_ch(F, k)))


def dual_curvature(F: FormValue) -> FormValue:
    """Curvature of the dual connection, ``-F^T``."""
    return FormValue(F.m, F.degree, -np.swapaxes(F.coeffs, -1, -2), F.kind)


def index_top_form(F: FormValue, ahat: dict | None = None) -> float:
    """Top coefficient of ``[A-hat ch(F)]_m`` with ``A-hat_j`` supplied as scalar 4j-forms."""
    m = F.m
    if m % 2:
        raise FormError("index density needs even dimension")
    ahat = dict(ahat or {})
    ahat.setdefault(0, FormValue(m, 0, np.array(1.0)))
    total = 0.0
    for j, A in ahat.items():
        rest = m - 4 * j
        if rest < 0 or rest % 2:
            continue
        ch = chern_weil_ch(F, rest // 2)
        total += float(top_coefficient(wedge(A, ch)))
    return total


@dataclass
class BPSTIndexReport:
    resolutions: list
    values: list
    errors: list
    sign: int
    magnitude_ok: bool
    sign_stable: bool
    orientation: str = "e^1 ^ e^2 ^ e^3 ^ e^4"
    lichnerowicz: str = ""


def bpst_index_check(resolutions=(32, 64, 128), scale: float = 1.0, center=(0.0, 0.0, 0.0, 0.0),
                     tol: float = 1e-3, zero_curvature: bool = False) -> BPSTIndexReport:
    """Integrate the BPST ch_2 density over R^4 on a resolution ladder."""
    from .construct import BPST, ch2_density_bpst
    from .fieldcalc import integrate_ladder

    inst = BPST(scale, tuple(center))

    def density(pts):
        v = ch2_density_bpst(pts, inst).real
        return 0.0 * v if zero_curvature else v

    ladder = integrate_ladder(density, 4, resolutions)
    vals = [q.value for q in ladder]
    errs = [q.error for q in ladder]
    signs = {int(np.sign(v)) for v in vals}
    sign = signs.pop() if len(signs) == 1 else 0
    ok = all(abs(abs(v) - 1.0) <= tol for v in vals)
    return BPSTIndexReport(list(resolutions), vals, errs, sign, ok, sign != 0 or zero_curvature,
                           lichnerowicz=("ASD curvature: the L^2 kernel lies in negative chirality, "
                                         "index = -dim ker D^-"))
