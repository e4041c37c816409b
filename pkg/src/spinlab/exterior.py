"""Pointwise exterior algebra on an oriented orthonormal frame (e_1, ..., e_m).

Forms are stored as dense, fully antisymmetric coefficient arrays of shape
``(m,)*k + value_shape``.  The wedge product uses the binomial normalisation,
so the increasing monomials ``e^{i1} ^ ... ^ e^{ik}`` are orthonormal and the
component of ``e^1 ^ e^2`` at index ``(0, 1)`` is ``+1``.  The Hodge star is
fixed by ``*a ^ b = <a, b> vol`` with ``vol = e^1 ^ ... ^ e^m``.

Indices are 0-based throughout the code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

VALUE_KINDS = ("scalar", "lie", "endo", "vector")


class FormError(ValueError):
    """Invalid degree, dimension or value kind for a form operation."""


@lru_cache(maxsize=None)
def increasing(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(m), k))


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an index repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _signed_perms(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    return tuple((p, perm_sign(p)) for p in itertools.permutations(range(k)))


@dataclass(frozen=True, eq=False)
class FormValue:
    """A k-form at a point, with scalar, Lie-algebra, endomorphism or vector values."""

    m: int
    degree: int
    coeffs: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        if self.kind not in VALUE_KINDS:
            raise FormError(f"unknown value kind {self.kind!r}")
        if not 0 <= self.degree <= self.m:
            raise FormError(f"degree {self.degree} outside [0, {self.m}]")
        if self.coeffs.shape[: self.degree] != (self.m,) * self.degree:
            raise FormError("coefficient array does not match (m,)*degree")

    # -- construction -------------------------------------------------------
    @classmethod
    def from_components(cls, m, degree, comps, kind="scalar", value_shape=None):
        """Build from increasing-index components ``{(i1<...<ik): value}``."""
        comps = dict(comps)
        if value_shape is None:
            value_shape = np.shape(next(iter(comps.values()))) if comps else ()
        dtype = np.result_type(float, *[np.asarray(v).dtype for v in comps.values()])
        full = np.zeros((m,) * degree + tuple(value_shape), dtype=dtype)
        for idx, val in comps.items():
            if len(idx) != degree:
                raise FormError(f"index {idx} has wrong length for degree {degree}")
            s = perm_sign(idx)
            if s == 0:
                continue
            base = tuple(sorted(idx))
            val = s * np.asarray(val)
            for p, sp in _signed_perms(degree):
                full[tuple(base[i] for i in p)] += sp * val
        return cls(m, degree, full, kind)

    @classmethod
    def basis(cls, m, idx, value=1.0, kind="scalar"):
        idx = tuple(idx)
        return cls.from_components(m, len(idx), {idx: value}, kind=kind)

    @classmethod
    def zero(cls, m, degree, value_shape=(), kind="scalar", dtype=float):
        return cls(m, degree, np.zeros((m,) * degree + tuple(value_shape), dtype=dtype), kind)

    @classmethod
    def volume(cls, m):
        return cls.basis(m, range(m))

    @classmethod
    def random(cls, rng, m, degree, value_shape=(), kind="scalar", complex_=False):
        comps = {}
        for idx in increasing(m, degree):
            v = rng.normal(size=value_shape)
            if complex_:
                v = v + 1j * rng.normal(size=value_shape)
            comps[idx] = v
        return cls.from_components(m, degree, comps, kind=kind, value_shape=value_shape)

    # -- access -------------------------------------------------------------
    @property
    def value_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[self.degree:]

    def component(self, idx):
        return self.coeffs[tuple(idx)]

    def components(self):
        """Iterate ``(increasing index tuple, value)`` pairs."""
        for idx in increasing(self.m, self.degree):
            yield idx, self.coeffs[idx]

    def increasing_array(self) -> np.ndarray:
        """Stack of increasing components, shape ``(C(m,k),) + value_shape``."""
        if self.degree == 0:
            return self.coeffs[None]
        return np.stack([v for _, v in self.components()])

    def map_values(self, fn, kind=None) -> "FormValue":
        """Apply a linear map to every component value."""
        comps = {idx: fn(v) for idx, v in self.components()}
        out_shape = np.shape(fn(np.zeros(self.value_shape, dtype=self.coeffs.dtype)))
        return FormValue.from_components(self.m, self.degree, comps,
                                         kind=kind or self.kind, value_shape=out_shape)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) / math.factorial(self.degree)))

    def is_antisymmetric(self, tol=0.0) -> bool:
        for a in range(self.degree - 1):
            axes = list(range(self.coeffs.ndim))
            axes[a], axes[a + 1] = axes[a + 1], axes[a]
            if np.max(np.abs(self.coeffs + self.coeffs.transpose(axes)), initial=0.0) > tol:
                return False
        return True

    def _check_compatible(self, other):
        if self.m != other.m or self.degree != other.degree:
            raise FormError("forms live in different degrees or dimensions")

    def __add__(self, other):
        self._check_compatible(other)
        return FormValue(self.m, self.degree, self.coeffs + other.coeffs, self.kind)

    def __sub__(self, other):
        self._check_compatible(other)
        return FormValue(self.m, self.degree, self.coeffs - other.coeffs, self.kind)

    def __neg__(self):
        return FormValue(self.m, self.degree, -self.coeffs, self.kind)

    def __mul__(self, c):
        return FormValue(self.m, self.degree, self.coeffs * c, self.kind)

    __rmul__ = __mul__

    def allclose(self, other, atol=1e-12) -> bool:
        return (self.m == other.m and self.degree == other.degree
                and self.coeffs.shape == other.coeffs.shape
                and bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol)))

    def __repr__(self):
        nz = {idx: v for idx, v in self.components() if np.any(np.abs(v) > 0)}
        return f"FormValue(m={self.m}, degree={self.degree}, kind={self.kind}, {nz})"


def _value_product(a: FormValue, b: FormValue):
    """Pointwise product of values and the kind of the result."""
    ka, kb = a.kind, b.kind
    if ka == "scalar" and kb == "scalar":
        return (lambda x, y: x * y), "scalar"
    if ka == "scalar":
        return (lambda x, y: x * y), kb
    if kb == "scalar":
        return (lambda x, y: y * x), ka
    if ka in ("lie", "endo") and kb in ("lie", "endo"):
        return (lambda x, y: x @ y), "endo"
    if ka in ("lie", "endo") and kb == "vector":
        return (lambda x, y: x @ y), "vector"
    raise FormError(f"cannot multiply {ka}-valued and {kb}-valued forms")


def wedge(alpha: FormValue, beta: FormValue, product=None, kind=None) -> FormValue:
    """Wedge product; matrix values compose in the order ``alpha`` then ``beta``."""
    if alpha.m != beta.m:
        raise FormError("dimension mismatch")
    m, k, l = alpha.m, alpha.degree, beta.degree
    if k + l > m:
        raise FormError(f"degree overflow: {k} + {l} > {m}")
    if product is None:
        product, kind = _value_product(alpha, beta)
    comps = {}
    for I, a in alpha.components():
        if not np.any(a):
            continue
        for J, b in beta.components():
            s = perm_sign(I + J)
            if s == 0 or not np.any(b):
                continue
            K = tuple(sorted(I + J))
            val = s * product(a, b)
            comps[K] = comps[K] + val if K in comps else val
    if not comps:
        shape = np.shape(product(np.zeros(alpha.value_shape), np.zeros(beta.value_shape)))
        return FormValue.zero(m, k + l, shape, kind=kind or "scalar")
    return FormValue.from_components(m, k + l, comps, kind=kind or "scalar")


def one_form(m: int, i: int, value=1.0, kind="scalar") -> FormValue:
    return FormValue.basis(m, (i,), value, kind)


def hodge_sign(m: int, idx) -> int:
    """Sign s with ``*e^I = s e^{I^c}`` under ``*a ^ b = <a,b> vol``."""
    comp = tuple(i for i in range(m) if i not in idx)
    return perm_sign(comp + tuple(idx))


def hodge_star(alpha: FormValue) -> FormValue:
    m, k = alpha.m, alpha.degree
    comps = {}
    for I, a in alpha.components():
        comp = tuple(i for i in range(m) if i not in I)
        comps[comp] = hodge_sign(m, I) * a
    return FormValue.from_components(m, m - k, comps, kind=alpha.kind,
                                     value_shape=alpha.value_shape)


def hodge_star_inv(alpha: FormValue) -> FormValue:
    """Inverse Hodge star acting on a k-form: ``(-1)^{k(m-k)} *``."""
    k, m = alpha.degree, alpha.m
    return hodge_star(alpha) * (-1) ** (k * (m - k))


def insert(v, alpha: FormValue) -> FormValue:
    """Insertion of a frame vector (index ``v``) or a component vector into ``alpha``."""
    if alpha.degree == 0:
        raise FormError("cannot insert into a 0-form")
    if np.ndim(v) == 0:
        coeffs = alpha.coeffs[int(v)]
    else:
        coeffs = np.tensordot(np.asarray(v), alpha.coeffs, axes=(0, 0))
    return FormValue(alpha.m, alpha.degree - 1, coeffs, alpha.kind)


def lie_pairing(x, y, multiplier=1.0):
    """Ad-invariant inner product ``-2 Tr(xy)`` on anti-Hermitian matrices."""
    return multiplier * (-2.0) * np.trace(x @ y).real


def form_inner(alpha: FormValue, beta: FormValue, pairing=None) -> float:
    """``(1/k!) sum_{i1..ik} <alpha_{i..}, beta_{i..}>``.

    Scalar and vector values use the real part of the Hermitian product, Lie and
    endomorphism values the trace pairing ``-2 Tr(xy)`` unless ``pairing`` is given.
    """
    if alpha.m != beta.m or alpha.degree != beta.degree:
        raise FormError("degree mismatch in inner product")
    if pairing is None:
        if alpha.kind in ("lie", "endo"):
            pairing = lie_pairing
        else:
            def pairing(x, y):
                return np.vdot(x, y).real
    total = 0.0
    for (_, a), (_, b) in zip(alpha.components(), beta.components()):
        total += pairing(a, b)
    return float(total)


def norm2(alpha: FormValue, pairing=None) -> float:
    return form_inner(alpha, alpha, pairing)


def top_coefficient(alpha: FormValue):
    if alpha.degree != alpha.m:
        raise FormError("not a top-degree form")
    return alpha.coeffs[tuple(range(alpha.m))]


def sd_asd_project(alpha: FormValue, sign: int) -> FormValue:
    """Self-dual (``sign=+1``) or anti-self-dual (``-1``) part of a 2-form in dimension 4."""
    if alpha.m != 4 or alpha.degree != 2:
        raise FormError("(anti-)self-dual projection needs a 2-form in dimension 4")
    if sign not in (1, -1):
        raise FormError("sign must be +1 or -1")
    return (alpha + sign * hodge_star(alpha)) * 0.5
