"""Complex Clifford modules and Clifford products of forms with twisted spinors.

Gamma matrices satisfy ``g_i g_j + g_j g_i = -2 delta_ij``; they are anti-Hermitian
and unitary.  A twisted spinor value is an array of shape ``(S, d)``: spinor index
first (``S = 2**(m//2)``), colour index second.  Gamma matrices act on axis 0,
representation endomorphisms on axis 1, so the flattened operator is
``kron(gamma, B)``.

Chirality for even ``m`` is ``i**(m/2) g_1 ... g_m``: Hermitian, squares to one,
trace zero.  It is diagonal only for m = 2 in this basis; ``chiral_basis`` returns
orthonormal bases of its two eigenspaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .exterior import FormError, FormValue

SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


class DimensionError(ValueError):
    """Clifford module requested in an unsupported dimension."""


class ChiralityError(ValueError):
    """Chirality operations need an even-dimensional module."""


@dataclass(frozen=True, eq=False)
class CliffordModule:
    m: int
    gammas: np.ndarray  # (m, S, S)
    chirality: np.ndarray | None

    @property
    def spinor_dim(self) -> int:
        return self.gammas.shape[1]

    def product(self, idx) -> np.ndarray:
        """``g_{i1} g_{i2} ... g_{ik}`` (identity for the empty index)."""
        out = np.eye(self.spinor_dim, dtype=complex)
        for i in idx:
            out = out @ self.gammas[i]
        return out

    def volume_element(self) -> np.ndarray:
        return self.product(range(self.m))


def _hermitian_gammas(m: int) -> list[np.ndarray]:
    """Euclidean gammas with square +1 via the tensor-product recursion."""
    gam = [SIGMA[0], SIGMA[1]]
    d = 2
    while d + 2 <= m:
        eye = np.eye(gam[0].shape[0], dtype=complex)
        gam = [np.kron(SIGMA[0], g) for g in gam] + [np.kron(SIGMA[1], eye), np.kron(SIGMA[2], eye)]
        d += 2
    if d < m:
        # odd m: normalised product of the even-dimensional ones
        last = reduce(np.matmul, gam) * (-1j) ** (d // 2)
        gam.append(last)
    return gam


@lru_cache(maxsize=None)
def build_clifford_module(m: int) -> CliffordModule:
    """Gamma representation of Cl(m) on C^{2^{floor(m/2)}}.

    For ``m = 3`` the gammas are exactly ``(-i s1, -i s2, -i s3)``.
    """
    if int(m) != m or m < 2:
        raise DimensionError(f"Clifford module needs m >= 2, got {m}")
    herm = _hermitian_gammas(m)
    gammas = np.array([-1j * g for g in herm])
    gammas.setflags(write=False)
    chir = None
    if m % 2 == 0:
        chir = (1j) ** (m // 2) * reduce(np.matmul, gammas)
        chir.setflags(write=False)
    return CliffordModule(m, gammas, chir)


def chiral_basis(module: CliffordModule, sign: int) -> np.ndarray:
    """Columns span the ``sign`` eigenspace of the chirality operator."""
    if module.chirality is None:
        raise ChiralityError("odd dimension has no chirality operator")
    w, v = np.linalg.eigh(module.chirality)
    return v[:, np.abs(w - sign) < 0.5]


# -- abstract Clifford algebra on basis blades -------------------------------

def blade_product(a: int, b: int) -> tuple[int, int]:
    """``e_A e_B = sign * e_{A xor B}`` for bitmask blades with ``e_i^2 = -1``."""
    swaps = 0
    x = a >> 1
    while x:
        swaps += bin(x & b).count("1")
        x >>= 1
    sign = -1 if swaps % 2 else 1
    if bin(a & b).count("1") % 2:
        sign = -sign
    return sign, a ^ b


def _mask(idx) -> int:
    return sum(1 << i for i in idx)


def _indices(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def form_to_multivector(theta: FormValue) -> dict[int, np.ndarray]:
    return {_mask(idx): np.asarray(v) for idx, v in theta.components() if np.any(v)}


def multivector_grades(mv: dict[int, np.ndarray], m: int, kind="scalar", value_shape=()):
    """Split a multivector into homogeneous FormValues keyed by degree."""
    by_degree: dict[int, dict] = {}
    for blade, v in mv.items():
        idx = _indices(blade)
        by_degree.setdefault(len(idx), {})[idx] = v
    return {k: FormValue.from_components(m, k, comps, kind=kind, value_shape=value_shape)
            for k, comps in by_degree.items()}


def multivector_mul(x: dict, y: dict, product=np.multiply) -> dict:
    out: dict[int, np.ndarray] = {}
    for a, va in x.items():
        for b, vb in y.items():
            s, c = blade_product(a, b)
            val = s * product(va, vb)
            out[c] = out[c] + val if c in out else val
    return out


def clifford_multiply(alpha: FormValue, theta: FormValue) -> dict[int, FormValue]:
    """Clifford product ``alpha . theta`` of a scalar form with any form, by degree."""
    if alpha.kind != "scalar":
        raise FormError("left factor of a Clifford product must be scalar-valued")
    mv = multivector_mul(form_to_multivector(alpha), form_to_multivector(theta),
                         product=lambda a, b: a * b)
    return multivector_grades(mv, theta.m, theta.kind, theta.value_shape)


def conjugation_sum(theta: FormValue, module: CliffordModule | None = None) -> FormValue:
    """``sum_i e_i . theta . e_i`` in the Clifford algebra; returns a form of the same degree."""
    m = theta.m
    if module is not None and module.m != m:
        raise FormError("module and form dimension differ")
    mv = form_to_multivector(theta)
    total: dict[int, np.ndarray] = {}
    for i in range(m):
        e = {1 << i: np.array(1.0)}
        term = multivector_mul(multivector_mul(e, mv, lambda a, b: a * b), e, lambda a, b: a * b)
        for blade, v in term.items():
            total[blade] = total[blade] + v if blade in total else v
    grades = multivector_grades(total, m, theta.kind, theta.value_shape)
    return grades.get(theta.degree,
                      FormValue.zero(m, theta.degree, theta.value_shape, theta.kind))


def clifford_matrix(theta: FormValue, module: CliffordModule) -> np.ndarray:
    """Image of a scalar form in End(S): ``sum_{I increasing} theta_I g_I``."""
    if theta.kind != "scalar":
        raise FormError("clifford_matrix needs a scalar-valued form")
    out = np.zeros((module.spinor_dim,) * 2, dtype=complex)
    for idx, v in theta.components():
        if v != 0:
            out += v * module.product(idx)
    return out


def conjugation_sum_matrix(theta: FormValue, module: CliffordModule) -> np.ndarray:
    """``sum_i g_i c(theta) g_i`` evaluated with the gamma representation."""
    c = clifford_matrix(theta, module)
    return sum(g @ c @ g for g in module.gammas)


# -- twisted spinors ---------------------------------------------------------

def _colour_vector(value, kind, rep, d):
    if kind == "scalar":
        return np.full(d, value, dtype=complex)
    if kind == "vector":
        return np.asarray(value, dtype=complex)
    if kind == "lie":
        if rep is None or rep.kind != "adjoint":
            raise FormError("Lie-valued forms enter the colour factor through the adjoint rep")
        return rep.algebra.coords(value).astype(complex)
    raise FormError(f"{kind}-valued forms are not colour vectors")


def clifford_tensor_product(theta: FormValue, psi: np.ndarray, module: CliffordModule,
                            rep=None, colour_dim: int | None = None) -> np.ndarray:
    """``sum_{I} theta^I (x) g_I psi`` for an untwisted spinor ``psi``.

    Lie values are placed in the colour factor as adjoint coordinates; scalar
    values are copied into every colour slot.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (module.spinor_dim,):
        raise FormError("spinor has wrong dimension")
    if theta.degree > module.m:
        raise FormError("degree exceeds dimension")
    d = colour_dim or (rep.dim if rep is not None else
                       (theta.value_shape[0] if theta.kind == "vector" else 1))
    out = np.zeros((module.spinor_dim, d), dtype=complex)
    for idx, v in theta.components():
        if not np.any(v):
            continue
        out += np.outer(module.product(idx) @ psi, _colour_vector(v, theta.kind, rep, d))
    return out


def clifford_action(xi, Psi: np.ndarray, module: CliffordModule, rep=None) -> np.ndarray:
    """``sum_I g_I . xi^I(Psi)``; ``xi`` is a FormValue or an iterable of them (mixed degree).

    Endomorphism values act on the colour factor directly, Lie values through ``rep``.
    """
    forms = [xi] if isinstance(xi, FormValue) else list(xi)
    Psi = np.asarray(Psi, dtype=complex)
    if Psi.ndim != 2 or Psi.shape[0] != module.spinor_dim:
        raise FormError("twisted spinor has wrong shape")
    out = np.zeros_like(Psi)
    for form in forms:
        if form.m != module.m:
            raise FormError("form and module dimension differ")
        for idx, v in form.components():
            if not np.any(v):
                continue
            if form.kind == "scalar":
                B = v * np.eye(Psi.shape[1])
            elif form.kind == "lie" and rep is not None:
                B = rep.rho(v)
            else:
                B = np.asarray(v)
            if B.shape != (Psi.shape[1],) * 2:
                raise FormError("endomorphism does not match colour dimension")
            out += module.product(idx) @ Psi @ B.T
    return out


def chiral_project(Psi: np.ndarray, module: CliffordModule, sign: int) -> np.ndarray:
    """``(1 + sign * chirality) Psi / 2``."""
    if module.chirality is None:
        raise ChiralityError("odd dimension has no chirality operator")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    Psi = np.asarray(Psi, dtype=complex)
    return 0.5 * (Psi + sign * np.tensordot(module.chirality, Psi, axes=(1, 0)))


def clifford_residual(module: CliffordModule) -> float:
    g = module.gammas
    eye = np.eye(module.spinor_dim)
    worst = 0.0
    for i in range(module.m):
        for j in range(module.m):
            r = g[i] @ g[j] + g[j] @ g[i] + 2.0 * (i == j) * eye
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


def random_spinor(rng, module: CliffordModule, colour_dim: int = 1, chirality: int = 0) -> np.ndarray:
    S = module.spinor_dim
    Psi = rng.normal(size=(S, colour_dim)) + 1j * rng.normal(size=(S, colour_dim))
    if chirality:
        Psi = chiral_project(Psi, module, chirality)
    return Psi


def one_form_product_hodge(alpha: FormValue, theta: FormValue) -> dict[int, FormValue]:
    """``alpha . theta`` through the exterior module only.

    ``alpha . theta = alpha ^ theta - alpha _| theta`` and, for this Hodge star,
    ``alpha _| theta = -(-1)^{m r} *(alpha ^ *theta)``.
    """
    from .exterior import hodge_star, wedge
    m, r = theta.m, theta.degree
    out = {}
    if r < m:
        out[r + 1] = wedge(alpha, theta)
    if r > 0:
        out[r - 1] = hodge_star(wedge(alpha, hodge_star(theta))) * ((-1) ** (m * r))
    return out
