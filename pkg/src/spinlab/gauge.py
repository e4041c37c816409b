"""su(N) / u(N) bases orthonormal for ``<Z, W> = -2 Tr(ZW)`` and their representations.

Basis order for su(N): for each pair ``r < s`` the off-diagonal elements
``X_rs = -(i/2)(E_rs + E_sr)`` and ``Y_rs = -(1/2)(E_rs - E_sr)``, then the diagonal
elements ``H_l = -(i/2) sqrt(2/(l(l+1))) diag(1, .., 1, -l, 0, ..)`` for l = 1..N-1.
For N = 2 this is ``(-i s1/2, -i s2/2, -i s3/2)``.  u(N) appends ``i Id / sqrt(2N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .constants import KILLING_TOL


class GaugeError(ValueError):
    """Invalid rank, representation label or Lie-algebra element."""


@dataclass(frozen=True, eq=False)
class GaugeAlgebra:
    N: int
    kind: str  # "su" or "u"
    basis: np.ndarray  # (dim, N, N)
    multiplier: float = 1.0
    labels: tuple = ()

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def inner(self, x, y) -> float:
        return self.multiplier * (-2.0) * np.trace(np.asarray(x) @ np.asarray(y)).real

    def coords(self, x) -> np.ndarray:
        """Coordinates of ``x`` in the basis: ``-2 Tr(s_a x)`` (complex-bilinear)."""
        x = np.asarray(x)
        return -2.0 * np.einsum("aij,...ji->...a", self.basis, x)

    def element(self, c) -> np.ndarray:
        return np.tensordot(np.asarray(c), self.basis, axes=(-1, 0))

    def gram(self) -> np.ndarray:
        return -2.0 * np.einsum("aij,bji->ab", self.basis, self.basis).real

    def random_element(self, rng) -> np.ndarray:
        return self.element(rng.normal(size=self.dim))


def _su_elements(N: int):
    out, labels = [], []
    for r in range(N):
        for s in range(r + 1, N):
            X = np.zeros((N, N), dtype=complex)
            X[r, s] = X[s, r] = -0.5j
            Y = np.zeros((N, N), dtype=complex)
            Y[r, s], Y[s, r] = -0.5, 0.5
            out += [X, Y]
            labels += [f"X{r}{s}", f"Y{r}{s}"]
    for l in range(1, N):
        d = np.zeros(N)
        d[:l] = 1.0
        d[l] = -l
        out.append(-0.5j * math.sqrt(2.0 / (l * (l + 1))) * np.diag(d).astype(complex))
        labels.append(f"H{l}")
    return out, labels


@lru_cache(maxsize=None)
def su_basis(N: int) -> GaugeAlgebra:
    if int(N) != N or N < 2:
        raise GaugeError(f"su(N) needs N >= 2, got {N}")
    els, labels = _su_elements(N)
    basis = np.array(els)
    basis.setflags(write=False)
    return GaugeAlgebra(N, "su", basis, labels=tuple(labels))


@lru_cache(maxsize=None)
def u_basis(N: int) -> GaugeAlgebra:
    if int(N) != N or N < 1:
        raise GaugeError(f"u(N) needs N >= 1, got {N}")
    els, labels = _su_elements(N) if N > 1 else ([], [])
    els.append(1j * np.eye(N) / math.sqrt(2 * N))
    labels.append("Z")
    basis = np.array(els)
    basis.setflags(write=False)
    return GaugeAlgebra(N, "u", basis, labels=tuple(labels))


def gauge_algebra(kind: str, N: int) -> GaugeAlgebra:
    if kind == "su":
        return su_basis(N)
    if kind == "u":
        return u_basis(N)
    raise GaugeError(f"unknown algebra kind {kind!r}")


@dataclass(frozen=True, eq=False)
class GaugeRep:
    algebra: GaugeAlgebra
    mats: np.ndarray  # (dim g, d, d): rho_*(s_a)
    kind: str
    label: str = field(default="")

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    def rho(self, x) -> np.ndarray:
        """``rho_*(x)`` for a Lie-algebra matrix ``x`` (or a stack of them)."""
        if self.kind == "standard":
            return np.asarray(x)
        return np.tensordot(self.algebra.coords(x), self.mats, axes=(-1, 0))

    def rho_coords(self, c) -> np.ndarray:
        return np.tensordot(np.asarray(c), self.mats, axes=(-1, 0))


def rep_standard(N: int, kind: str = "su") -> GaugeRep:
    alg = gauge_algebra(kind, N)
    return GaugeRep(alg, alg.basis, "standard", f"{kind}({N}) standard")


def adjoint_matrices(alg: GaugeAlgebra) -> np.ndarray:
    """``(ad s_b)_{ac} = coords_a([s_b, s_c])``; real antisymmetric."""
    B = alg.basis
    comm = np.einsum("bij,cjk->bcik", B, B) - np.einsum("cij,bjk->bcik", B, B)
    ad = alg.coords(comm)  # (b, c, a)
    return np.real(np.transpose(ad, (0, 2, 1)))


def rep_adjoint(N: int, kind: str = "su") -> GaugeRep:
    alg = gauge_algebra(kind, N)
    return GaugeRep(alg, adjoint_matrices(alg).astype(complex), "adjoint", f"{kind}({N}) adjoint")


def sym_su2_matrices(l: int) -> np.ndarray:
    """Induced action of the su(2) basis on S^l(C^2), orthonormal monomial basis.

    Monomials ``e0^(l-j) e1^j`` scaled by ``sqrt(C(l, j))``; ``rho(X)`` acts as a derivation.
    """
    B = su_basis(2).basis
    scale = np.sqrt([math.comb(l, j) for j in range(l + 1)])
    out = np.zeros((3, l + 1, l + 1), dtype=complex)
    for a in range(3):
        X = B[a]
        M = np.zeros((l + 1, l + 1), dtype=complex)
        for j in range(l + 1):
            # X e0 = X00 e0 + X10 e1, X e1 = X01 e0 + X11 e1
            n0, n1 = l - j, j
            if n0:
                M[j, j] += n0 * X[0, 0]
                M[j + 1, j] += n0 * X[1, 0]
            if n1:
                M[j - 1, j] += n1 * X[0, 1]
                M[j, j] += n1 * X[1, 1]
        out[a] = (M * scale[None, :]) / scale[:, None]
    return out


def rep_sym_su2(l: int) -> GaugeRep:
    if int(l) != l or l < 0:
        raise GaugeError(f"symmetric power needs l >= 0, got {l}")
    return GaugeRep(su_basis(2), sym_su2_matrices(int(l)), "sym", f"sym^{l} su(2)")


def make_rep(name: str, N: int = 2, l: int = 1) -> GaugeRep:
    """``name`` in {"su-standard", "su-adjoint", "u-standard", "u-adjoint", "sym"}."""
    if name == "sym":
        return rep_sym_su2(l)
    try:
        kind, rk = name.split("-")
    except ValueError:
        raise GaugeError(f"unknown representation {name!r}") from None
    if rk == "standard":
        return rep_standard(N, kind)
    if rk == "adjoint":
        return rep_adjoint(N, kind)
    raise GaugeError(f"unknown representation {name!r}")


def casimir(rep: GaugeRep) -> np.ndarray:
    return np.einsum("aij,ajk->ik", rep.mats, rep.mats)


def sym_casimir_value(l: int) -> float:
    """``sum_a rho(s_a)^2 = -c(l) Id`` with ``c(l) = l(l+2)/4``."""
    return l * (l + 2) / 4.0


def bracket_residual(rep: GaugeRep) -> float:
    alg, R = rep.algebra, rep.mats
    worst = 0.0
    for a in range(alg.dim):
        for b in range(alg.dim):
            x, y = alg.basis[a], alg.basis[b]
            lhs = rep.rho(x @ y - y @ x)
            rhs = R[a] @ R[b] - R[b] @ R[a]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def antihermitian_residual(rep: GaugeRep) -> float:
    return float(np.max(np.abs(rep.mats + np.conj(np.transpose(rep.mats, (0, 2, 1))))))


def killing_check(N: int) -> float:
    """``max |Tr(ad_X ad_Y) - 2N Tr(XY)|`` over su(N) basis pairs."""
    alg = su_basis(N)
    ad = adjoint_matrices(alg)
    lhs = np.einsum("aij,bji->ab", ad, ad)
    rhs = 2 * N * np.einsum("aij,bji->ab", alg.basis, alg.basis)
    res = float(np.max(np.abs(lhs - rhs)))
    if res > KILLING_TOL:
        raise GaugeError(f"Killing form identity violated: {res:.3e}")
    return res
