"""Explicit Dirac-Yang-Mills pairs on flat R^4 from the BPST instanton and twistor spinors.

Chart: ``q = x1 + x2 i + x3 j + x4 k``.  The connection is ``A = Im(conj(q) dq) / (1 + |q|^2)``
and its curvature ``F = d conj(q) ^ dq / (1 + |q|^2)^2``, with imaginary quaternions
embedded in su(2) by ``i, j, k -> -i s1, -i s2, -i s3``.  With the orientation
``e^1 ^ ... ^ e^4`` this F is anti-self-dual.  ASD two-forms annihilate positive
chirality spinors for the gamma matrices of ``clifford``, so the solution
``Psi = F . phi`` is built from a twistor spinor whose constant part has
chirality ``SURVIVING_CHIRALITY = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clifford import CliffordModule, build_clifford_module, chiral_basis, clifford_tensor_product
from .constants import IDENTITY_TOL
from .current import current_norm
from .exterior import FormValue
from .fieldcalc import (FDScheme, cov_codifferential, cov_exterior_derivative, dirac_apply,
                        observed_orders)
from .gauge import GaugeRep, rep_adjoint, su_basis

# chirality of spinors that survive Clifford multiplication by an ASD 2-form
SURVIVING_CHIRALITY = -1

QUAT_UNITS = np.eye(4)


class ChiralityWarning(UserWarning):
    """The requested construction is annihilated by chirality."""


# -- quaternions --------------------------------------------------------------

def qmul(p, q) -> np.ndarray:
    """Hamilton product on arrays ``(..., 4)`` in the basis (1, i, j, k)."""
    p, q = np.asarray(p), np.asarray(q)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ], axis=-1)


def qconj(q) -> np.ndarray:
    q = np.asarray(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


_EMB = np.array([np.eye(2, dtype=complex)] + [-1j * s for s in (
    np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]]))])


def quat_to_matrix(q) -> np.ndarray:
    """Algebra embedding H -> M_2(C); imaginary quaternions land in su(2)."""
    return np.tensordot(np.asarray(q, dtype=float), _EMB, axes=(-1, 0))


@dataclass(frozen=True)
class Quaternion:
    c: tuple

    def __mul__(self, other):
        return Quaternion(tuple(qmul(self.c, other.c)))

    def conj(self):
        return Quaternion(tuple(qconj(self.c)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.c))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.c)


# -- BPST -------------------------------------------------------------------

@dataclass(frozen=True)
class BPST:
    """Instanton of scale ``scale`` centred at ``center``: ``q = (x - center) / scale``."""

    scale: float = 1.0
    center: tuple = (0.0, 0.0, 0.0, 0.0)

    def _q(self, x):
        return (np.asarray(x, dtype=float) - np.asarray(self.center)) / self.scale

    def connection(self, x) -> np.ndarray:
        """``A_k(x)``, shape ``(4, 2, 2)``."""
        q = self._q(x)
        im = qmul(qconj(q)[None, :], QUAT_UNITS) * np.array([0.0, 1, 1, 1])
        return quat_to_matrix(im) / (self.scale * (1.0 + q @ q))

    def curvature_quaternions(self) -> np.ndarray:
        """``F0[k, l] = conj(e_k) e_l - conj(e_l) e_k`` (so F = F0 / (scale^2 (1+|q|^2)^2))."""
        prod = qmul(qconj(QUAT_UNITS)[:, None, :], QUAT_UNITS[None, :, :])
        return prod - np.swapaxes(prod, 0, 1)

    def profile(self, x):
        """``1 / (scale^2 (1 + |q|^2)^2)`` for points ``(..., 4)``."""
        q = self._q(x)
        return 1.0 / (self.scale ** 2 * (1.0 + np.sum(q * q, axis=-1)) ** 2)

    def curvature(self, x) -> FormValue:
        F = quat_to_matrix(self.curvature_quaternions()) * self.profile(x)
        return FormValue(4, 2, F, "lie")

    def connection_field(self):
        return self.connection

    def curvature_field(self):
        return self.curvature


def bpst_connection(x, scale=1.0, center=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    return BPST(scale, tuple(center)).connection(x)


def bpst_curvature(x, scale=1.0, center=(0.0, 0.0, 0.0, 0.0)) -> FormValue:
    return BPST(scale, tuple(center)).curvature(x)


def ch2_density_bpst(points, inst: BPST = BPST()) -> np.ndarray:
    """Vectorised top coefficient of ``ch_2 = (1/2)(i/2pi)^2 Tr(F ^ F)``.

    Uses ``Tr(emb(p) emb(q)) = 2 Re(pq)`` on the constant quaternion part of F.
    """
    F0 = inst.curvature_quaternions()
    # Tr(F^F)_{1234} = 2 (Tr F01 F23 - Tr F02 F13 + Tr F03 F12) for the constant part
    tr = lambda a, b: 2.0 * qmul(F0[a], F0[b])[0]
    top = 2.0 * (tr((0, 1), (2, 3)) - tr((0, 2), (1, 3)) + tr((0, 3), (1, 2)))
    return 0.5 * (1j / (2 * np.pi)) ** 2 * top * inst.profile(points) ** 2


# -- twistor spinors ----------------------------------------------------------

@dataclass(frozen=True)
class TwistorSpinorSpec:
    psi0: np.ndarray
    psi1: np.ndarray
    chirality0: int = 0  # 0: no constraint; otherwise psi0 in this eigenspace, psi1 in the other

    def __post_init__(self):
        if self.chirality0 not in (-1, 0, 1):
            raise ValueError("chirality flag must be -1, 0 or +1")
        if self.chirality0:
            mod = build_clifford_module(4)
            for v, s in ((self.psi0, self.chirality0), (self.psi1, -self.chirality0)):
                if np.linalg.norm(mod.chirality @ v - s * v) > 1e-12 * max(1.0, np.linalg.norm(v)):
                    raise ValueError("twistor spinor components violate the chirality flags")


def random_twistor_spec(rng, chirality0: int, parallel: bool = False) -> TwistorSpinorSpec:
    mod = build_clifford_module(4)
    B0, B1 = chiral_basis(mod, chirality0), chiral_basis(mod, -chirality0)
    c = lambda n: rng.normal(size=n) + 1j * rng.normal(size=n)
    psi1 = np.zeros(4, complex) if parallel else B1 @ c(B1.shape[1])
    return TwistorSpinorSpec(B0 @ c(B0.shape[1]), psi1, chirality0)


def twistor_field(spec: TwistorSpinorSpec, module: CliffordModule | None = None):
    """``x -> psi0 + 1/4 sum_k x_k g_k psi1``."""
    module = module or build_clifford_module(4)
    g_psi1 = np.einsum("kst,t->ks", module.gammas, spec.psi1)
    psi0 = np.asarray(spec.psi0, dtype=complex)

    def phi(x):
        return psi0 + 0.25 * np.asarray(x, dtype=float) @ g_psi1
    return phi


def flat_dirac(phi, x, scheme: FDScheme, module: CliffordModule) -> np.ndarray:
    return sum(module.gammas[k] @ scheme.derivative(phi, x, k) for k in range(module.m))


def twistor_residual(phi, x, scheme: FDScheme, module: CliffordModule) -> float:
    """``max_k || d_k phi + 1/4 g_k Dslash phi ||`` (m = 4)."""
    D = flat_dirac(phi, x, scheme, module)
    return max(float(np.linalg.norm(scheme.derivative(phi, x, k) + module.gammas[k] @ D / module.m))
               for k in range(module.m))


# -- Clifford products with Lie-valued forms -----------------------------------

def d_theta_apply(Theta, phi, x, scheme: FDScheme, module: CliffordModule, rep: GaugeRep) -> np.ndarray:
    """``D^Theta phi = sum_k e_k . Theta . d_k phi``."""
    x0 = np.asarray(x, dtype=float)
    T = Theta(x0)
    return sum(module.gammas[k] @ clifford_tensor_product(T, scheme.derivative(phi, x0, k), module, rep)
               for k in range(module.m))


def product_field(Theta, phi, module, rep):
    """``x -> Theta(x) . phi(x)`` (Clifford tensor product)."""
    return lambda y: clifford_tensor_product(Theta(y), phi(y), module, rep)


def product_rule_residual(A, Theta, phi, x, scheme, module, rep) -> float:
    """``|| D(Theta.phi) - ((d_A + delta_A) Theta).phi - D^Theta phi ||``."""
    x0 = np.asarray(x, dtype=float)
    lhs = dirac_apply(A, product_field(Theta, phi, module, rep), x0, scheme, module, rep)
    out = lhs - d_theta_apply(Theta, phi, x0, scheme, module, rep)
    p = phi(x0)
    T0 = Theta(x0)
    if T0.degree < module.m:
        out = out - clifford_tensor_product(cov_exterior_derivative(A, Theta, x0, scheme), p, module, rep)
    if T0.degree > 0:
        out = out - clifford_tensor_product(cov_codifferential(A, Theta, x0, scheme), p, module, rep)
    return float(np.linalg.norm(out))


# -- solutions -------------------------------------------------------------------

@dataclass
class Solution:
    instanton: BPST
    spec: TwistorSpinorSpec
    module: CliffordModule
    rep: GaugeRep
    A: object = field(repr=False)
    F: object = field(repr=False)
    Psi: object = field(repr=False)


def build_solution(chirality: int = SURVIVING_CHIRALITY, rng=None, parallel: bool = False,
                   spec: TwistorSpinorSpec | None = None, instanton: BPST = BPST()) -> Solution:
    """``(A, Psi = F . phi)`` with phi a chiral twistor spinor whose constant part has ``chirality``.

    With the non-surviving chirality the product vanishes identically; a
    ``ChiralityWarning`` is emitted in that case.
    """
    import warnings

    module = build_clifford_module(4)
    rep = rep_adjoint(2)
    if spec is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        spec = random_twistor_spec(rng, chirality, parallel)
    if spec.chirality0 and spec.chirality0 != SURVIVING_CHIRALITY:
        warnings.warn("ASD curvature annihilates this chirality: Psi is identically zero",
                      ChiralityWarning, stacklevel=2)
    phi = twistor_field(spec, module)
    Psi = product_field(instanton.curvature, phi, module, rep)
    return Solution(instanton, spec, module, rep, instanton.connection, instanton.curvature, Psi)


def sample_points(rng, n_core: int = 200, n_far: int = 20, core_radius: float = 3.0,
                  far=(5.0, 10.0)) -> np.ndarray:
    """Quasi-random points in the ball ``|x| <= core_radius`` plus a far shell."""
    from scipy.special import ndtri
    from scipy.stats import qmc

    def ball(n, r0, r1):
        u = qmc.Halton(1, seed=rng).random(n)
        g = qmc.Halton(4, seed=rng).random(n)
        d = ndtri(np.clip(g, 1e-12, 1 - 1e-12))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = (r0 ** 4 + u[:, 0] * (r1 ** 4 - r0 ** 4)) ** 0.25
        return d * r[:, None]

    pts = [ball(n_core, 0.0, core_radius)]
    if n_far:
        pts.append(ball(n_far, *far))
    return np.concatenate(pts)


def asd_residual(F: FormValue) -> float:
    from .exterior import hodge_star
    return float(np.max(np.abs(hodge_star(F).coeffs + F.coeffs)))


@dataclass
class VerificationReport:
    hs: list
    order: int
    dirac: list
    ym: list
    bianchi: list
    current: float
    orders: dict
    records: list

    def passed(self, min_order: float, current_tol: float = IDENTITY_TOL) -> bool:
        return (self.current <= current_tol
                and all(min(v) >= min_order for v in self.orders.values() if v))


def verify_solution(sol: Solution, points, hs=(2e-2, 1e-2, 5e-3), order: int = 4) -> VerificationReport:
    """Dirac, Yang-Mills and Bianchi residual ladders plus the pointwise current."""
    module, rep = sol.module, sol.rep
    res = {"dirac": [], "ym": [], "bianchi": []}
    records = []
    for h in hs:
        sch = FDScheme(h, order)
        worst = {"dirac": 0.0, "ym": 0.0, "bianchi": 0.0}
        for x in points:
            r = {
                "dirac": float(np.linalg.norm(dirac_apply(sol.A, sol.Psi, x, sch, module, rep))),
                "ym": cov_codifferential(sol.A, sol.F, x, sch).norm(),
                "bianchi": cov_exterior_derivative(sol.A, sol.F, x, sch).norm(),
            }
            for k in worst:
                worst[k] = max(worst[k], r[k])
            records.append({"point": [float(v) for v in x], "dirac_res": r["dirac"],
                            "ym_res": r["ym"], "bianchi_res": r["bianchi"], "h": h, "order": order})
        for k in res:
            res[k].append(worst[k])
    cur = 0.0
    for i, x in enumerate(points):
        c = float(current_norm(sol.Psi(np.asarray(x, float)), module, rep))
        cur = max(cur, c)
    for rec in records:
        rec["current_norm"] = cur
    orders = {k: observed_orders(v, list(hs)) for k, v in res.items()}
    return VerificationReport(list(hs), order, res["dirac"], res["ym"], res["bianchi"], cur, orders, records)


def su2_coords(F: FormValue) -> np.ndarray:
    """Adjoint coordinates of a Lie-valued form's components."""
    return su_basis(2).coords(F.coeffs)

