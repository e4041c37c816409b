"""Identity suites shared by the CLI and the acceptance tests.

Every suite returns a list of ``Check`` records: a name, the worst residual seen,
the tolerance it was held to and the verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .clifford import (build_clifford_module, chiral_basis, clifford_matrix, clifford_multiply,
                       clifford_residual, conjugation_sum, conjugation_sum_matrix, random_spinor,
                       one_form_product_hodge)
from .constants import TOLERANCES
from .current import (dim3_bilinears, dim3_bilinears_direct, dim3_closed_forms, dirac_current,
                      pairing_residual)
from .exterior import FormValue, hodge_star, increasing
from .gauge import antihermitian_residual, bracket_residual, killing_check, make_rep
from .index import chern_weil_ch, dual_curvature

CURRENT_REPS = (("su-standard", 2), ("su-adjoint", 2), ("u-standard", 1))


@dataclass
class Check:
    name: str
    residual: float
    tol: float
    samples: int = 1

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tol = float(self.tol)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)

    def record(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _tol(tols, key):
    return (tols or TOLERANCES)[key]


def clifford_relations(tols=None, max_m: int = 8) -> list[Check]:
    worst = max(clifford_residual(build_clifford_module(m)) for m in range(2, max_m + 1))
    return [Check("clifford_relations", worst, _tol(tols, "algebra"), max_m - 1)]


def conjugation_identity(rng, tols=None, samples: int = 100, max_m: int = 6) -> list[Check]:
    """``sum_i e_i Theta e_i = (-1)^r (2r - m) Theta`` on the blade algebra and in End(S)."""
    worst_abs, worst_mat, n = 0.0, 0.0, 0
    for m in range(2, max_m + 1):
        module = build_clifford_module(m)
        for r in range(m + 1):
            lam = (-1) ** r * (2 * r - m)
            for _ in range(samples):
                th = FormValue.random(rng, m, r)
                worst_abs = max(worst_abs, float(np.max(np.abs(conjugation_sum(th).coeffs - lam * th.coeffs),
                                                        initial=0.0)))
                lhs = conjugation_sum_matrix(th, module)
                worst_mat = max(worst_mat, float(np.max(np.abs(lhs - lam * clifford_matrix(th, module)))))
                n += 1
    tol = _tol(tols, "identity")
    return [Check("conjugation_blades", worst_abs, tol, n), Check("conjugation_matrices", worst_mat, tol, n)]


def one_form_identity(tols=None, m: int = 4) -> list[Check]:
    """Clifford product by basis one-forms against the exterior-module formula."""
    worst, n = 0.0, 0
    for i in range(m):
        alpha = FormValue.basis(m, (i,))
        for r in range(m + 1):
            for idx in increasing(m, r):
                th = FormValue.basis(m, idx)
                cl = clifford_multiply(alpha, th)
                ex = one_form_product_hodge(alpha, th)
                for deg in set(cl) | set(ex):
                    a = cl.get(deg, FormValue.zero(m, deg)).coeffs
                    b = ex.get(deg, FormValue.zero(m, deg)).coeffs
                    worst = max(worst, float(np.max(np.abs(a - b), initial=0.0)))
                n += 1
    return [Check("one_form_identity", worst, _tol(tols, "identity"), n)]


def chirality_flip(tols=None, max_m: int = 8) -> list[Check]:
    worst = 0.0
    for m in range(2, max_m + 1, 2):
        mod = build_clifford_module(m)
        S = mod.spinor_dim
        Pp = 0.5 * (np.eye(S) + mod.chirality)
        for g in mod.gammas:
            worst = max(worst, float(np.max(np.abs(Pp @ g @ Pp))))
    return [Check("chirality_flip", worst, _tol(tols, "algebra"), max_m // 2)]


def hodge_involution(rng, tols=None, max_m: int = 6, samples: int = 5) -> list[Check]:
    worst, n = 0.0, 0
    for m in range(2, max_m + 1):
        for k in range(m + 1):
            for _ in range(samples):
                a = FormValue.random(rng, m, k)
                ss = hodge_star(hodge_star(a)).coeffs - (-1) ** (k * (m - k)) * a.coeffs
                worst = max(worst, float(np.max(np.abs(ss), initial=0.0)))
                n += 1
    return [Check("hodge_involution", worst, _tol(tols, "identity"), n)]


def gauge_checks(tols=None) -> list[Check]:
    reps = [make_rep("su-standard", 2), make_rep("su-standard", 3), make_rep("su-adjoint", 2),
            make_rep("su-adjoint", 3), make_rep("u-standard", 2), make_rep("sym", 2, 3)]
    br = max(bracket_residual(r) for r in reps)
    ah = max(antihermitian_residual(r) for r in reps)
    kl = max(killing_check(N) for N in (2, 3, 4))
    return [Check("rep_brackets", br, _tol(tols, "rep"), len(reps)),
            Check("rep_antihermitian", ah, _tol(tols, "rep"), len(reps)),
            Check("killing_form", kl, _tol(tols, "killing"), 3)]


def chiral_current(rng, tols=None, samples: int = 1000, dims=(2, 4, 6)) -> list[Check]:
    """``J(Psi^+-) = 0`` for chiral twisted spinors, batched."""
    worst, n = 0.0, 0
    for m in dims:
        mod = build_clifford_module(m)
        for name, N in CURRENT_REPS:
            rep = make_rep(name, N)
            for sign in (1, -1):
                B = chiral_basis(mod, sign)
                c = rng.normal(size=(samples, B.shape[1], rep.dim)) + 1j * rng.normal(size=(samples, B.shape[1], rep.dim))
                Psi = np.einsum("sk,nkd->nsd", B, c)
                Psi /= np.linalg.norm(Psi, axis=(1, 2), keepdims=True)
                J = dirac_current(Psi, mod, rep)
                worst = max(worst, float(np.max(np.linalg.norm(J, axis=(1, 2)))))
                n += samples
    return [Check("chiral_current_vanishing", worst, _tol(tols, "identity"), n)]


def pairing_identity(rng, tols=None, samples: int = 500, dims=(2, 3, 4)) -> list[Check]:
    """``-1/2 <Psi, K_eta Psi> = <eta, J(Psi)>`` for unit Psi and unit-scale eta."""
    worst, n = 0.0, 0
    for m in dims:
        mod = build_clifford_module(m)
        for name, N in CURRENT_REPS:
            rep = make_rep(name, N)
            for _ in range(samples):
                Psi = random_spinor(rng, mod, rep.dim)
                Psi /= np.linalg.norm(Psi)
                eta = rng.normal(size=(m, rep.algebra.dim))
                worst = max(worst, pairing_residual(Psi, eta, mod, rep))
                n += 1
    return [Check("pairing_identity", worst, _tol(tols, "identity"), n)]


def dim3_bilinear_checks(rng, tols=None, samples: int = 50) -> list[Check]:
    worst_direct, worst_closed, n = 0.0, 0.0, 0
    for N in (2, 3, 4):
        rep = make_rep("su-standard", N)
        for _ in range(samples):
            Psi = rng.normal(size=(2, N)) + 1j * rng.normal(size=(2, N))
            b = dim3_bilinears(Psi, rep)
            worst_direct = max(worst_direct, float(np.max(np.abs(b - dim3_bilinears_direct(Psi, rep)))))
            worst_closed = max(worst_closed, float(np.max(np.abs(b - dim3_closed_forms(Psi)))))
            n += 1
    tol = _tol(tols, "identity")
    return [Check("dim3_bilinears_current", worst_direct, tol, n),
            Check("dim3_bilinears_closed_forms", worst_closed, tol, n)]


def ch_parity(rng, tols=None, samples: int = 20) -> list[Check]:
    """``ch_k(-F^T) = (-1)^k ch_k(F)`` on random anti-Hermitian curvature values."""
    worst, n = 0.0, 0
    for m in (2, 4, 6):
        for N in (1, 2, 3):
            for _ in range(samples):
                z = rng.normal(size=(m, m, N, N)) + 1j * rng.normal(size=(m, m, N, N))
                z = z - np.conj(np.swapaxes(z, -1, -2))
                z = z - np.swapaxes(z, 0, 1)
                F = FormValue(m, 2, 0.25 * z, "endo")
                for k in range(1, m // 2 + 1):
                    a = chern_weil_ch(dual_curvature(F), k).coeffs
                    b = chern_weil_ch(F, k).coeffs
                    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
                    worst = max(worst, float(np.max(np.abs(a - (-1) ** k * b), initial=0.0)) / scale)
                n += 1
    return [Check("ch_parity", worst, _tol(tols, "identity"), n)]


def identity_suites(rng, tols=None, samples: int = 20) -> list[Check]:
    """All algebraic suites; ``samples`` scales the random sampling."""
    out = []
    out += clifford_relations(tols)
    out += conjugation_identity(rng, tols, samples=max(1, samples // 4))
    out += one_form_identity(tols)
    out += chirality_flip(tols)
    out += hodge_involution(rng, tols)
    out += gauge_checks(tols)
    out += chiral_current(rng, tols, samples=samples * 5)
    out += pairing_identity(rng, tols, samples=samples)
    out += dim3_bilinear_checks(rng, tols, samples=samples)
    out += ch_parity(rng, tols, samples=max(1, samples // 4))
    return out


def all_passed(checks) -> bool:
    return all(c.passed for c in checks) and all(math.isfinite(c.residual) for c in checks)
