"""Dirac current, the perturbation operator K_eta and the dimension-3 bilinear system.

The Hermitian product on twisted spinors is ``<Psi, Phi> = vdot(Psi, Phi)``
(conjugate-linear in the first slot).  ``J[k, a] = -1/2 <Psi, g_k rho(s_a) Psi>``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .clifford import CliffordModule, build_clifford_module
from .constants import REALITY_TOL
from .exterior import FormValue
from .gauge import GaugeRep


class CurrentConsistencyError(RuntimeError):
    """A bilinear that must be real has a significant imaginary part."""


class ShapeError(ValueError):
    pass


def _check(Psi, module, rep):
    Psi = np.asarray(Psi, dtype=complex)
    if Psi.shape[-2:] != (module.spinor_dim, rep.dim):
        raise ShapeError(f"twisted spinor shape {Psi.shape[-2:]} != {(module.spinor_dim, rep.dim)}")
    return Psi


def current_raw(Psi, module: CliffordModule, rep: GaugeRep) -> np.ndarray:
    """Complex bilinears ``-1/2 <Psi, g_k rho(s_a) Psi>``; accepts leading batch axes."""
    Psi = _check(Psi, module, rep)
    return -0.5 * np.einsum("...si,kst,...tj,aij->...ka", Psi.conj(), module.gammas, Psi, rep.mats)


def dirac_current(Psi, module: CliffordModule, rep: GaugeRep, tol: float = REALITY_TOL) -> np.ndarray:
    """Real current coefficients, shape ``(..., m, dim g)``."""
    raw = current_raw(Psi, module, rep)
    scale = np.maximum(1.0, np.sum(np.abs(np.asarray(Psi)) ** 2, axis=(-2, -1)))
    imag = np.max(np.abs(raw.imag), axis=(-2, -1)) / scale
    if np.any(imag > tol):
        raise CurrentConsistencyError(f"imaginary part {np.max(imag):.3e} in Dirac current")
    return raw.real


def current_norm(Psi, module, rep) -> np.ndarray:
    return np.linalg.norm(dirac_current(Psi, module, rep), axis=(-2, -1))


def eta_coords(eta, rep: GaugeRep) -> np.ndarray:
    """Coordinates ``(m, dim g)`` of a Lie-valued 1-form (FormValue or array)."""
    if isinstance(eta, FormValue):
        if eta.degree != 1:
            raise ShapeError("eta must be a 1-form")
        eta = eta.coeffs
    eta = np.asarray(eta)
    if eta.ndim == 3:
        return rep.algebra.coords(eta)
    if eta.ndim == 2 and eta.shape[1] == rep.algebra.dim:
        return eta
    raise ShapeError("eta must have shape (m, N, N) or (m, dim g)")


def k_eta_matrix(eta, module: CliffordModule, rep: GaugeRep) -> np.ndarray:
    """``K_eta = sum_k g_k (x) rho(eta_k)`` acting on flattened ``(S, d)`` arrays."""
    c = eta_coords(eta, rep)
    if c.shape[0] != module.m:
        raise ShapeError("eta has wrong number of frame components")
    R = rep.rho_coords(c)  # (m, d, d)
    return sum(np.kron(module.gammas[k], R[k]) for k in range(module.m))


def k_eta_apply(eta, Psi, module: CliffordModule, rep: GaugeRep) -> np.ndarray:
    Psi = _check(Psi, module, rep)
    c = eta_coords(eta, rep)
    if c.shape[0] != module.m:
        raise ShapeError("eta has wrong number of frame components")
    R = rep.rho_coords(c)
    return np.einsum("kst,...tj,kij->...si", module.gammas, Psi, R)


def eta_current_pairing(eta, J, rep) -> float:
    """``<eta, J>`` with the orthonormal -2Tr basis: plain coordinate contraction."""
    return float(np.real(np.sum(eta_coords(eta, rep) * J)))


def pairing_residual(Psi, eta, module, rep) -> float:
    """``| -1/2 <Psi, K_eta Psi> - <eta, J(Psi)> |``."""
    Psi = _check(Psi, module, rep)
    lhs = -0.5 * np.vdot(Psi, k_eta_apply(eta, Psi, module, rep)).real
    return abs(lhs - eta_current_pairing(eta, dirac_current(Psi, module, rep), rep))


# -- dimension 3 -------------------------------------------------------------

DIM3_ORDER = (("e3", "H"), ("e1", "X"), ("e2", "Y"), ("e1", "Y"), ("e2", "X"),
              ("e1", "H"), ("e2", "H"), ("e3", "Y"), ("e3", "X"))


def su2_triple(N: int, k: int) -> dict[str, np.ndarray]:
    """The elements X_k, Y_k, H_k spanning an su(2) inside su(N) (colour indices 0 and k)."""
    E = lambda r, s: np.eye(N, dtype=complex)[:, [r]] @ np.eye(N, dtype=complex)[[s], :]
    return {"Y": -0.5 * (E(0, k) - E(k, 0)),
            "X": -0.5j * (E(0, k) + E(k, 0)),
            "H": -0.5j * (E(0, 0) - E(k, k))}


def _dim3_check(Psi, rep):
    if rep.kind != "standard":
        raise ShapeError("dimension-3 bilinears need the standard representation")
    Psi = np.asarray(Psi, dtype=complex)
    if Psi.shape != (2, rep.dim) or rep.dim < 2:
        raise ShapeError("dimension-3 bilinears need Psi of shape (2, N), N >= 2")
    return Psi


def dim3_bilinears(Psi, rep: GaugeRep) -> np.ndarray:
    """``<e_j . st(T_k) Psi, Psi>`` in the fixed order, shape ``(N-1, 9)``.

    Evaluated through the current: the bilinear is ``-2 J_j(T)`` where
    ``J_j(T) = sum_a J[j, a] coords_a(T)``.
    """
    Psi = _dim3_check(Psi, rep)
    module = build_clifford_module(3)
    J = dirac_current(Psi, module, rep)
    out = np.zeros((rep.dim - 1, 9))
    for k in range(1, rep.dim):
        T = su2_triple(rep.dim, k)
        for n, (e, name) in enumerate(DIM3_ORDER):
            j = int(e[1]) - 1
            out[k - 1, n] = -2.0 * J[j] @ rep.algebra.coords(T[name]).real
    return out


def dim3_bilinears_direct(Psi, rep: GaugeRep) -> np.ndarray:
    """Same bilinears from the operators ``g_j T`` directly."""
    Psi = _dim3_check(Psi, rep)
    g = build_clifford_module(3).gammas
    out = np.zeros((rep.dim - 1, 9))
    for k in range(1, rep.dim):
        T = su2_triple(rep.dim, k)
        for n, (e, name) in enumerate(DIM3_ORDER):
            j = int(e[1]) - 1
            out[k - 1, n] = np.vdot(Psi, g[j] @ Psi @ T[name].T).real
    return out


def dim3_closed_forms(Psi) -> np.ndarray:
    """Closed forms of the nine bilinears in the components ``Psi[spinor, colour]``."""
    Psi = np.asarray(Psi, dtype=complex)
    N = Psi.shape[1]
    out = np.zeros((N - 1, 9))
    for k in range(1, N):
        a, b, c, d = Psi[0, 0], Psi[0, k], Psi[1, 0], Psi[1, k]
        cj = np.conj
        out[k - 1] = [
            0.5 * (abs(b) ** 2 + abs(c) ** 2 - abs(a) ** 2 - abs(d) ** 2),
            (-a * cj(d) - c * cj(b)).real,
            (a * cj(d) - c * cj(b)).real,
            (a * cj(d) + c * cj(b)).imag,
            (a * cj(d) - c * cj(b)).imag,
            (b * cj(d) - a * cj(c)).real,
            (a * cj(c) - b * cj(d)).imag,
            (a * cj(b) - c * cj(d)).imag,
            (c * cj(d) - a * cj(b)).real,
        ]
    return out


# -- minimisation over the unit sphere ---------------------------------------

@dataclass
class SphereMinimum:
    value: float
    psi: np.ndarray
    restarts: int
    converged: int


def _unpack(v, shape):
    n = v.size // 2
    return (v[:n] + 1j * v[n:]).reshape(shape)


def current_min_on_sphere(module: CliffordModule, rep: GaugeRep, restarts: int = 64,
                          seed: int = 0, threads: int | None = None) -> SphereMinimum:
    """Multi-start minimum of ``||J(Psi)||`` over ``||Psi|| = 1``.

    Each restart runs Levenberg-Marquardt (trust-region when underdetermined) on
    ``J(v/|v|)``; restarts use independent child seeds of ``seed`` so the result
    does not depend on ``threads``.
    """
    shape = (module.spinor_dim, rep.dim)
    n = 2 * shape[0] * shape[1]
    # LM needs at least as many residuals as unknowns
    method = "lm" if module.m * rep.algebra.dim >= n else "trf"

    def resid(v):
        Psi = _unpack(v, shape)
        Psi = Psi / np.linalg.norm(Psi)
        return current_raw(Psi, module, rep).real.ravel()

    def run(ss):
        rng = np.random.default_rng(ss)
        v0 = rng.normal(size=n)
        sol = least_squares(resid, v0, method=method, xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=200 * n)
        Psi = _unpack(sol.x, shape)
        Psi = Psi / np.linalg.norm(Psi)
        return float(np.linalg.norm(resid(sol.x))), Psi, sol.status > 0

    children = np.random.SeedSequence(seed).spawn(restarts)
    workers = threads or min(restarts, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, children))
    else:
        results = [run(c) for c in children]
    best = min(results, key=lambda r: r[0])
    return SphereMinimum(best[0], best[1], restarts, sum(r[2] for r in results))
