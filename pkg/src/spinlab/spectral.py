"""Plane-wave truncations of twisted Dirac operators on flat tori ``[0, L)^m``.

Basis vectors are ``e^{i k_n . x} (x) s (x) c`` with momenta ``k_n = 2 pi (n + delta) / L``
for integer modes ``|n|_inf <= K``; the flat index is ``(mode, spinor, colour)`` in
C order.  A connection ``A(x) = sum_p A_p e^{2 pi i p.x / L}`` couples modes by
convolution, so the operator is exactly ``D(A) = D_0 + sum_j g_j (x) rho(A_j)*`` and
affine families ``D(w + t eta) = D(w) + t K_eta`` are linear in ``t``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clifford import CliffordModule
from .constants import KERNEL_REL_TOL, OVERLAP_THRESHOLD
from .current import dirac_current
from .gauge import GaugeRep


class AliasingError(ValueError):
    """Cutoff too small for the connection's Fourier modes."""


class MatchingError(RuntimeError):
    """Eigenvector overlap fell below threshold even after grid refinement."""


class KernelAmbiguityWarning(UserWarning):
    """Eigenvalues sit close to the kernel tolerance."""


# -- connections ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FourierConnection:
    """``A(x) = sum_p modes[p] e^{2 pi i p.x / L}``; ``modes[p]`` has shape ``(m, N, N)``."""

    m: int
    N: int
    modes: dict
    L: float = 1.0

    def __post_init__(self):
        for p, c in self.modes.items():
            if len(p) != self.m or np.shape(c) != (self.m, self.N, self.N):
                raise ValueError(f"mode {p} has wrong shape")
        for p, c in self.modes.items():
            q = tuple(-v for v in p)
            partner = self.modes.get(q)
            if partner is None or not np.array_equal(partner, -np.conj(np.swapaxes(c, -1, -2))):
                raise ValueError(f"realness violated at mode {p}: need A_(-p) = -A_p^H")

    @classmethod
    def zero(cls, m, N, L=1.0):
        return cls(m, N, {}, L)

    @classmethod
    def from_half(cls, m, N, half: dict, L=1.0):
        """Complete ``{p: A_p}`` by the realness partners (the zero mode is made anti-Hermitian)."""
        modes = {}
        for p, c in half.items():
            c = np.asarray(c, dtype=complex)
            p = tuple(int(v) for v in p)
            if all(v == 0 for v in p):
                modes[p] = 0.5 * (c - np.conj(np.swapaxes(c, -1, -2)))
                continue
            modes[p] = c
            modes[tuple(-v for v in p)] = -np.conj(np.swapaxes(c, -1, -2))
        return cls(m, N, modes, L)

    @classmethod
    def constant(cls, coeffs, L=1.0):
        coeffs = np.asarray(coeffs, dtype=complex)
        m, N = coeffs.shape[0], coeffs.shape[1]
        return cls.from_half(m, N, {(0,) * m: coeffs}, L)

    @classmethod
    def random(cls, rng, m, N, band: int, amplitude: float = 1.0, L=1.0, algebra=None):
        """Band-limited random connection; coefficients drawn in ``algebra`` (default: u(N) matrices)."""
        def draw():
            if algebra is not None:
                re = algebra.element(rng.normal(size=(m, algebra.dim)))
                im = algebra.element(rng.normal(size=(m, algebra.dim)))
                return amplitude * (re + 1j * im) / 2
            z = rng.normal(size=(m, N, N)) + 1j * rng.normal(size=(m, N, N))
            return amplitude * z / 2
        half = {}
        for p in itertools.product(range(-band, band + 1), repeat=m):
            if p > tuple(-v for v in p) or all(v == 0 for v in p):
                half[p] = draw()
        zero = (0,) * m
        if zero in half and algebra is None:
            half[zero] = half[zero] - np.conj(np.swapaxes(half[zero], -1, -2))
        return cls.from_half(m, N, half, L)

    @property
    def band(self) -> int:
        return max((max(abs(v) for v in p) for p in self.modes), default=0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.m, self.N, self.N), dtype=complex)
        for p, c in self.modes.items():
            out += c * np.exp(2j * np.pi * np.dot(p, x) / self.L)
        return out

    def on_grid(self, pts) -> np.ndarray:
        """``A`` at a batch of points, shape ``(P, m, N, N)``."""
        pts = np.asarray(pts, dtype=float)
        if not self.modes:
            return np.zeros((len(pts), self.m, self.N, self.N), dtype=complex)
        keys = list(self.modes)
        phase = np.exp(2j * np.pi * pts @ np.array(keys, dtype=float).T / self.L)
        return np.einsum("pk,kjab->pjab", phase, np.array([self.modes[k] for k in keys]))

    def __add__(self, other):
        return self.combine(other, 1.0)

    def combine(self, other, t: float):
        """``self + t * other``."""
        if (self.m, self.N, self.L) != (other.m, other.N, other.L):
            raise ValueError("incompatible connections")
        modes = {p: c.copy() for p, c in self.modes.items()}
        for p, c in other.modes.items():
            modes[p] = modes[p] + t * c if p in modes else t * c
        return FourierConnection(self.m, self.N, modes, self.L)

    def rho_modes(self, rep: GaugeRep) -> dict:
        return {p: rep.rho(c) for p, c in self.modes.items()}

    def curvature_modes(self, rep: GaugeRep) -> dict:
        """Fourier modes of ``rho(F_jl)``, shape ``(m, m, d, d)`` each (band doubles)."""
        R = self.rho_modes(rep)
        m = self.m
        out: dict = {}

        def add(p, v):
            out[p] = out[p] + v if p in out else v
        for p, c in R.items():
            k = 2j * np.pi * np.asarray(p) / self.L
            add(p, k[:, None, None, None] * c[None, :] - k[None, :, None, None] * c[:, None])
        for p1, c1 in R.items():
            for p2, c2 in R.items():
                p = tuple(a + b for a, b in zip(p1, p2))
                add(p, np.einsum("jab,lbc->jlac", c1, c2) - np.einsum("lab,jbc->jlac", c2, c1))
        return {p: v for p, v in out.items() if np.any(v)} or {(0,) * m: np.zeros((m, m, rep.dim, rep.dim), complex)}


# -- truncated operators ------------------------------------------------------------------

@dataclass(frozen=True)
class Truncation:
    m: int
    K: int
    offsets: tuple
    L: float = 1.0

    @property
    def modes(self) -> np.ndarray:
        return np.array(list(itertools.product(range(-self.K, self.K + 1), repeat=self.m)), dtype=int)

    @property
    def momenta(self) -> np.ndarray:
        return 2 * np.pi * (self.modes + np.asarray(self.offsets)) / self.L

    def index_of(self, n) -> np.ndarray:
        """Flat mode index (mixed radix ``2K+1``); -1 outside the truncation."""
        n = np.asarray(n)
        inside = np.all(np.abs(n) <= self.K, axis=-1)
        w = (2 * self.K + 1) ** np.arange(self.m - 1, -1, -1)
        idx = (n + self.K) @ w
        return np.where(inside, idx, -1)


@dataclass(eq=False)
class TruncatedDirac:
    trunc: Truncation
    module: CliffordModule
    rep: GaugeRep
    H: np.ndarray
    conn: FourierConnection | None = None

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def hermiticity(self) -> float:
        return float(np.max(np.abs(self.H - self.H.conj().T)))


def _coupling(trunc: Truncation, module: CliffordModule, coeffs: dict, spin_ops, d: int) -> np.ndarray:
    """``sum_p sum_j spin_ops[j] (x) coeffs[p][j]`` placed on mode pairs ``(n, n - p)``."""
    modes = trunc.modes
    M = len(modes)
    S = module.spinor_dim
    H4 = np.zeros((M, S * d, M, S * d), dtype=complex)
    for p, c in coeffs.items():
        blk = sum(np.kron(spin_ops[j], c[j]) for j in range(len(spin_ops)))
        src = trunc.index_of(modes - np.asarray(p))
        ok = src >= 0
        H4[np.nonzero(ok)[0], :, src[ok], :] += blk
    return H4.reshape(M * S * d, M * S * d)


def assemble(conn: FourierConnection, K: int, offsets, module: CliffordModule, rep: GaugeRep,
             free: bool = True) -> TruncatedDirac:
    """Truncated twisted Dirac operator; ``free=False`` keeps only the coupling (i.e. K_A)."""
    m = module.m
    if conn.m != m:
        raise ValueError("connection and module dimension differ")
    if conn.modes and K < conn.band + 1:
        raise AliasingError(f"cutoff {K} must be at least band + 1 = {conn.band + 1}")
    offsets = tuple(float(o) for o in (offsets if offsets is not None else (0.0,) * m))
    trunc = Truncation(m, K, offsets, conn.L)
    d, S = rep.dim, module.spinor_dim
    H = _coupling(trunc, module, conn.rho_modes(rep), module.gammas, d) if conn.modes else \
        np.zeros((len(trunc.modes) * S * d,) * 2, dtype=complex)
    if free:
        k = trunc.momenta
        blocks = 1j * np.einsum("nj,jst->nst", k, module.gammas)
        M = len(k)
        H4 = H.reshape(M, S * d, M, S * d)
        eye = np.eye(d)
        for a in range(M):
            H4[a, :, a, :] += np.kron(blocks[a], eye)
    return TruncatedDirac(trunc, module, rep, H, conn)


def spectrum(D, vectors: bool = False):
    H = D.H if isinstance(D, TruncatedDirac) else D
    if vectors:
        return np.linalg.eigh(H)
    return np.linalg.eigvalsh(H)


def spectral_symmetry_residual(evals) -> float:
    ev = np.sort(evals)
    return float(np.max(np.abs(ev + ev[::-1]), initial=0.0))


def kernel_tolerance(evals, rel_tol: float = KERNEL_REL_TOL) -> float:
    return rel_tol * max(1.0, float(np.max(np.abs(evals), initial=0.0)))


def kernel_dim(D, rel_tol: float = KERNEL_REL_TOL) -> int:
    ev = spectrum(D)
    tol = kernel_tolerance(ev, rel_tol)
    near = np.sum((np.abs(ev) > tol) & (np.abs(ev) <= 100 * tol))
    if near:
        warnings.warn(f"{near} eigenvalues within a factor 100 of the kernel tolerance",
                      KernelAmbiguityWarning, stacklevel=2)
    return int(np.sum(np.abs(ev) <= tol))


# -- perturbation data ------------------------------------------------------------------

@dataclass(eq=False)
class Family:
    """Affine family ``H(t) = H0 + t H1`` of truncated operators."""

    H0: np.ndarray
    H1: np.ndarray
    D0: TruncatedDirac
    K_eta: TruncatedDirac

    def at(self, t):
        return self.H0 + t * self.H1


def family(omega: FourierConnection, eta: FourierConnection, K: int, offsets, module, rep) -> Family:
    D0 = assemble(omega, K, offsets, module, rep)
    Keta = assemble(eta, K, offsets, module, rep, free=False)
    return Family(D0.H, Keta.H, D0, Keta)


def weyl_constant(fam: Family, eta: FourierConnection, module, rep, grid: int = 8) -> float:
    """``max(||K_eta||_2, sup over a grid of the pointwise norm)``."""
    op = float(np.linalg.norm(fam.H1, 2)) if fam.H1.size else 0.0
    m = eta.m
    pts = np.array(list(itertools.product(np.arange(grid) / grid * eta.L, repeat=m)))
    sup = 0.0
    for x in pts:
        R = rep.rho(eta(x))
        K = sum(np.kron(module.gammas[j], R[j]) for j in range(m))
        sup = max(sup, float(np.linalg.norm(K, 2)))
    return max(op, sup)


@dataclass
class EigenBranch:
    branch_id: int
    t: np.ndarray
    values: np.ndarray
    overlaps: np.ndarray
    derivative: float = float("nan")
    simple: bool = False
    hf: float = float("nan")  # <K_eta psi0, psi0>
    first_order: float = float("nan")  # eigenvalue of P K_eta P in the adapted basis


def _clusters(evals, tol):
    groups, cur = [], [0]
    for i in range(1, len(evals)):
        if evals[i] - evals[i - 1] <= tol:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return groups


def adapted_basis(fam: Family, select=None, cluster_tol: float | None = None):
    """Eigen-data of ``H(0)`` with degenerate clusters rotated to diagonalise ``P K_eta P``.

    Returns ``(values, vectors, first_order, simple)`` for the selected indices.
    """
    w, V = np.linalg.eigh(fam.H0)
    tol = cluster_tol if cluster_tol is not None else kernel_tolerance(w) * 10
    first = np.zeros(len(w))
    simple = np.zeros(len(w), dtype=bool)
    for grp in _clusters(w, tol):
        Vc = V[:, grp]
        C = Vc.conj().T @ fam.H1 @ Vc
        mu, U = np.linalg.eigh(0.5 * (C + C.conj().T))
        V[:, grp] = Vc @ U
        w[grp] = np.mean(w[grp])
        first[grp] = mu
        sub = _clusters(mu, max(tol, 1e-9 * max(1.0, float(np.max(np.abs(mu))))))
        for s in sub:
            if len(s) == 1:
                simple[np.asarray(grp)[s]] = True
    idx = np.arange(len(w)) if select is None else np.asarray(select)
    return w[idx], V[:, idx], first[idx], simple[idx]


def _eig_at(fam, t):
    return np.linalg.eigh(fam.at(t))


def _match(prev_vecs, w, W, threshold, cluster_tol):
    """Match tracked vectors to new eigenpairs; returns (values, vectors, overlaps) or None."""
    groups = _clusters(w, cluster_tol)
    # restrict to clusters that matter: weight of each tracked vector in each cluster
    proj = W.conj().T @ prev_vecs  # (n_new, n_tracked)
    weights = np.array([np.sum(np.abs(proj[g]) ** 2, axis=0) for g in groups])  # (n_groups, n_tracked)
    relevant = [gi for gi in range(len(groups)) if np.max(weights[gi]) > 1e-3]
    slots = [gi for gi in relevant for _ in groups[gi]]
    cost = -weights[slots].T  # (tracked, slots)
    rows, cols = linear_sum_assignment(cost)
    assign: dict = {}
    for r, c in zip(rows, cols):
        assign.setdefault(slots[c], []).append(r)
    n = prev_vecs.shape[1]
    vals, vecs, ovl = np.zeros(n), np.zeros_like(prev_vecs), np.zeros(n)
    for gi, branches in assign.items():
        Wg = W[:, groups[gi]]
        Mx = Wg.conj().T @ prev_vecs[:, branches]  # (|g|, |b|)
        Xs, s, Yh = np.linalg.svd(Mx, full_matrices=False)
        if s.min() < threshold:
            return None
        new = Wg @ (Xs @ Yh)  # polar alignment with the previous vectors
        for j, b in enumerate(branches):
            vecs[:, b] = new[:, j]
            ovl[b] = s.min()
        vals[branches] = np.mean(w[groups[gi]]) if len(groups[gi]) > 1 else w[groups[gi][0]]
    # Rayleigh quotients inside clusters (spread of the cluster is below cluster_tol)
    multi = [b for gi, br in assign.items() if len(groups[gi]) > 1 for b in br]
    if multi:
        coeff = W.conj().T @ vecs[:, multi]
        vals[multi] = np.einsum("i,ib->b", w, np.abs(coeff) ** 2)
    return vals, vecs, ovl


def branch_track(omega: FourierConnection, eta: FourierConnection, tgrid, K: int, module, rep,
                 offsets=None, select: str | list = "kernel", threshold: float = OVERLAP_THRESHOLD,
                 max_bisect: int = 6, threads: int | None = None, fam: Family | None = None,
                 tau: float | None = 1e-3):
    """Eigenvalue branches of ``D(omega + t eta)`` matched by eigenvector overlap.

    ``select``: "kernel" (numerical kernel at t = 0), "all", or explicit indices of
    the ascending spectrum at t = 0.  ``tgrid`` must contain 0.  Failed matches are
    retried on a bisected step (up to ``max_bisect`` levels) before raising.  With
    ``tau`` set, ``lambda'(0)`` is estimated from the extra points ``+-tau, +-tau/2``
    by central differences and one Richardson step.
    """
    fam = fam or family(omega, eta, K, offsets, module, rep)
    tgrid = np.asarray(sorted(set(float(t) for t in tgrid)))
    if 0.0 not in tgrid:
        raise ValueError("tgrid must contain 0")
    extra = [-tau, -tau / 2, tau / 2, tau] if tau else []
    tall = np.asarray(sorted(set(tgrid) | set(extra)))
    w0 = np.linalg.eigvalsh(fam.H0)
    tol0 = kernel_tolerance(w0)
    if isinstance(select, str):
        sel = np.nonzero(np.abs(w0) <= tol0)[0] if select == "kernel" else np.arange(len(w0))
    else:
        sel = np.asarray(select)
    if len(sel) == 0:
        return []
    vals0, vecs0, first, simple = adapted_basis(fam, sel)
    cluster_tol = 10 * tol0

    cache: dict = {}
    nonzero = [t for t in tall if t != 0.0]
    workers = threads or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            for t, r in zip(nonzero, ex.map(lambda t: _eig_at(fam, t), nonzero)):
                cache[t] = r

    def eig(t):
        if t not in cache:
            cache[t] = _eig_at(fam, t)
        return cache[t]

    def step(t0, t1, vecs, depth):
        w, W = eig(t1)
        got = _match(vecs, w, W, threshold, cluster_tol)
        if got is not None:
            return got
        if depth >= max_bisect:
            raise MatchingError(f"overlap below {threshold} between t={t0:g} and t={t1:g}; refine the grid")
        tm = 0.5 * (t0 + t1)
        _, v_mid, ov_mid = step(t0, tm, vecs, depth + 1)
        vals, v1, ov1 = step(tm, t1, v_mid, depth + 1)
        return vals, v1, np.minimum(ov_mid, ov1)

    results = {0.0: (vals0, vecs0, np.ones(len(sel)))}
    for ts in ([t for t in tall if t > 0], [t for t in tall[::-1] if t < 0]):
        vecs, prev = vecs0, 0.0
        for t in ts:
            vals, vecs, ov = step(prev, t, vecs, 0)
            results[t] = (vals, vecs, ov)
            prev = t

    hf = np.real(np.einsum("ib,ib->b", vecs0.conj(), fam.H1 @ vecs0))
    branches = []
    for b in range(len(sel)):
        vals = np.array([results[t][0][b] for t in tgrid])
        ovs = np.array([results[t][2][b] for t in tgrid])
        deriv = float("nan")
        if tau:
            lam = lambda t: results[t][0][b]
            d1 = (lam(tau) - lam(-tau)) / (2 * tau)
            d2 = (lam(tau / 2) - lam(-tau / 2)) / tau
            deriv = (4 * d2 - d1) / 3
        branches.append(EigenBranch(b, tgrid.copy(), vals, ovs, deriv, bool(simple[b]), float(hf[b]),
                                    float(first[b])))
    return branches


def branch_derivatives(omega, eta, K, module, rep, offsets=None, tau: float = 1e-3, select="kernel",
                       fam: Family | None = None):
    """``lambda'(0)`` per branch (central differences with one Richardson step)."""
    return branch_track(omega, eta, [0.0], K, module, rep, offsets, select=select, fam=fam, tau=tau)


def first_order_splitting(omega, eta, K, module, rep, offsets=None, rel_tol: float = KERNEL_REL_TOL,
                          fam: Family | None = None) -> np.ndarray:
    """Eigenvalues of ``P K_eta P`` on the numerical kernel of ``D(omega)`` (empty if no kernel)."""
    fam = fam or family(omega, eta, K, offsets, module, rep)
    w, V = np.linalg.eigh(fam.H0)
    P = V[:, np.abs(w) <= kernel_tolerance(w, rel_tol)]
    if P.shape[1] == 0:
        return np.zeros(0)
    C = P.conj().T @ fam.H1 @ P
    return np.linalg.eigvalsh(0.5 * (C + C.conj().T))


def kernel_basis(fam_or_D, rel_tol: float = KERNEL_REL_TOL) -> np.ndarray:
    H = fam_or_D.H0 if isinstance(fam_or_D, Family) else (fam_or_D.H if isinstance(fam_or_D, TruncatedDirac) else fam_or_D)
    w, V = np.linalg.eigh(H)
    return V[:, np.abs(w) <= kernel_tolerance(w, rel_tol)]


def chirality_blocks(fam: Family, module: CliffordModule, rep: GaugeRep, rel_tol: float = KERNEL_REL_TOL):
    """Norms of the chirality-diagonal and off-diagonal parts of ``P K_eta P`` (even m).

    The kernel is invariant under chirality, so both parts are computed in the kernel basis.
    """
    P = kernel_basis(fam, rel_tol)
    S, d = module.spinor_dim, rep.dim
    M = fam.H0.shape[0] // (S * d)
    GP = np.einsum("st,ntcb->nscb", module.chirality, P.reshape(M, S, d, -1)).reshape(P.shape)
    C = P.conj().T @ fam.H1 @ P
    g = P.conj().T @ GP
    diag = np.linalg.norm(0.5 * (C + g @ C @ g))
    off = np.linalg.norm(0.5 * (C - g @ C @ g))
    return float(diag), float(off)


# -- bridges to the pointwise modules ---------------------------------------------------

def field_on_grid(vec, trunc: Truncation, module, rep, G: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a coefficient vector on the uniform grid ``G^m``; returns (points, values (P, S, d))."""
    M = len(trunc.modes)
    coeffs = vec.reshape(M, module.spinor_dim, rep.dim)
    pts = np.array(list(itertools.product(np.arange(G) / G * trunc.L, repeat=trunc.m)))
    phase = np.exp(1j * pts @ trunc.momenta.T)  # (P, M)
    return pts, np.einsum("pn,nsc->psc", phase, coeffs)


def pairing_bridge(vec, eta: FourierConnection, trunc: Truncation, module, rep,
                   Keta: np.ndarray | None = None) -> tuple[float, float]:
    """``(<K_eta v, v>_{L^2}, -2 mean_x <eta(x), J(v(x))>)`` with an exact grid.

    The integrand is a trigonometric polynomial of degree ``<= 2K + band(eta)`` so a
    grid of ``2K + band + 1`` points per axis integrates it exactly.
    """
    G = 2 * trunc.K + eta.band + 1
    pts, vals = field_on_grid(vec, trunc, module, rep, G)
    J = dirac_current(vals, module, rep)
    coords = rep.algebra.coords(eta.on_grid(pts)).real
    rhs = -2.0 * float(np.sum(coords * J)) / len(pts)
    if Keta is None:
        Keta = assemble(eta, trunc.K, trunc.offsets, module, rep, free=False).H
    lhs = float(np.real(np.vdot(vec, Keta @ vec)))
    return lhs, rhs


def covariant_derivative_matrices(conn: FourierConnection, K: int, offsets, module, rep) -> list:
    """``nabla_j = i k_j + rho(A_j)*`` on the truncated basis (spinor factor untouched)."""
    m = module.m
    trunc = Truncation(m, K, tuple(float(o) for o in offsets), conn.L)
    S, d = module.spinor_dim, rep.dim
    M = len(trunc.modes)
    R = conn.rho_modes(rep)
    out = []
    for j in range(m):
        coeffs = {p: c[j][None] for p, c in R.items()}
        Nj = _coupling(trunc, module, coeffs, [np.eye(S)], d) if R else np.zeros((M * S * d,) * 2, complex)
        Nj = Nj + np.kron(np.diag(1j * trunc.momenta[:, j]), np.eye(S * d))
        out.append(Nj)
    return out


def weitzenbock_exact(conn: FourierConnection, K: int, K_test: int, module, rep, offsets=None,
                      rng=None, n_vectors: int = 4) -> float:
    """``max ||D^2 v - Delta v - rho(F). v||`` over random test vectors in modes ``|n| <= K_test``."""
    m = module.m
    offsets = offsets if offsets is not None else (0.0,) * m
    if K < 2 * conn.band + K_test:
        raise AliasingError("need K >= 2 K_A + K_test for an exact identity")
    D = assemble(conn, K, offsets, module, rep)
    nab = covariant_derivative_matrices(conn, K, offsets, module, rep)
    Fm = conn.curvature_modes(rep)
    trunc = D.trunc
    S, d = module.spinor_dim, rep.dim
    ops, coeffs = [], {p: [] for p in Fm}
    for j in range(m):
        for l in range(j + 1, m):
            ops.append(module.gammas[j] @ module.gammas[l])
            for p, v in Fm.items():
                coeffs[p].append(v[j, l])
    Fop = _coupling(trunc, module, {p: np.array(c) for p, c in coeffs.items()}, ops, d)
    rng = rng if rng is not None else np.random.default_rng(0)
    inner = np.nonzero(np.all(np.abs(trunc.modes) <= K_test, axis=1))[0]
    worst = 0.0
    for _ in range(n_vectors):
        v = np.zeros((len(trunc.modes), S * d), complex)
        v[inner] = rng.normal(size=(len(inner), S * d)) + 1j * rng.normal(size=(len(inner), S * d))
        v = v.ravel()
        lap_v = -sum(Nj @ (Nj @ v) for Nj in nab)
        r = D.H @ (D.H @ v) - lap_v - Fop @ v
        worst = max(worst, float(np.linalg.norm(r) / np.linalg.norm(v)))
    return worst


# -- decoupling ------------------------------------------------------------------------------

@dataclass
class DecouplingVerdict:
    verdict: str
    max_derivative: float
    kernel_dim: int
    splittings: list = field(default_factory=list)
    bridge_residual: float = 0.0


def decoupling_test(omega, eta_samples, K, module, rep, offsets=None, tol: float = 1e-8) -> DecouplingVerdict:
    """"not decoupling" if some sample splits the kernel at first order, else "decoupling-consistent"."""
    D0 = assemble(omega, K, offsets, module, rep)
    P = kernel_basis(D0)
    if P.shape[1] == 0:
        return DecouplingVerdict("decoupling-consistent", 0.0, 0, [])
    worst, splits, bridge = 0.0, [], 0.0
    for eta in eta_samples:
        Keta = assemble(eta, K, offsets, module, rep, free=False).H
        C = P.conj().T @ Keta @ P
        mu = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
        splits.append([float(v) for v in mu])
        worst = max(worst, float(np.max(np.abs(mu))))
        # pairing identity on each kernel vector: <K v, v> = -2 int <eta, J(v)>
        for b in range(P.shape[1]):
            lhs, rhs = pairing_bridge(P[:, b], eta, D0.trunc, module, rep, Keta)
            bridge = max(bridge, abs(lhs - rhs))
    verdict = "decoupling-consistent" if worst <= tol else "not decoupling"
    return DecouplingVerdict(verdict, worst, P.shape[1], splits, bridge)


# -- export ---------------------------------------------------------------------------------

CSV_COLUMNS = ("t", "branch_id", "lambda")
CSV_SCHEMA_VERSION = 1


def write_branches_csv(branches, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for b in branches:
            for t, lam in zip(b.t, b.values):
                w.writerow([repr(float(t)), b.branch_id, repr(float(lam))])


def summary_json(kernel_dim: int, splittings, verdict: str, **extra) -> str:
    doc = {"schema_version": CSV_SCHEMA_VERSION, "kernel_dim": int(kernel_dim),
           "splittings": [float(s) for s in np.ravel(splittings)], "verdict": verdict}
    doc.update(extra)
    return json.dumps(doc, sort_keys=True)


def default_threads() -> int:
    return os.cpu_count() or 1


def u1_constant_eta(m: int, c: float, axis: int = 0, L: float = 1.0) -> FourierConnection:
    """``eta = c dx^axis (x) i`` for u(1)."""
    coeffs = np.zeros((m, 1, 1), dtype=complex)
    coeffs[axis, 0, 0] = 1j * c
    return FourierConnection.constant(coeffs, L)


def exact_u1_branches(t, c) -> np.ndarray:
    return np.array([-abs(c * t), abs(c * t)]) if np.ndim(t) == 0 else np.stack([-np.abs(c * t), np.abs(c * t)])


__all__ = [n for n in dir() if not n.startswith("_") and n not in ("annotations",)]
