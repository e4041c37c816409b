"""Central finite-difference field calculus on flat charts.

Fields are closed-form evaluators ``x -> value``:

* connections: ``x -> (m, N, N)`` anti-Hermitian components ``A_k(x)`` in the
  defining matrix representation of the gauge algebra;
* forms: ``x -> FormValue`` (Lie values are N x N matrices and are transported by
  the commutator);
* twisted spinors: ``x -> (S, d)`` arrays, coupled through ``rep.rho(A_k)``.

The covariant Laplacian is ``Delta = -sum_k nabla_k nabla_k`` and the Weitzenboeck
identity reads ``D^2 = Delta + sum_{k<l} g_k g_l rho(F_kl)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import CliffordModule, clifford_action
from .exterior import (FormError, FormValue, form_inner, hodge_star, hodge_star_inv,
                       insert, norm2, one_form, wedge)
from .gauge import GaugeRep

_STENCILS = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1 / 12, -2 / 3, 2 / 3, -1 / 12])),
    6: (np.array([-3, -2, -1, 1, 2, 3]), np.array([-1 / 60, 3 / 20, -3 / 4, 3 / 4, -3 / 20, 1 / 60])),
}


class BoundaryError(ValueError):
    """Stencil reaches outside the chart domain."""


class QuadratureError(RuntimeError):
    """Resolution doubling did not reduce the quadrature error estimate."""


@dataclass(frozen=True)
class FDScheme:
    h: float = 1e-2
    order: int = 4

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step must be positive")
        if self.order not in _STENCILS:
            raise ValueError(f"stencil order must be one of {sorted(_STENCILS)}")

    @property
    def radius(self) -> float:
        return self.h * (self.order // 2)

    def derivative(self, f, x, i: int):
        """``d/dx_i f`` at ``x``; ``f`` may return arrays or FormValues."""
        x = np.asarray(x, dtype=float)
        offs, w = _STENCILS[self.order]
        acc = None
        form = None
        for o, c in zip(offs, w):
            xp = x.copy()
            xp[i] += o * self.h
            v = f(xp)
            if isinstance(v, FormValue):
                form = v
                v = v.coeffs
            acc = c * v if acc is None else acc + c * v
        acc = acc / self.h
        if form is not None:
            return FormValue(form.m, form.degree, acc, form.kind)
        return acc


@dataclass(frozen=True)
class ChartField:
    """Evaluator on a box ``[lo, hi]^m`` (``None`` for all of R^m or a torus)."""

    fn: object
    m: int
    box: tuple | None = None

    def __call__(self, x):
        return self.fn(x)

    def check(self, x, scheme: FDScheme):
        if self.box is None:
            return
        lo, hi = self.box
        x = np.asarray(x)
        if np.any(x - scheme.radius < lo) or np.any(x + scheme.radius > hi):
            raise BoundaryError(f"point {x} within stencil radius of the boundary")


def _check(fields, x, scheme):
    for f in fields:
        if isinstance(f, ChartField):
            f.check(x, scheme)


# -- covariant derivatives ---------------------------------------------------

def _act(Ak, value, kind, rep=None):
    """Infinitesimal gauge action of ``A_k`` on a value of the given kind."""
    if kind in ("lie", "endo"):
        return Ak @ value - value @ Ak
    if kind == "vector":
        R = rep.rho(Ak) if rep is not None else Ak
        return value @ R.T
    return np.zeros_like(value)


def cov_derivative_form(A, Xi, x, i: int, scheme: FDScheme, rep=None) -> FormValue:
    d = scheme.derivative(Xi, x, i)
    v = Xi(np.asarray(x, dtype=float))
    Ak = A(np.asarray(x, dtype=float))[i]
    # matmul broadcasts over the leading form indices
    return FormValue(d.m, d.degree, d.coeffs + _act(Ak, v.coeffs, v.kind, rep), d.kind)


def cov_exterior_derivative(A, Xi, x, scheme: FDScheme = FDScheme(), rep=None) -> FormValue:
    """``d_A Xi = sum_i e^i ^ nabla_i Xi``."""
    _check((A, Xi), x, scheme)
    m = Xi(np.asarray(x, dtype=float)).m
    out = None
    for i in range(m):
        term = wedge(one_form(m, i), cov_derivative_form(A, Xi, x, i, scheme, rep))
        out = term if out is None else out + term
    return out


def cov_codifferential(A, Xi, x, scheme: FDScheme = FDScheme(), rep=None) -> FormValue:
    """``delta_A Xi = -sum_i e_i _| nabla_i Xi``."""
    _check((A, Xi), x, scheme)
    m = Xi(np.asarray(x, dtype=float)).m
    out = None
    for i in range(m):
        term = -insert(i, cov_derivative_form(A, Xi, x, i, scheme, rep))
        out = term if out is None else out + term
    return out


def codifferential_hodge_sign(m: int) -> int:
    """``delta = s * (-1)^k *^{-1} d *`` with this ``s`` for the star fixed by ``*a ^ b = <a,b> vol``."""
    return (-1) ** (m + 1)


def cov_codifferential_hodge(A, Xi, x, scheme: FDScheme = FDScheme(), rep=None) -> FormValue:
    """Codifferential through the Hodge star, ``s (-1)^k *^{-1} d_A * Xi``."""
    _check((A, Xi), x, scheme)
    x0 = np.asarray(x, dtype=float)
    v = Xi(x0)
    k, m = v.degree, v.m
    star_xi = lambda y: hodge_star(Xi(y))
    d = cov_exterior_derivative(A, star_xi, x0, scheme, rep)
    return hodge_star_inv(d) * (codifferential_hodge_sign(m) * (-1) ** k)


def curvature_of(A, x, scheme: FDScheme = FDScheme()) -> FormValue:
    """``F_kl = d_k A_l - d_l A_k + [A_k, A_l]``."""
    _check((A,), x, scheme)
    x0 = np.asarray(x, dtype=float)
    a = A(x0)
    m = a.shape[0]
    dA = np.array([scheme.derivative(A, x0, k) for k in range(m)])  # (k, l, N, N)
    F = dA - np.swapaxes(dA, 0, 1) + np.einsum("kij,ljn->klin", a, a) - np.einsum("lij,kjn->klin", a, a)
    return FormValue(m, 2, F, "lie")


# -- spinors -----------------------------------------------------------------

def cov_derivative_spinor(A, Psi, x, i, scheme, rep: GaugeRep):
    x0 = np.asarray(x, dtype=float)
    return scheme.derivative(Psi, x0, i) + Psi(x0) @ rep.rho(A(x0)[i]).T


def dirac_apply(A, Psi, x, scheme: FDScheme, module: CliffordModule, rep: GaugeRep) -> np.ndarray:
    """``sum_k g_k (d_k + rho(A_k)) Psi`` at ``x``."""
    _check((A, Psi), x, scheme)
    return sum(module.gammas[k] @ cov_derivative_spinor(A, Psi, x, k, scheme, rep)
               for k in range(module.m))


def dirac_field(A, Psi, scheme, module, rep):
    return lambda y: dirac_apply(A, Psi, y, scheme, module, rep)


def connection_laplacian(A, Psi, x, scheme, module, rep) -> np.ndarray:
    """``-sum_k nabla_k nabla_k Psi`` with nested differences."""
    x0 = np.asarray(x, dtype=float)
    out = 0.0
    for k in range(module.m):
        nk = lambda y, k=k: cov_derivative_spinor(A, Psi, y, k, scheme, rep)
        out = out - cov_derivative_spinor(A, nk, x0, k, scheme, rep)
    return out


def weitzenbock_residual(A, Psi, x, scheme: FDScheme, module: CliffordModule, rep: GaugeRep,
                         F=None) -> float:
    """``|| D^2 Psi - Delta Psi - F . Psi ||``; ``F`` defaults to ``curvature_of(A)``."""
    _check((A, Psi), x, scheme)
    x0 = np.asarray(x, dtype=float)
    D2 = dirac_apply(A, dirac_field(A, Psi, scheme, module, rep), x0, scheme, module, rep)
    lap = connection_laplacian(A, Psi, x0, scheme, module, rep)
    Fx = F(x0) if F is not None else curvature_of(A, x0, scheme)
    return float(np.linalg.norm(D2 - lap - clifford_action(Fx, Psi(x0), module, rep)))


# -- stress-energy -----------------------------------------------------------

def stress_ym(F: FormValue) -> np.ndarray:
    """``T_YM(e_i, e_j) = -<e_i _| F, e_j _| F> + 1/2 |F|^2 delta_ij``."""
    m = F.m
    ins = [insert(i, F) for i in range(m)]
    T = np.array([[-form_inner(ins[i], ins[j]) for j in range(m)] for i in range(m)])
    return T + 0.5 * norm2(F) * np.eye(m)


def stress_dirac(grads: np.ndarray, Psi: np.ndarray, module: CliffordModule) -> np.ndarray:
    """``T_D(e_i, e_j)`` from covariant derivatives ``grads[k] = nabla_k Psi``."""
    m = module.m
    g = module.gammas
    # B[i, j] = <g_i nabla_j Psi, Psi>, real part
    B = np.einsum("ist,jtc,sc->ij", g, grads, Psi.conj()).real
    dirac = np.trace(B)  # <D Psi, Psi>
    return -0.25 * (B + B.T) + 0.5 * dirac * np.eye(m)


def stress_tensors(A, Psi, x, scheme: FDScheme, module: CliffordModule, rep: GaugeRep, F=None):
    """``(T_YM, T_Dirac)`` at ``x``; both symmetric ``m x m`` real arrays."""
    _check((A, Psi), x, scheme)
    x0 = np.asarray(x, dtype=float)
    Fx = F(x0) if F is not None else curvature_of(A, x0, scheme)
    grads = np.array([cov_derivative_spinor(A, Psi, x0, k, scheme, rep) for k in range(module.m)])
    return stress_ym(Fx), stress_dirac(grads, Psi(x0), module)


def stress_traces(T_ym, T_d, F: FormValue, dirac_pairing: float) -> tuple[float, float]:
    """Residuals of ``Tr T_YM = (m/2 - 2)|F|^2`` and ``Tr T_D = (m-1)/2 <D Psi, Psi>``."""
    m = F.m
    r1 = abs(np.trace(T_ym) - (m / 2 - 2) * norm2(F))
    r2 = abs(np.trace(T_d) - (m - 1) / 2 * dirac_pairing)
    return r1, r2


def divergence_residual(T, x, scheme: FDScheme) -> float:
    """``|| sum_i d_i T(e_i, .) ||`` for a tensor field ``x -> (m, m)``."""
    x0 = np.asarray(x, dtype=float)
    m = np.asarray(T(x0)).shape[0]
    div = sum(scheme.derivative(lambda y, i=i: np.asarray(T(y))[i], x0, i) for i in range(m))
    return float(np.linalg.norm(div))


def stress_dym_field(A, Psi, scheme, module, rep, F=None):
    def T(y):
        a, b = stress_tensors(A, Psi, y, scheme, module, rep, F)
        return a + b
    return T


# -- conformal weight --------------------------------------------------------

def conformal_ym_density_check(F: FormValue, u: float) -> float:
    """``| e^{4u} |F|^2_{e^{2u} g} - |F|^2_g |`` in dimension 4.

    Frame components of F in the rescaled orthonormal frame are ``e^{-2u} F_ij``.
    """
    if F.m != 4 or F.degree != 2:
        raise FormError("conformal YM density check needs a 2-form in dimension 4")
    Fbar = F * math.exp(-2.0 * u)
    return abs(math.exp(4.0 * u) * norm2(Fbar) - norm2(F))


# -- quadrature --------------------------------------------------------------

@dataclass
class QuadResult:
    value: float
    error: float
    resolution: int
    coarse: float


def _gl_rule(n, lo, hi):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _tensor_quad(density, nodes, weights, m, chunk):
    """Sum ``density * weights`` over the tensor grid, chunked along the first axis."""
    n = len(nodes)
    rest = np.stack(np.meshgrid(*([nodes] * (m - 1)), indexing="ij"), axis=-1).reshape(-1, m - 1)
    wrest = np.prod(np.stack(np.meshgrid(*([weights] * (m - 1)), indexing="ij"), axis=-1)
                    .reshape(-1, m - 1), axis=1)
    total = 0.0
    per = max(1, chunk // len(rest))
    for s in range(0, n, per):
        first = nodes[s:s + per]
        pts = np.concatenate([np.repeat(first, len(rest))[:, None],
                              np.tile(rest, (len(first), 1))], axis=1)
        w = np.repeat(weights[s:s + per], len(rest)) * np.tile(wrest, len(first))
        total += float(np.dot(density(pts), w))
    return total


def integrate_box(density, m: int, resolution: int, box=None, chunk: int = 1 << 21,
                  flag_tol: float | None = None) -> QuadResult:
    """Tensor Gauss-Legendre quadrature of a vectorised density ``(n, m) -> (n,)``.

    ``box=None`` integrates over R^m via ``x = tan(theta)`` per axis.  The error
    estimate is the difference to the half-resolution rule.
    """
    rule = _rule_fn(density, m, box, chunk)
    fine = rule(resolution)
    coarse = rule(max(1, resolution // 2))
    err = abs(fine - coarse)
    if flag_tol is not None and err > flag_tol:
        raise QuadratureError(f"quadrature error estimate {err:.3e} above {flag_tol:.1e}")
    return QuadResult(fine, err, resolution, coarse)


def _rule_fn(density, m, box, chunk):
    if box is None:
        def integrand(th):
            return density(np.tan(th)) / np.prod(np.cos(th) ** 2, axis=1)
        lo, hi = -math.pi / 2, math.pi / 2
    else:
        integrand = density
        lo, hi = box

    def rule(n):
        t, w = _gl_rule(n, lo, hi)
        return _tensor_quad(integrand, t, w, m, chunk)
    return rule


def integrate_ladder(density, m: int, resolutions, box=None, chunk: int = 1 << 21) -> list[QuadResult]:
    """``integrate_box`` on increasing resolutions, reusing each level as the next one's coarse rule."""
    rule = _rule_fn(density, m, box, chunk)
    resolutions = list(resolutions)
    cache = {}
    out = []
    for n in resolutions:
        half = max(1, n // 2)
        for r in (half, n):
            if r not in cache:
                cache[r] = rule(r)
        out.append(QuadResult(cache[n], abs(cache[n] - cache[half]), n, cache[half]))
    return out


# -- convergence bookkeeping -------------------------------------------------

def observed_orders(residuals, hs) -> list[float]:
    """``log(r_i / r_{i+1}) / log(h_i / h_{i+1})`` along a step ladder."""
    out = []
    for (r0, r1), (h0, h1) in zip(zip(residuals, residuals[1:]), zip(hs, hs[1:])):
        out.append(math.log(r0 / r1) / math.log(h0 / h1) if r0 > 0 and r1 > 0 else float("nan"))
    return out


def point_record(point, residual, h, order) -> dict:
    return {"point": [float(v) for v in point], "residual": float(residual),
            "h": float(h), "order": int(order)}
