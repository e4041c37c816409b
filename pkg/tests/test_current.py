from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import least_squares

from spinlab.clifford import build_clifford_module, chiral_basis, random_spinor
from spinlab.current import (CurrentConsistencyError, ShapeError, current_min_on_sphere, current_norm,
                             current_raw, dim3_bilinears, dim3_bilinears_direct, dim3_closed_forms,
                             dirac_current, eta_current_pairing, k_eta_apply, k_eta_matrix,
                             pairing_residual)
from spinlab.gauge import make_rep

seeds = st.integers(0, 2**32 - 1)
REPS = [("su-standard", 2), ("su-adjoint", 2), ("u-standard", 1), ("su-standard", 3), ("u-standard", 2)]


def _oracle_current(Psi, module, rep):
    """Loop transcription of ``-1/2 <Psi, g_k rho(s_a) Psi>``."""
    m, dg = module.m, rep.algebra.dim
    J = np.zeros((m, dg), dtype=complex)
    for k in range(m):
        for a in range(dg):
            op = np.kron(module.gammas[k], rep.mats[a])
            J[k, a] = -0.5 * np.vdot(Psi.ravel(), op @ Psi.ravel())
    return J


def test_zero_spinor_gives_zero_current():
    mod, rep = build_clifford_module(3), make_rep("su-standard", 2)
    assert np.all(dirac_current(np.zeros((2, 2)), mod, rep) == 0)


@given(st.integers(2, 5), st.sampled_from(REPS), seeds)
def test_current_matches_loop_oracle(m, rn, seed):
    mod, rep = build_clifford_module(m), make_rep(*rn)
    Psi = random_spinor(np.random.default_rng(seed), mod, rep.dim)
    ref = _oracle_current(Psi, mod, rep)
    assert np.max(np.abs(ref.imag)) < 1e-12
    assert np.allclose(dirac_current(Psi, mod, rep), ref.real, atol=1e-12)


@given(st.integers(2, 5), st.sampled_from(REPS), seeds, st.floats(-3, 3))
def test_current_is_quadratic(m, rn, seed, c):
    mod, rep = build_clifford_module(m), make_rep(*rn)
    Psi = random_spinor(np.random.default_rng(seed), mod, rep.dim)
    scale = c * np.exp(0.7j)
    assert current_norm(scale * Psi, mod, rep) == pytest.approx(abs(scale) ** 2 * current_norm(Psi, mod, rep),
                                                                rel=1e-10, abs=1e-12)


def test_reality_over_many_samples(rng):
    worst = 0.0
    for m in (2, 3, 4):
        mod = build_clifford_module(m)
        for rn in REPS[:3]:
            rep = make_rep(*rn)
            Psi = rng.normal(size=(3400, mod.spinor_dim, rep.dim)) + 1j * rng.normal(size=(3400, mod.spinor_dim, rep.dim))
            Psi /= np.linalg.norm(Psi, axis=(1, 2), keepdims=True)
            worst = max(worst, float(np.max(np.abs(current_raw(Psi, mod, rep).imag))))
    assert worst <= 1e-13


def test_chiral_spinors_have_zero_current(rng):
    for m in (2, 4, 6):
        mod = build_clifford_module(m)
        for rn in REPS:
            rep = make_rep(*rn)
            for s in (1, -1):
                B = chiral_basis(mod, s)
                Psi = B @ (rng.normal(size=(B.shape[1], rep.dim)) + 1j * rng.normal(size=(B.shape[1], rep.dim)))
                assert np.max(np.abs(dirac_current(Psi, mod, rep))) < 1e-13


def test_shape_and_reality_errors():
    mod, rep = build_clifford_module(3), make_rep("su-standard", 2)
    with pytest.raises(ShapeError):
        dirac_current(np.zeros((2, 3)), mod, rep)
    with pytest.raises(ShapeError):
        k_eta_apply(np.zeros((4, 3)), np.zeros((2, 2)), mod, rep)
    # a non-anti-Hermitian "representation" makes the bilinears complex
    from spinlab.gauge import GaugeRep
    bad = GaugeRep(rep.algebra, np.abs(rep.mats), "standard")
    with pytest.raises(CurrentConsistencyError):
        dirac_current(np.array([[1.0, 0.3j], [0.2, 1.0]]), mod, bad)


def test_u1_constant_eta_is_sigma1():
    mod, rep = build_clifford_module(3), make_rep("u-standard", 1)
    c = 0.7
    eta = np.zeros((3, 1, 1), dtype=complex)
    eta[0, 0, 0] = 1j * c
    K = k_eta_matrix(eta, mod, rep)
    assert np.allclose(K, c * np.array([[0, 1], [1, 0]]), atol=1e-15)
    assert np.allclose(np.linalg.eigvalsh(K), [-c, c])


def test_zero_eta_gives_zero():
    mod, rep = build_clifford_module(4), make_rep("su-adjoint", 2)
    Psi = np.ones((4, 3))
    assert np.all(k_eta_apply(np.zeros((4, 3)), Psi, mod, rep) == 0)


@given(st.integers(2, 5), st.sampled_from(REPS), seeds)
def test_k_eta_hermitian_and_norm_bound(m, rn, seed):
    rng = np.random.default_rng(seed)
    mod, rep = build_clifford_module(m), make_rep(*rn)
    eta = rng.normal(size=(m, rep.algebra.dim))
    K = k_eta_matrix(eta, mod, rep)
    assert np.max(np.abs(K - K.conj().T)) <= 1e-13
    bound = sum(np.linalg.norm(M, 2) for M in rep.rho_coords(eta))
    assert np.linalg.norm(K, 2) <= bound + 1e-12
    Psi = random_spinor(rng, mod, rep.dim)
    assert np.allclose(k_eta_apply(eta, Psi, mod, rep).ravel(), K @ Psi.ravel(), atol=1e-12)


@given(st.integers(2, 4), st.sampled_from(REPS), seeds)
def test_pairing_identity(m, rn, seed):
    rng = np.random.default_rng(seed)
    mod, rep = build_clifford_module(m), make_rep(*rn)
    Psi = random_spinor(rng, mod, rep.dim)
    Psi /= np.linalg.norm(Psi)
    eta = rng.normal(size=(m, rep.algebra.dim))
    assert pairing_residual(Psi, eta, mod, rep) <= 1e-12
    # matrix-valued eta gives the same pairing as its coordinates
    eta_mat = rep.algebra.element(eta)
    J = dirac_current(Psi, mod, rep)
    assert eta_current_pairing(eta_mat, J, rep) == pytest.approx(eta_current_pairing(eta, J, rep), abs=1e-12)


def test_pairing_on_zero_and_chiral(rng):
    mod, rep = build_clifford_module(4), make_rep("su-standard", 2)
    eta = rng.normal(size=(4, 3))
    assert pairing_residual(np.zeros((4, 2)), eta, mod, rep) == 0.0
    Psi = random_spinor(rng, mod, 2, chirality=1)
    assert abs(np.vdot(Psi, k_eta_apply(eta, Psi, mod, rep))) < 1e-13


# -- dimension 3 ---------------------------------------------------------------

def test_dim3_basis_spinor_example():
    rep = make_rep("su-standard", 2)
    Psi = np.zeros((2, 2), dtype=complex)
    Psi[0, 0] = 1.0
    b = dim3_bilinears(Psi, rep)
    assert b[0, 0] == pytest.approx(-0.5)
    J = dirac_current(Psi, build_clifford_module(3), rep)
    # e3 against the diagonal direction: J = -1/2 * bilinear
    assert J[2, 2] == pytest.approx(-0.5 * b[0, 0])
    assert np.all(dim3_bilinears(np.zeros((2, 2)), rep) == 0)


@given(st.integers(2, 4), seeds)
def test_dim3_three_evaluations_agree(N, seed):
    rng = np.random.default_rng(seed)
    rep = make_rep("su-standard", N)
    Psi = rng.normal(size=(2, N)) + 1j * rng.normal(size=(2, N))
    b = dim3_bilinears(Psi, rep)
    assert b.shape == (N - 1, 9)
    assert np.allclose(b, dim3_bilinears_direct(Psi, rep), atol=1e-12)
    assert np.allclose(b, dim3_closed_forms(Psi), atol=1e-12)


def test_dim3_rejects_wrong_input():
    with pytest.raises(ShapeError):
        dim3_bilinears(np.zeros((2, 3)), make_rep("su-adjoint", 2))
    with pytest.raises(ShapeError):
        dim3_bilinears(np.zeros((4, 2)), make_rep("su-standard", 2))


@pytest.mark.parametrize("rn,floor", [(("su-standard", 2), 1e-3), (("u-standard", 1), 1e-3)])
def test_dim3_current_bounded_below_on_sphere(rn, floor):
    res = current_min_on_sphere(build_clifford_module(3), make_rep(*rn), restarts=16, seed=3)
    assert res.value > floor
    assert np.linalg.norm(res.psi) == pytest.approx(1.0)


@pytest.mark.parametrize("m", [2, 4])
def test_even_dimension_current_reaches_zero(m):
    res = current_min_on_sphere(build_clifford_module(m), make_rep("su-standard", 2), restarts=8, seed=1)
    assert res.value <= 1e-10


def test_current_min_independent_of_threads():
    mod, rep = build_clifford_module(3), make_rep("u-standard", 1)
    a = current_min_on_sphere(mod, rep, restarts=6, seed=9, threads=1)
    b = current_min_on_sphere(mod, rep, restarts=6, seed=9, threads=3)
    assert a.value == b.value


@pytest.mark.parametrize("seed", range(4))
def test_dim3_zero_set_is_trivial(seed):
    """Unconstrained descent on J from a random start only reaches J ~ 0 near Psi = 0."""
    mod, rep = build_clifford_module(3), make_rep("su-standard", 2)
    rng = np.random.default_rng(seed)
    v0 = rng.normal(size=8)

    def resid(v):
        return current_raw((v[:4] + 1j * v[4:]).reshape(2, 2), mod, rep).real.ravel()

    sol = least_squares(resid, v0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
    if np.linalg.norm(resid(sol.x)) <= 1e-8:
        assert np.sum(sol.x ** 2) <= 1e-4
