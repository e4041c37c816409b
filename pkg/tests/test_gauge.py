from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinlab.gauge import (GaugeError, adjoint_matrices, antihermitian_residual, bracket_residual,
                           casimir, killing_check, make_rep, su_basis, sym_casimir_value, u_basis)

seeds = st.integers(0, 2**32 - 1)


def test_su2_basis_is_half_pauli():
    B = su_basis(2).basis
    s1 = np.array([[0, 1], [1, 0]])
    s2 = np.array([[0, -1j], [1j, 0]])
    s3 = np.diag([1, -1])
    assert np.allclose(B, [-0.5j * s1, -0.5j * s2, -0.5j * s3])


def test_u1_basis():
    B = u_basis(1).basis
    assert B.shape == (1, 1, 1)
    assert B[0, 0, 0] == pytest.approx(1j / math.sqrt(2))


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_gram_is_identity(N):
    for alg in ([u_basis(N)] + ([su_basis(N)] if N > 1 else [])):
        assert np.allclose(alg.gram(), np.eye(alg.dim), atol=1e-14)
        assert alg.dim == (N * N if alg.kind == "u" else N * N - 1)
        for x in alg.basis:
            assert np.allclose(x.conj().T, -x)
            if alg.kind == "su":
                assert abs(np.trace(x)) < 1e-15


@given(st.integers(2, 4), seeds)
def test_coords_roundtrip(N, seed):
    alg = su_basis(N)
    c = np.random.default_rng(seed).normal(size=alg.dim)
    assert np.allclose(alg.coords(alg.element(c)), c, atol=1e-13)


@pytest.mark.parametrize("l", range(0, 7))
def test_symmetric_power_brackets_and_casimir(l):
    rep = make_rep("sym", l=l)
    assert rep.dim == l + 1
    assert bracket_residual(rep) < 1e-12
    assert antihermitian_residual(rep) < 1e-12
    assert np.allclose(casimir(rep), -sym_casimir_value(l) * np.eye(l + 1), atol=1e-12)


def test_sym1_is_standard():
    assert np.allclose(make_rep("sym", l=1).mats, su_basis(2).basis, atol=1e-15)


def test_sym2_is_equivalent_to_adjoint():
    a, b = make_rep("sym", l=2), make_rep("su-adjoint", 2)
    # equivalent reps: equal spectra of every generic element
    c = np.array([0.3, -1.1, 0.7])
    ea = np.sort(np.linalg.eigvals(np.tensordot(c, a.mats, 1)).imag)
    eb = np.sort(np.linalg.eigvals(np.tensordot(c, b.mats, 1)).imag)
    assert np.allclose(ea, eb, atol=1e-12)
    assert np.allclose(casimir(b), -2.0 * np.eye(3), atol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_adjoint_is_real_antisymmetric(N):
    ad = adjoint_matrices(su_basis(N))
    assert np.isrealobj(ad)
    assert np.allclose(ad, -np.transpose(ad, (0, 2, 1)), atol=1e-14)
    assert bracket_residual(make_rep("su-adjoint", N)) < 1e-12


@pytest.mark.parametrize("N", [2, 3, 4])
def test_killing_form(N):
    assert killing_check(N) < 1e-10


def test_standard_casimir():
    for N in (2, 3, 4):
        C = casimir(make_rep("su-standard", N))
        assert np.allclose(C, -(N * N - 1) / (2 * N) * np.eye(N), atol=1e-13)


@given(st.integers(2, 3), seeds)
def test_inner_product_is_ad_invariant(N, seed):
    rng = np.random.default_rng(seed)
    alg = su_basis(N)
    x, y, z = (alg.random_element(rng) for _ in range(3))
    br = lambda a, b: a @ b - b @ a
    assert alg.inner(br(z, x), y) + alg.inner(x, br(z, y)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("bad", [("su-standard", 1), ("xx-standard", 2), ("su-weird", 2), ("junk", 2)])
def test_bad_representations(bad):
    with pytest.raises(GaugeError):
        make_rep(*bad)


def test_bad_sym_power():
    with pytest.raises(GaugeError):
        make_rep("sym", l=-1)
