import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcur import qmat
from qcur.qmat import DomainError, ValidationError

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


class TestEigh:
    def test_diagonal_sorted_descending(self):
        w, _ = qmat.eigh(np.diag([0.3, 0.7]))
        np.testing.assert_allclose(w, [0.7, 0.3])

    def test_identity(self):
        w, v = qmat.eigh(np.eye(2))
        np.testing.assert_allclose(w, [1, 1])
        np.testing.assert_allclose(v.conj().T @ v, np.eye(2), atol=1e-12)

    def test_pauli_x(self):
        w, v = qmat.eigh(X)
        np.testing.assert_allclose(w, [1, -1])
        plus = np.array([1, 1]) / np.sqrt(2)
        assert abs(abs(plus.conj() @ v[:, 0]) - 1) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            qmat.eigh(np.array([[0, 1], [0, 0]]))

    @pytest.mark.parametrize("d", [2, 4])
    def test_reconstruction_random(self, d):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            m = random_hermitian(d, rng)
            w, v = qmat.eigh(m)
            assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - m)) <= 1e-9
            assert np.max(np.abs(v.conj().T @ v - np.eye(d))) <= 1e-9
            assert np.all(np.diff(w) <= 0)


class TestMatFunc:
    def test_sqrt_identity(self):
        np.testing.assert_allclose(qmat.mat_func(np.eye(3), np.sqrt), np.eye(3))

    def test_sqrt_diag(self):
        np.testing.assert_allclose(qmat.mat_func(np.diag([4.0, 9.0]), np.sqrt), np.diag([2, 3]), atol=1e-12)

    def test_pseudo_inverse_sqrt(self):
        out = qmat.mat_func(np.diag([0.5, 0.5, 0.0]), lambda x: x ** -0.5, pseudo_inverse=True)
        np.testing.assert_allclose(out, np.diag([np.sqrt(2), np.sqrt(2), 0]), atol=1e-12)

    def test_inverse_at_zero_is_domain_error(self):
        with pytest.raises(DomainError):
            with np.errstate(divide="ignore"):
                qmat.mat_func(np.diag([1.0, 0.0]), lambda x: x ** -0.5)

    def test_identity_function_roundtrip(self):
        rng = np.random.default_rng(3)
        m = random_hermitian(4, rng)
        np.testing.assert_allclose(qmat.mat_func(m, lambda x: x), m, atol=1e-9)


class TestPinvSqrt:
    def test_maximally_mixed(self):
        np.testing.assert_allclose(qmat.pinv_sqrt(np.eye(2) / 2), np.sqrt(2) * np.eye(2), atol=1e-12)

    def test_support_projection(self):
        np.testing.assert_allclose(qmat.pinv_sqrt(np.diag([1.0, 0.0])), np.diag([1, 0]), atol=1e-12)

    def test_elementwise(self):
        np.testing.assert_allclose(qmat.pinv_sqrt(np.diag([0.25, 0.75])), np.diag([2, 2 / np.sqrt(3)]), atol=1e-12)


class TestDensityMatrix:
    def test_clips_tiny_negative(self):
        rho = qmat.density_matrix(np.diag([1 + 5e-10, -5e-10]))
        assert np.min(np.linalg.eigvalsh(rho)) >= 0
        assert abs(np.trace(rho) - 1) < 1e-15

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            qmat.density_matrix(np.diag([1.1, -0.1]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError):
            qmat.density_matrix(np.diag([0.6, 0.6]))

    def test_is_density_matrix(self):
        assert qmat.is_density_matrix(np.eye(2) / 2)
        assert not qmat.is_density_matrix(X)

    def test_ket_norm(self):
        with pytest.raises(ValidationError):
            qmat.ket([1, 1])
        np.testing.assert_allclose(np.linalg.norm(qmat.ket([1, 1], normalize=True)), 1)


def test_kron_examples():
    np.testing.assert_allclose(qmat.kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_allclose(qmat.kron(Z, Z), np.diag([1, -1, -1, 1]))
    out = qmat.kron(np.diag([1.0, 0.0]), X)
    np.testing.assert_allclose(out[:2, :2], X)
    np.testing.assert_allclose(out[2:, 2:], 0)


class TestPartialTrace:
    def test_product(self):
        ra, rb = np.diag([0.3, 0.7]), np.array([[0.5, 0.2], [0.2, 0.5]])
        np.testing.assert_allclose(qmat.partial_trace(np.kron(ra, rb), (2, 2), keep="B"), rb)
        np.testing.assert_allclose(qmat.partial_trace(np.kron(ra, rb), (2, 2), keep="A"), ra)

    def test_bell_marginal(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        np.testing.assert_allclose(qmat.partial_trace(np.outer(phi, phi), (2, 2), keep="A"), np.eye(2) / 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            qmat.partial_trace(np.eye(5), (2, 2))

    def test_unequal_dims_trace_preserved(self):
        rng = np.random.default_rng(1)
        m = random_hermitian(6, rng)
        for keep in ("A", "B"):
            assert abs(np.trace(qmat.partial_trace(m, (2, 3), keep=keep)) - np.trace(m)) < 1e-10


def test_swap_operator_exchanges_factors():
    a, b = np.diag([1.0, 2.0]), np.arange(9.0).reshape(3, 3)
    s = qmat.swap_operator(2, 3)
    np.testing.assert_allclose(s @ np.kron(a, b) @ s.T, np.kron(b, a))


class TestFidelity:
    def test_self(self):
        rho = np.array([[0.6, 0.1j], [-0.1j, 0.4]])
        assert abs(qmat.bures_fidelity(rho, rho) - 1) < 1e-12

    def test_pure_overlap(self):
        psi = np.array([1, 1j]) / np.sqrt(2)
        phi = np.array([1, 0])
        assert abs(qmat.bures_fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi)) - 0.5) < 1e-12

    def test_mixed_vs_pure(self):
        assert abs(qmat.bures_fidelity(np.eye(2) / 2, np.diag([1.0, 0.0])) - 0.5) < 1e-12

    def test_unitary_invariance_and_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = random_hermitian(3, rng)
            b = random_hermitian(3, rng)
            r1 = a @ a / np.trace(a @ a)
            r2 = b @ b / np.trace(b @ b)
            u = qmat.random_unitary(3, rng)
            f = qmat.bures_fidelity(r1, r2)
            assert abs(f - qmat.bures_fidelity(u @ r1 @ u.conj().T, u @ r2 @ u.conj().T)) < 1e-8
            assert abs(f - qmat.bures_fidelity(r2, r1)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (2, 3), (3, 2)]))
def test_partial_trace_preserves_trace(seed, dims):
    m = random_hermitian(dims[0] * dims[1], np.random.default_rng(seed))
    assert abs(np.trace(qmat.partial_trace(m, dims, keep="B")) - np.trace(m)) < 1e-10
