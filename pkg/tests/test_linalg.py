"""Matrix primitives: Frobenius/trace identities, the Jacobi minimum-eigenvalue
solver against an independent dense eigensolver, and supported least squares."""

import numpy as np
import pytest

from adl.linalg import (ConvergenceError, SymEig, check_matrix, frob_sq,
                        least_squares_on_support, min_eig_sym, trace_prod)


def naive_trace_of_product(A, B):
    """Oracle: materialize A @ B.T and take its trace."""
    return float(np.trace(A @ B.T))


class TestFrobSq:
    def test_identity(self):
        assert frob_sq(np.eye(2)) == 2.0

    def test_diagonal(self):
        assert frob_sq(np.array([[3.0, 0.0], [0.0, 4.0]])) == 25.0

    def test_equals_trace_of_mmt(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((5, 7))
        expected = float(np.trace(M @ M.T))
        assert frob_sq(M) == pytest.approx(expected, rel=1e-12)

    def test_matches_trace_prod_on_random_matrices(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            M = rng.standard_normal((rng.integers(1, 9), rng.integers(1, 9)))
            assert frob_sq(M) == pytest.approx(trace_prod(M, M), rel=1e-12)


class TestTraceProd:
    def test_identity_pair(self):
        assert trace_prod(np.eye(3), np.eye(3)) == 3.0

    def test_against_identity_gives_trace(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert trace_prod(A, np.eye(2)) == 5.0

    def test_random_pair_matches_naive_product(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((4, 4))
        B = rng.standard_normal((4, 4))
        assert trace_prod(A, B) == pytest.approx(naive_trace_of_product(A, B), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            trace_prod(np.eye(2), np.eye(3))


class TestMinEigSym:
    def test_analytic_2x2(self):
        out = min_eig_sym(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert out.min_eigenvalue == pytest.approx(1.0, abs=1e-10)

    def test_zero_matrix(self):
        out = min_eig_sym(np.zeros((5, 5)))
        assert out.min_eigenvalue == 0.0
        assert out.iterations_used == 0

    def test_1x1(self):
        assert min_eig_sym(np.array([[-3.5]])).min_eigenvalue == -3.5

    def test_random_matches_dense_eigensolver_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            k = int(rng.integers(2, 17))
            X = rng.standard_normal((k, k))
            M = 0.5 * (X + X.T)
            got = min_eig_sym(M, tol=1e-10)
            want = float(np.min(np.linalg.eigvalsh(M)))
            assert got.min_eigenvalue == pytest.approx(want, abs=1e-8)
            assert isinstance(got, SymEig)

    def test_eigenpair_residual_via_oracle_eigenvector(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            k = int(rng.integers(2, 13))
            X = rng.standard_normal((k, k))
            M = 0.5 * (X + X.T)
            lam = min_eig_sym(M, tol=1e-10).min_eigenvalue
            w, V = np.linalg.eigh(M)
            v = V[:, int(np.argmin(w))]
            assert np.linalg.norm(M @ v - lam * v) <= 1e-9 * np.sqrt(frob_sq(M))

    def test_shift_bracket_property(self):
        # M - lam*I must be PSD up to tol, and M - (lam + 2 tol) I must not be.
        rng = np.random.default_rng(17)
        tol = 1e-8
        for _ in range(25):
            k = int(rng.integers(2, 10))
            X = rng.standard_normal((k, k))
            M = 0.5 * (X + X.T)
            lam = min_eig_sym(M, tol=tol).min_eigenvalue
            eye = np.eye(k)
            assert np.min(np.linalg.eigvalsh(M - lam * eye)) >= -tol
            assert np.min(np.linalg.eigvalsh(M - (lam + 2 * tol) * eye)) < 0

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            min_eig_sym(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            min_eig_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_nonconvergence_reports(self):
        X = np.random.default_rng(1).standard_normal((8, 8))
        M = 0.5 * (X + X.T)
        with pytest.raises(ConvergenceError):
            min_eig_sym(M, tol=1e-12, max_sweeps=1)

    def test_large_norm_matrix_converges_at_machine_floor(self):
        # Absolute 1e-10 is unreachable at this scale; the solver must still
        # converge (to the float64 floor) instead of raising.
        rng = np.random.default_rng(9)
        X = rng.standard_normal((12, 12)) * 1e7
        M = 0.5 * (X + X.T)
        got = min_eig_sym(M, tol=1e-10).min_eigenvalue
        want = float(np.min(np.linalg.eigvalsh(M)))
        assert got == pytest.approx(want, rel=1e-9)


class TestLeastSquaresOnSupport:
    def _dictionary(self, seed, m=8, k=12):
        rng = np.random.default_rng(seed)
        D = rng.standard_normal((m, k))
        return D / np.linalg.norm(D, axis=0)

    def test_single_atom_exact(self):
        D = self._dictionary(0)
        x = least_squares_on_support(D, D[:, 3], [3])
        assert x[3] == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(np.delete(x, 3)) == 0

    def test_empty_support_returns_zero(self):
        D = self._dictionary(1)
        y = np.arange(8.0)
        x = least_squares_on_support(D, y, [])
        assert np.array_equal(x, np.zeros(12))

    def test_residual_orthogonal_to_selected_atoms(self):
        D = self._dictionary(2)
        rng = np.random.default_rng(3)
        for _ in range(20):
            y = rng.standard_normal(8)
            support = list(rng.choice(12, size=2, replace=False))
            x = least_squares_on_support(D, y, support)
            r = y - D @ x
            for j in support:
                assert abs(D[:, j] @ r) <= 1e-9 * np.linalg.norm(D[:, j]) * max(np.linalg.norm(r), 1e-30)

    def test_order_independent(self):
        D = self._dictionary(4)
        y = np.random.default_rng(5).standard_normal(8)
        a = least_squares_on_support(D, y, [7, 2, 9])
        b = least_squares_on_support(D, y, [9, 7, 2])
        assert np.array_equal(a, b)

    def test_duplicate_indices_rejected(self):
        D = self._dictionary(6)
        with pytest.raises(ValueError):
            least_squares_on_support(D, D[:, 0], [1, 1])

    def test_out_of_range_rejected(self):
        D = self._dictionary(7)
        with pytest.raises(ValueError):
            least_squares_on_support(D, D[:, 0], [12])

    def test_rank_deficient_minimum_norm(self, caplog):
        # Two identical atoms: the subdictionary is rank 1.
        D = np.ones((4, 2)) / 2.0
        y = np.ones(4)
        with caplog.at_level("WARNING", logger="adl.linalg"):
            x = least_squares_on_support(D, y, [0, 1])
        assert "rank-deficient" in caplog.text
        assert np.linalg.norm(y - D @ x) <= 1e-10


class TestCheckMatrix:
    def test_rejects_nan(self):
        M = np.ones((2, 2))
        M[0, 0] = np.nan
        with pytest.raises(ValueError):
            check_matrix(M)

    def test_rejects_vector(self):
        with pytest.raises(ValueError):
            check_matrix(np.ones(3))
