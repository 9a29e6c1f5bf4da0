"""Pursuit encoders: greedy OMP against analytic solutions and the
exhaustive-enumeration oracle."""

import numpy as np
import pytest

from adl.dict_update import Dictionary
from adl.sparse_coding import (SparseCode, SparseCodeMatrix, batch_encode,
                               exhaustive_encode, omp_encode)


def random_dictionary(seed, m=8, k=16):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((m, k))
    return Dictionary(D / np.linalg.norm(D, axis=0))


def orthonormal_dictionary(seed, n=12):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Dictionary(Q)


def residual_norm(D, y, code):
    return float(np.linalg.norm(y - D.atoms @ code.to_dense()))


class TestSparseCode:
    def test_dense_round_trip(self):
        code = SparseCode((1, 4), (0.5, -2.0), 6)
        dense = code.to_dense()
        assert np.array_equal(dense, np.array([0, 0.5, 0, 0, -2.0, 0]))
        assert SparseCode.from_dense(dense) == code

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SparseCode((2, 2), (1.0, 1.0), 4)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SparseCode((4,), (1.0,), 4)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseCode((3, 1), (1.0, 1.0), 4)


class TestOmpEncode:
    def test_single_atom_signal(self):
        D = random_dictionary(0)
        code = omp_encode(D, D.atoms[:, 5], L=1)
        assert code.indices == (5,)
        assert code.values[0] == pytest.approx(1.0, abs=1e-12)
        assert residual_norm(D, D.atoms[:, 5], code) <= 1e-12

    def test_zero_signal_empty_support(self):
        D = random_dictionary(1)
        code = omp_encode(D, np.zeros(8), L=2)
        assert code.indices == ()

    def test_orthonormal_analytic_solution(self):
        D = orthonormal_dictionary(2)
        rng = np.random.default_rng(3)
        for _ in range(20):
            y = rng.standard_normal(12)
            corr = D.atoms.T @ y
            want = np.argsort(-np.abs(corr), kind="stable")[:2]
            code = omp_encode(D, y, L=2)
            assert set(code.indices) == set(int(i) for i in want)
            for idx, val in zip(code.indices, code.values):
                assert val == pytest.approx(corr[idx], rel=1e-10)

    def test_sparsity_budget_respected(self):
        D = random_dictionary(4)
        rng = np.random.default_rng(5)
        for L in (1, 2, 3):
            for _ in range(10):
                code = omp_encode(D, rng.standard_normal(8), L)
                assert code.nnz <= L

    def test_residual_nonincreasing_with_budget(self):
        # The greedy path is prefix-stable, so growing L extends the same
        # selection sequence; the residual at each step never increases.
        D = random_dictionary(6)
        rng = np.random.default_rng(7)
        for _ in range(10):
            y = rng.standard_normal(8)
            errs = [residual_norm(D, y, omp_encode(D, y, L)) for L in (1, 2, 3, 4)]
            for a, b in zip(errs, errs[1:]):
                assert b <= a + 1e-12

    def test_positive_scale_equivariance_exact_power_of_two(self):
        D = random_dictionary(8)
        rng = np.random.default_rng(9)
        for _ in range(10):
            y = rng.standard_normal(8)
            base = omp_encode(D, y, L=2)
            scaled = omp_encode(D, 4.0 * y, L=2)
            assert scaled.indices == base.indices
            assert np.array_equal(np.array(scaled.values), 4.0 * np.array(base.values))

    def test_positive_scale_equivariance_general(self):
        D = random_dictionary(10)
        rng = np.random.default_rng(11)
        for _ in range(20):
            y = rng.standard_normal(8)
            c = float(rng.uniform(0.1, 10.0))
            base = omp_encode(D, y, L=2)
            scaled = omp_encode(D, c * y, L=2)
            assert scaled.indices == base.indices
            assert np.allclose(np.array(scaled.values), c * np.array(base.values),
                               rtol=1e-12)

    def test_signal_orthogonal_to_dictionary_stops(self):
        # Atoms live in the first two coordinates; the signal in the third.
        D = Dictionary(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        code = omp_encode(D, np.array([0.0, 0.0, 1.0]), L=2)
        assert code.indices == ()

    def test_length_mismatch(self):
        D = random_dictionary(12)
        with pytest.raises(ValueError):
            omp_encode(D, np.zeros(7), L=1)


class TestBatchEncode:
    def test_two_atom_columns(self):
        D = random_dictionary(0)
        Y = D.atoms[:, [1, 2]]
        S = batch_encode(D, Y, L=1)
        assert S.columns[0].indices == (1,)
        assert S.columns[1].indices == (2,)
        assert S.columns[0].values[0] == pytest.approx(1.0, abs=1e-12)

    def test_empty_batch(self):
        D = random_dictionary(1)
        S = batch_encode(D, np.zeros((8, 0)), L=2)
        assert S.n == 0
        assert S.to_dense().shape == (16, 0)

    def test_matches_sequential_encoding(self):
        D = random_dictionary(2)
        rng = np.random.default_rng(13)
        Y = rng.standard_normal((8, 20))
        S = batch_encode(D, Y, L=2)
        for j in range(20):
            assert S.columns[j] == omp_encode(D, Y[:, j], L=2)

    def test_column_error_carries_index(self):
        D = random_dictionary(3)
        Y = np.zeros((8, 3))
        Y[0, 2] = np.nan
        with pytest.raises(ValueError, match="column 2"):
            batch_encode(D, Y, L=1)


class TestExhaustiveEncode:
    def test_recovers_single_atom(self):
        D = random_dictionary(0)
        code = exhaustive_encode(D, D.atoms[:, 2], L=2)
        assert 2 in code.indices
        assert residual_norm(D, D.atoms[:, 2], code) <= 1e-10

    def test_recovers_planted_pair(self):
        D = random_dictionary(21, m=16, k=8)
        y = 0.7 * D.atoms[:, 1] + 0.3 * D.atoms[:, 4]
        code = exhaustive_encode(D, y, L=2)
        assert code.indices == (1, 4)
        assert residual_norm(D, y, code) <= 1e-10

    def test_never_worse_than_greedy(self):
        rng = np.random.default_rng(14)
        for trial in range(30):
            D = random_dictionary(trial, m=6, k=10)
            y = rng.standard_normal(6)
            greedy = residual_norm(D, y, omp_encode(D, y, L=2))
            best = residual_norm(D, y, exhaustive_encode(D, y, L=2))
            assert best <= greedy + 1e-12

    def test_guard_on_large_problems(self):
        D = random_dictionary(15, m=8, k=25)
        with pytest.raises(ValueError):
            exhaustive_encode(D, np.zeros(8), L=2)
        D = random_dictionary(16, m=8, k=8)
        with pytest.raises(ValueError):
            exhaustive_encode(D, np.zeros(8), L=4)

    def test_exact_match_with_omp_on_orthonormal(self):
        for trial in range(10):
            D = orthonormal_dictionary(trial)
            y = np.random.default_rng(100 + trial).standard_normal(12)
            for L in (1, 2):
                a = omp_encode(D, y, L)
                b = exhaustive_encode(D, y, L)
                assert a == b  # same support and bit-identical values


class TestSparseCodeMatrix:
    def test_dense_shape_and_content(self):
        cols = (SparseCode((0,), (2.0,), 3), SparseCode((2,), (-1.0,), 3))
        S = SparseCodeMatrix(cols)
        assert S.k == 3 and S.n == 2
        assert np.array_equal(S.to_dense(), np.array([[2.0, 0.0], [0.0, 0.0], [0.0, -1.0]]))

    def test_mixed_lengths_rejected(self):
        with pytest.raises(ValueError):
            SparseCodeMatrix((SparseCode((0,), (1.0,), 3), SparseCode((0,), (1.0,), 4)))
