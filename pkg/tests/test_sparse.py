import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrf.problems import gen_fem1d, gen_fem2d_grid
from slrf.sparse import (CsrMatrix, DimensionError, MatrixPencil, Permutation,
                         ShiftedPattern, SpmvCounter, bandwidth, rcm_order,
                         shifted_pencil, spmv)

from conftest import random_sparse


def _tridiag(n):
    return CsrMatrix.from_dense(2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))


class TestCsrInvariants:
    def test_identity_spmv(self):
        assert np.array_equal(spmv(CsrMatrix.identity(3), np.array([1.0, 2, 3])), [1, 2, 3])

    def test_tridiag_row_sums(self):
        assert np.array_equal(spmv(_tridiag(3), np.ones(3)), [1, 0, 1])

    def test_random_matches_dense(self, rng):
        M = random_sparse(50, 0.1, seed=3)
        x = rng.standard_normal(50)
        assert np.max(np.abs(spmv(M, x) - M.to_dense() @ x)) < 1e-13

    def test_complex_block(self, rng):
        M = random_sparse(30, 0.2, seed=4, complex_=True)
        X = rng.standard_normal((30, 3)) + 1j * rng.standard_normal((30, 3))
        assert np.allclose(spmv(M, X), M.to_dense() @ X, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            spmv(CsrMatrix.identity(3), np.ones(4))

    @pytest.mark.parametrize("row_ptr,col_idx", [
        ([0, 2, 1], [0, 1]),        # decreasing row_ptr
        ([0, 2, 2], [1, 0]),        # unsorted columns
        ([0, 2, 2], [0, 0]),        # duplicate column
        ([0, 1, 2], [0, 5]),        # out of range
        ([1, 1, 2], [0, 1]),        # row_ptr[0] != 0
    ])
    def test_rejects_malformed(self, row_ptr, col_idx):
        with pytest.raises(ValueError):
            CsrMatrix(2, 2, row_ptr, col_idx, np.ones(len(col_idx)))

    def test_arrays_read_only(self):
        M = _tridiag(4)
        with pytest.raises(ValueError):
            M.values[0] = 5.0

    def test_from_coo_sums_duplicates_keeps_zeros(self):
        M = CsrMatrix.from_coo(2, 2, [0, 0, 1], [1, 1, 0], [1.0, 2.0, 0.0])
        assert M.nnz == 2
        assert M.to_dense()[0, 1] == 3.0
        assert M.prune().nnz == 1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 60), st.integers(0, 2**31))
    def test_from_coo_structure(self, m, n, k, seed):
        rng = np.random.default_rng(seed)
        rows, cols = rng.integers(0, m, k), rng.integers(0, n, k)
        vals = rng.standard_normal(k)
        M = CsrMatrix.from_coo(m, n, rows, cols, vals)
        dense = np.zeros((m, n))
        np.add.at(dense, (rows, cols), vals)
        assert np.allclose(M.to_dense(), dense)
        assert M.row_ptr[0] == 0 and M.row_ptr[-1] == M.nnz
        for i in range(m):
            c, _ = M.row(i)
            assert np.all(np.diff(c) > 0)

    def test_symmetry_check(self):
        assert _tridiag(5).is_symmetric()
        assert not CsrMatrix.from_dense(np.array([[1.0, 2], [0, 1]])).is_symmetric()

    def test_transpose_conj(self):
        M = random_sparse(8, 0.4, seed=2, complex_=True)
        assert np.allclose(M.transpose().to_dense(), M.to_dense().T)
        assert np.allclose(M.conj().to_dense(), M.to_dense().conj())


class TestCounter:
    def test_block_counts_columns(self):
        c = SpmvCounter()
        M = _tridiag(4)
        spmv(M, np.ones(4), c)
        spmv(M, np.ones((4, 3)), c)
        assert c.count == 4
        c.reset()
        assert c.count == 0

    def test_threads(self):
        c = SpmvCounter()

        def work():
            for _ in range(1000):
                c.add()

        ts = [threading.Thread(target=work) for _ in range(8)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()
        assert c.count == 8000


class TestPermutation:
    @settings(max_examples=30, deadline=None)
    @given(st.permutations(list(range(9))))
    def test_roundtrip(self, p):
        P = Permutation(np.array(p))
        x = np.arange(9.0) * 1.5
        assert np.array_equal(P.unapply(P.apply(x)), x)
        assert np.array_equal(P.apply(P.unapply(x)), x)

    def test_not_bijective(self):
        with pytest.raises(ValueError):
            Permutation(np.array([0, 0, 2]))

    def test_permute_matches_dense(self):
        M = random_sparse(10, 0.3, seed=5)
        p = np.random.default_rng(0).permutation(10)
        assert np.allclose(M.permute(Permutation(p)).to_dense(), M.to_dense()[np.ix_(p, p)])

    def test_permuted_solve_consistency(self, rng):
        # (P M P^T)(P x) = P (M x)
        M = random_sparse(12, 0.3, seed=6)
        P = Permutation(rng.permutation(12))
        x = rng.standard_normal(12)
        assert np.allclose(spmv(M.permute(P), P.apply(x)), P.apply(spmv(M, x)))


class TestRcm:
    def test_shuffled_band_recovered(self):
        n = 60
        M = _tridiag(n)
        p = np.random.default_rng(3).permutation(n)
        S = M.permute(Permutation(p))
        assert bandwidth(S) > 5
        assert bandwidth(S.permute(rcm_order(S))) == 1

    def test_grid_bandwidth_matches_scipy(self):
        from scipy.sparse.csgraph import reverse_cuthill_mckee

        A = gen_fem2d_grid(8, 8).A
        p = np.random.default_rng(1).permutation(A.nrows)
        S = A.permute(Permutation(p))
        ref = reverse_cuthill_mckee(S.to_scipy(), symmetric_mode=True)
        ours = bandwidth(S.permute(rcm_order(S)))
        assert ours <= bandwidth(S.permute(Permutation(ref)))
        assert ours < bandwidth(S) / 3

    def test_disconnected_components(self):
        M = CsrMatrix.from_dense(np.diag(np.ones(5)) + np.diag([1.0, 0, 0, 1], 1)
                                 + np.diag([1.0, 0, 0, 1], -1))
        P = rcm_order(M)
        assert sorted(P.perm.tolist()) == list(range(5))

    def test_deterministic(self):
        A = gen_fem2d_grid(6, 7).A
        assert np.array_equal(rcm_order(A).perm, rcm_order(A).perm)


class TestShifted:
    def test_matches_dense(self):
        p = gen_fem1d(20)
        s = 3.0 + 2.0j
        M = shifted_pencil(p, s)
        assert M.is_complex
        assert np.allclose(M.to_dense(), p.A.to_dense() - s * p.B.to_dense())

    def test_union_pattern(self):
        A = CsrMatrix.from_dense(np.array([[1.0, 0], [0, 1]]))
        B = CsrMatrix.from_dense(np.array([[1.0, 1], [1, 1]]))
        pat = ShiftedPattern(MatrixPencil(A, B))
        assert pat.matrix(1j).nnz == 4
        M = shifted_pencil(MatrixPencil(A, B), 2.0)
        assert M.is_symmetric()

    def test_pencil_shape_check(self):
        with pytest.raises(DimensionError):
            MatrixPencil(CsrMatrix.identity(3), CsrMatrix.identity(4))
