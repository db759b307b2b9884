import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrf.mmio import (MatrixMarketError, read_matrix_market, read_vector,
                       write_matrix_market, write_vector)
from slrf.problems import gen_fem1d
from slrf.sparse import CsrMatrix

from conftest import random_sparse


def _write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestRead:
    def test_symmetric_expanded(self, tmp_path):
        path = _write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n"
                                "% comment\n2 2 2\n1 1 4.0\n2 1 -1.5\n")
        M = read_matrix_market(path)
        assert np.array_equal(M.to_dense(), [[4.0, -1.5], [-1.5, 0.0]])

    def test_pattern_and_integer(self, tmp_path):
        P = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n"
                                                "2 2 1\n2 2\n"))
        assert P.to_dense()[1, 1] == 1.0
        I = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate integer general\n"
                                                "1 1 1\n1 1 7\n", "i.mtx"))
        assert I.to_dense()[0, 0] == 7.0

    def test_complex(self, tmp_path):
        M = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate complex general\n"
                                                "1 2 1\n1 2 1.0 -2.0\n"))
        assert M.to_dense()[0, 1] == 1 - 2j

    def test_array_general_column_major(self, tmp_path):
        M = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix array real general\n"
                                                "2 2\n1\n2\n3\n4\n"))
        assert np.array_equal(M.to_dense(), [[1, 3], [2, 4]])

    def test_array_symmetric(self, tmp_path):
        M = read_matrix_market(_write(tmp_path, "%%MatrixMarket matrix array real symmetric\n"
                                                "2 2\n1\n2\n3\n"))
        assert np.array_equal(M.to_dense(), [[1, 2], [2, 3]])

    def test_duplicates_summed_with_warning(self, tmp_path):
        path = _write(tmp_path, "%%MatrixMarket matrix coordinate real general\n"
                                "2 2 2\n1 1 1.0\n1 1 2.5\n")
        with pytest.warns(UserWarning):
            M = read_matrix_market(path)
        assert M.to_dense()[0, 0] == 3.5

    @pytest.mark.parametrize("body", [
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        "%%NotMatrixMarket\n1 1 1\n1 1 1\n",
    ])
    def test_errors(self, tmp_path, body):
        with pytest.raises(MatrixMarketError):
            read_matrix_market(_write(tmp_path, body))


class TestRoundTrip:
    def test_fem_symmetric_exact(self, tmp_path):
        A = gen_fem1d(30).A
        path = str(tmp_path / "A.mtx")
        write_matrix_market(A, path, symmetric=True)
        B = read_matrix_market(path)
        assert np.array_equal(A.to_dense(), B.to_dense())

    def test_symmetric_requires_symmetry(self, tmp_path):
        with pytest.raises(ValueError):
            write_matrix_market(CsrMatrix.from_dense(np.array([[1.0, 2], [0, 1]])),
                                str(tmp_path / "x.mtx"), symmetric=True)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 15), st.floats(0.05, 0.9), st.integers(0, 1000), st.booleans())
    def test_general_bit_exact(self, tmp_path_factory, n, dens, seed, cplx):
        M = random_sparse(n, dens, seed=seed, complex_=cplx)
        path = str(tmp_path_factory.mktemp("mm") / "m.mtx")
        write_matrix_market(M, path, comment="roundtrip\nline two")
        R = read_matrix_market(path)
        assert np.array_equal(R.to_dense(), M.to_dense())

    def test_vector_block(self, tmp_path, rng):
        X = rng.standard_normal((7, 3))
        path = str(tmp_path / "v.mtx")
        write_vector(X, path)
        assert np.array_equal(read_vector(path), X)
        write_vector(X[:, 0], path)
        assert np.array_equal(read_vector(path), X[:, 0])
