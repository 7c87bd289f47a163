import io

import numpy as np
import pytest

from dvpool import (
    FeatureMap,
    NpyFormatError,
    read_labels,
    read_npy,
    read_npy_file,
    write_npy,
    write_npy_file,
)


class TestRoundTrip:
    def test_2x2_f8_identity(self):
        arr = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = read_npy(write_npy(arr))
        assert out.dtype == np.float64
        np.testing.assert_array_equal(out, arr)
        # write is deterministic, so a second pass gives identical bytes
        assert write_npy(out) == write_npy(arr)

    def test_randomized_all_dtypes_and_shapes(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            shape = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
            dtype = rng.choice([np.float64, np.float32, np.int64])
            if dtype == np.int64:
                arr = rng.integers(-1000, 1000, size=shape)
            else:
                arr = rng.normal(size=shape).astype(dtype)
            out = read_npy(write_npy(arr))
            assert out.dtype == arr.dtype
            np.testing.assert_array_equal(out, arr)

    def test_zero_length_and_scalar_shapes(self):
        for arr in (np.zeros((0,)), np.zeros((3, 0, 2)), np.float64(7.5).reshape(())):
            out = read_npy(write_npy(arr))
            assert out.shape == arr.shape
            np.testing.assert_array_equal(out, arr)

    def test_fortran_input_is_written_in_c_order(self):
        arr = np.asfortranarray(np.arange(6.0).reshape(2, 3))
        out = read_npy(write_npy(arr))
        np.testing.assert_array_equal(out, arr)
        assert out.flags["C_CONTIGUOUS"]

    def test_f4_widening_through_feature_map(self):
        arr = np.random.default_rng(1).normal(size=(2, 3, 3)).astype(np.float32)
        widened = FeatureMap(read_npy(write_npy(arr))).data
        assert widened.dtype == np.float64
        np.testing.assert_array_equal(widened.astype(np.float32), arr)

    def test_numpy_reads_our_bytes(self):
        arr = np.arange(12, dtype=np.int64).reshape(3, 4)
        loaded = np.load(io.BytesIO(write_npy(arr)))
        np.testing.assert_array_equal(loaded, arr)

    def test_we_read_numpy_bytes(self):
        arr = np.random.default_rng(2).normal(size=(4, 5)).astype(np.float32)
        buf = io.BytesIO()
        np.save(buf, arr)
        out = read_npy(buf.getvalue())
        np.testing.assert_array_equal(out, arr)

    def test_file_helpers(self, tmp_path):
        arr = np.arange(5, dtype=np.int64)
        path = tmp_path / "x.npy"
        write_npy_file(path, arr)
        np.testing.assert_array_equal(read_npy_file(path), arr)
        np.testing.assert_array_equal(np.load(path), arr)


def valid_bytes():
    return write_npy(np.arange(4, dtype=np.float64).reshape(2, 2))


class TestRejections:
    def test_bad_magic(self):
        buf = b"\x93NUMPZ" + valid_bytes()[6:]
        with pytest.raises(NpyFormatError, match="magic"):
            read_npy(buf)

    def test_unsupported_version(self):
        buf = bytearray(valid_bytes())
        buf[6:8] = bytes((2, 0))
        with pytest.raises(NpyFormatError, match="version"):
            read_npy(bytes(buf))

    def test_fortran_order_rejected(self):
        arr = np.asfortranarray(np.arange(6.0).reshape(2, 3))
        buf = io.BytesIO()
        np.save(buf, arr)
        with pytest.raises(NpyFormatError, match="order"):
            read_npy(buf.getvalue())

    def test_unsupported_dtype(self):
        buf = io.BytesIO()
        np.save(buf, np.arange(4, dtype=np.int32))
        with pytest.raises(NpyFormatError, match="dtype"):
            read_npy(buf.getvalue())
        with pytest.raises(NpyFormatError, match="dtype"):
            write_npy(np.arange(4, dtype=np.int16))

    def test_truncated_payload(self):
        buf = valid_bytes()
        with pytest.raises(NpyFormatError, match="bytes"):
            read_npy(buf[:-8])
        with pytest.raises(NpyFormatError, match="truncated"):
            read_npy(buf[:6])

    def test_trailing_garbage(self):
        with pytest.raises(NpyFormatError, match="bytes"):
            read_npy(valid_bytes() + b"\x00")

    def test_malformed_header(self):
        good = valid_bytes()
        header_len = int.from_bytes(good[8:10], "little")
        junk = b"not a dict".ljust(header_len, b" ")
        with pytest.raises(NpyFormatError):
            read_npy(good[:10] + junk + good[10 + header_len:])


class TestLabels:
    def test_csv_round(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("label\n0\n2\n1\n")
        np.testing.assert_array_equal(read_labels(path), [0, 2, 1])

    def test_csv_missing_header(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("0\n2\n1\n")
        with pytest.raises(NpyFormatError, match="header"):
            read_labels(path)

    def test_csv_rejects_negative_and_non_integer(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("label\n0\n-2\n")
        with pytest.raises(NpyFormatError, match="non-negative"):
            read_labels(path)
        path.write_text("label\n0\n1.5\n")
        with pytest.raises(NpyFormatError):
            read_labels(path)

    def test_npy_labels(self, tmp_path):
        path = tmp_path / "y.npy"
        write_npy_file(path, np.array([3, 0, 1], dtype=np.int64))
        np.testing.assert_array_equal(read_labels(path), [3, 0, 1])

    def test_npy_labels_require_int64_1d_non_negative(self, tmp_path):
        path = tmp_path / "y.npy"
        write_npy_file(path, np.array([0.0, 1.0]))
        with pytest.raises(NpyFormatError, match="int64"):
            read_labels(path)
        write_npy_file(path, np.array([[0], [1]], dtype=np.int64))
        with pytest.raises(NpyFormatError, match="1D"):
            read_labels(path)
        write_npy_file(path, np.array([0, -1], dtype=np.int64))
        with pytest.raises(NpyFormatError, match="non-negative"):
            read_labels(path)
