import io

import numpy as np
import pytest

from exceptions import DimensionError, FormatError
from tensor import Tensor
from tensor.core import full, zeros
from tensor.io import load_tensor, read_tensor, save_tensor, write_tensor
from tensor.ops import add, crop2d, map_elements, matmul, mul, pad2d, reshape


def test_constructor_copies_into_float32():
    src = np.arange(6, dtype=np.float64)
    t = Tensor(src, shape=(1, 2, 3))
    src[0] = 100.0
    assert t.shape == (1, 2, 3)
    assert t.data.dtype == np.float32
    assert t.data[0, 0, 0] == 0.0


def test_flat_layout_is_nhwc_row_major():
    t = Tensor(np.arange(2 * 3 * 4 * 5), shape=(2, 3, 4, 5))
    n, h, w, c = 1, 2, 3, 4
    assert t.flat()[((n * 3 + h) * 4 + w) * 5 + c] == t.data[n, h, w, c]


def test_constructor_rejects_size_mismatch():
    with pytest.raises(DimensionError, match=r"\[2, 2\]"):
        Tensor([1.0, 2.0, 3.0], shape=(2, 2))


def test_zero_extent_is_rejected():
    with pytest.raises(DimensionError):
        zeros((1, 0, 3))


def test_tensors_are_read_only():
    t = full((2, 2), 1.5)
    with pytest.raises(ValueError):
        t.data[0, 0] = 2.0
    copy = t.numpy()
    copy[0, 0] = 2.0
    assert t.data[0, 0] == 1.5


def test_elementwise_requires_equal_shapes():
    a, b = zeros((2, 3)), zeros((3, 2))
    with pytest.raises(DimensionError, match=r"\[2, 3\] vs \[3, 2\]"):
        add(a, b)
    assert mul(full((2, 2), 2.0), full((2, 2), 3.0)) == full((2, 2), 6.0)


def test_matmul_and_errors():
    a = Tensor([[1, 2], [3, 4]])
    b = Tensor([[1], [1]])
    assert matmul(a, b) == Tensor([[3], [7]])
    with pytest.raises(DimensionError):
        matmul(a, Tensor([[1, 2, 3]]))


def test_map_elements_accepts_ufuncs_and_callables():
    t = Tensor([[-1.0, 4.0]])
    assert map_elements(t, np.abs) == Tensor([[1.0, 4.0]])
    assert map_elements(t, lambda v: v * 2) == Tensor([[-2.0, 8.0]])


def test_reshape_checks_size():
    t = zeros((2, 6))
    assert reshape(t, (3, 4)).shape == (3, 4)
    with pytest.raises(DimensionError):
        reshape(t, (5, 2))


def test_crop_inverts_pad(make_tensor):
    x = make_tensor(1, 5, 6, 3)
    padded = pad2d(x, 1, 2, 0, 3, value=7.0)
    assert padded.shape == (1, 8, 9, 3)
    assert padded.data[0, 0, 0, 0] == 7.0
    assert crop2d(padded, 1, 2, 0, 3) == x
    assert pad2d(x, 0, 0, 0, 0) is x


def test_pad_rejects_negative_counts(make_tensor):
    with pytest.raises(DimensionError):
        pad2d(make_tensor(1, 2, 2, 1), -1, 0, 0, 0)


def test_tensor_file_round_trip(tmp_path, make_tensor):
    x = make_tensor(2, 3, 4, 5)
    path = tmp_path / "x.evts"
    save_tensor(path, x)
    assert load_tensor(path) == x


def test_tensor_file_bad_magic():
    with pytest.raises(FormatError, match="magic"):
        read_tensor(io.BytesIO(b"NOPE" + b"\x00" * 16))


def test_tensor_file_truncated_payload(make_tensor):
    buf = io.BytesIO()
    write_tensor(buf, make_tensor(1, 2, 2, 2))
    data = buf.getvalue()[:-3]
    with pytest.raises(FormatError, match="truncated"):
        read_tensor(io.BytesIO(data))


def test_tensor_file_trailing_bytes(tmp_path, make_tensor):
    path = tmp_path / "x.evts"
    save_tensor(path, make_tensor(1, 1, 1, 2))
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        load_tensor(path)


def test_matmul_identity_and_counting_examples(make_tensor):
    x = make_tensor(2, 3)
    assert matmul(Tensor(np.eye(2)), x) == x
    assert matmul(full((1, 7), 1.0), full((7, 1), 1.0)) == Tensor([[7.0]])


def test_matmul_is_associative(rng):
    for _ in range(50):
        m, k, l_, n = (int(v) for v in rng.integers(1, 7, size=4))
        a, b, c = (
            Tensor.from_numpy(rng.standard_normal(shape).astype(np.float32))
            for shape in ((m, k), (k, l_), (l_, n))
        )
        left = matmul(matmul(a, b), c).data
        right = matmul(a, matmul(b, c)).data
        np.testing.assert_allclose(left, right, rtol=1e-4, atol=1e-5)


def test_rank1_reshape_round_trip(make_tensor):
    x = make_tensor(2, 3, 4, 5)
    flat = reshape(x, (x.size,))
    assert flat.rank == 1
    assert reshape(flat, x.shape) == x


def test_pad_bottom_right_example():
    x = Tensor([[1.0, 2.0], [3.0, 4.0]], shape=(1, 2, 2, 1))
    out = pad2d(x, 0, 1, 0, 1, value=9.0)
    assert out.shape == (1, 3, 3, 1)
    np.testing.assert_array_equal(
        out.data[0, :, :, 0], [[1.0, 2.0, 9.0], [3.0, 4.0, 9.0], [9.0, 9.0, 9.0]]
    )


def test_pad_single_pixel_example():
    out = pad2d(Tensor([5.0], shape=(1, 1, 1, 1)), 1, 1, 1, 1)
    expected = np.zeros((3, 3))
    expected[1, 1] = 5.0
    np.testing.assert_array_equal(out.data[0, :, :, 0], expected)


def test_scalar_tensors_keep_rank_zero(tmp_path):
    scalar = Tensor.from_numpy(np.float32(2.5))
    assert scalar.rank == 0
    assert scalar.shape == ()
    path = tmp_path / "scalar.evts"
    save_tensor(path, scalar)
    loaded = load_tensor(path)
    assert loaded.rank == 0
    assert loaded == scalar
