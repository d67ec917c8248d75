import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bcdet.tensorio import (
    MAGIC,
    BadMagicError,
    ImageFormatError,
    TensorFormatError,
    TruncatedTensorError,
    UnsupportedDtypeError,
    decode_tensor,
    encode_tensor,
    read_image,
    read_tensor,
    write_image,
    write_tensor,
)


def test_zero_tensor_roundtrip(tmp_path):
    t = np.zeros((2, 3), dtype=np.float32)
    write_tensor(t, tmp_path / "z.btnsr")
    back = read_tensor(tmp_path / "z.btnsr")
    assert back.dtype == np.float32 and back.shape == (2, 3)
    np.testing.assert_array_equal(back, t)


def test_mask_roundtrip_checksum(tmp_path):
    rng = np.random.default_rng(5)
    mask = (rng.random((1, 128, 128)) > 0.5).astype(np.uint8)
    write_tensor(mask, tmp_path / "m.btnsr")
    back = read_tensor(tmp_path / "m.btnsr")
    assert hashlib.sha256(back.tobytes()).digest() == hashlib.sha256(mask.tobytes()).digest()


def test_header_layout_is_little_endian():
    blob = encode_tensor(np.arange(3, dtype=np.float32))
    assert blob[:7] == MAGIC
    assert blob[7] == 0 and blob[8] == 1
    assert struct.unpack("<Q", blob[9:17]) == (3,)
    assert blob[17:21] == struct.pack("<f", 0.0)
    assert blob[21:25] == struct.pack("<f", 1.0)


def test_big_endian_input_is_written_little_endian():
    a = np.arange(4, dtype=">f4")
    assert encode_tensor(a) == encode_tensor(a.astype("<f4"))


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.btnsr"
    path.write_bytes(b"NOTATNSR" + b"\x00" * 20)
    with pytest.raises(BadMagicError, match="bad magic"):
        read_tensor(path)


def test_truncated_payload():
    blob = encode_tensor(np.ones((4, 4), dtype=np.float32))
    with pytest.raises(TruncatedTensorError):
        decode_tensor(blob[:-1])
    with pytest.raises(TruncatedTensorError):
        decode_tensor(blob[:12])


def test_unsupported_dtype_code():
    blob = bytearray(encode_tensor(np.ones(2, dtype=np.uint8)))
    blob[7] = 9
    with pytest.raises(UnsupportedDtypeError):
        decode_tensor(bytes(blob))
    with pytest.raises(UnsupportedDtypeError):
        encode_tensor(np.ones(2, dtype=np.float64))


def test_error_classes_are_distinct():
    assert len({BadMagicError, TruncatedTensorError, UnsupportedDtypeError}) == 3
    for cls in (BadMagicError, TruncatedTensorError, UnsupportedDtypeError):
        assert issubclass(cls, TensorFormatError)


def test_rejects_too_many_dims():
    with pytest.raises(TensorFormatError):
        encode_tensor(np.zeros((1, 1, 1, 1, 1), dtype=np.uint8))


_shapes = hnp.array_shapes(min_dims=1, max_dims=4, min_side=1, max_side=6)


@settings(max_examples=40, deadline=None)
@given(st.one_of(
    hnp.arrays(np.float32, _shapes, elements=st.floats(allow_nan=True, width=32)),
    hnp.arrays(np.uint8, _shapes),
))
def test_roundtrip_is_bitwise(arr):
    back = decode_tensor(encode_tensor(arr))
    assert back.dtype == arr.dtype and back.shape == arr.shape
    assert back.tobytes() == arr.tobytes()


def test_rgb_image_roundtrip(tmp_path):
    img = np.full((2, 2, 3), 255, dtype=np.uint8)
    write_image(img, tmp_path / "w.ppm")
    assert (tmp_path / "w.ppm").read_bytes().startswith(b"P6")
    np.testing.assert_array_equal(read_image(tmp_path / "w.ppm"), img)


def test_gray_image_roundtrip(tmp_path):
    mask = (np.arange(35).reshape(5, 7) % 2 * 255).astype(np.uint8)
    write_image(mask, tmp_path / "m.pgm")
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5")
    back = read_image(tmp_path / "m.pgm")
    assert back.shape == (5, 7)
    np.testing.assert_array_equal(back, mask)


def test_maxval_65535_rejected(tmp_path):
    path = tmp_path / "deep.ppm"
    path.write_bytes(b"P6\n1 1\n65535\n" + b"\x00" * 6)
    with pytest.raises(ImageFormatError, match="maxval"):
        read_image(path)


def test_header_comments_are_skipped(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\x02")
    np.testing.assert_array_equal(read_image(path), [[1, 2]])


@pytest.mark.parametrize(
    "blob",
    [b"P3\n1 1\n255\n000", b"P6\n1\n", b"P6\nx 1\n255\n\x00\x00\x00", b"P6\n2 2\n255\n\x00\x00\x00"],
    ids=["ascii-variant", "short-header", "non-numeric", "short-data"],
)
def test_malformed_images(tmp_path, blob):
    path = tmp_path / "bad.ppm"
    path.write_bytes(blob)
    with pytest.raises(ImageFormatError):
        read_image(path)
