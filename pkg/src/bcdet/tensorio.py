"""Binary tensor files and portable pixmap images.

Tensor layout (little-endian, independent of host)::

    b"BTNSR1\\0"  7-byte magic
    u8           dtype code (0 = float32, 1 = uint8)
    u8           ndim (1..4)
    u64 * ndim   dims
    ...          row-major payload

Images are plain numpy ``uint8`` arrays, ``(H, W)`` for gray (P5) and
``(H, W, 3)`` for RGB (P6).
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"BTNSR1\x00"
MAX_NDIM = 4

_CODE_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("u1")}


def _dtype_code(dtype: np.dtype):
    if dtype.kind == "f" and dtype.itemsize == 4:
        return 0
    if dtype.kind == "u" and dtype.itemsize == 1:
        return 1
    return None


class TensorFormatError(ValueError):
    """Base class for malformed tensor files."""


class BadMagicError(TensorFormatError):
    pass


class TruncatedTensorError(TensorFormatError):
    pass


class UnsupportedDtypeError(TensorFormatError):
    pass


class ImageFormatError(ValueError):
    pass


def _check_shape(shape):
    if not 1 <= len(shape) <= MAX_NDIM:
        raise TensorFormatError(f"ndim must be in 1..{MAX_NDIM}, got {len(shape)}")
    if any(d < 1 for d in shape):
        raise TensorFormatError(f"all dims must be >= 1, got {tuple(shape)}")


def encode_tensor(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    code = _dtype_code(array.dtype)
    if code is None:
        raise UnsupportedDtypeError(f"unsupported dtype {array.dtype}; use float32 or uint8")
    _check_shape(array.shape)
    header = MAGIC + struct.pack("<BB", code, array.ndim) + struct.pack(f"<{array.ndim}Q", *array.shape)
    payload = np.ascontiguousarray(array, dtype=_CODE_TO_DTYPE[code]).tobytes()
    return header + payload


def decode_tensor(blob: bytes) -> np.ndarray:
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError("bad magic: not a BTNSR1 tensor file")
    pos = len(MAGIC)
    if len(blob) < pos + 2:
        raise TruncatedTensorError("truncated header")
    code, ndim = struct.unpack_from("<BB", blob, pos)
    pos += 2
    if code not in _CODE_TO_DTYPE:
        raise UnsupportedDtypeError(f"unsupported dtype code {code}")
    if not 1 <= ndim <= MAX_NDIM:
        raise TensorFormatError(f"ndim must be in 1..{MAX_NDIM}, got {ndim}")
    if len(blob) < pos + 8 * ndim:
        raise TruncatedTensorError("truncated dims")
    shape = struct.unpack_from(f"<{ndim}Q", blob, pos)
    pos += 8 * ndim
    _check_shape(shape)
    dtype = _CODE_TO_DTYPE[code]
    nbytes = int(np.prod(shape, dtype=np.uint64)) * dtype.itemsize
    if len(blob) - pos < nbytes:
        raise TruncatedTensorError(f"payload has {len(blob) - pos} bytes, expected {nbytes}")
    if len(blob) - pos > nbytes:
        raise TensorFormatError("trailing bytes after payload")
    data = np.frombuffer(blob, dtype=dtype, count=nbytes // dtype.itemsize, offset=pos)
    return data.reshape(shape).astype(dtype.newbyteorder("="), copy=True)


def write_tensor(array: np.ndarray, path: str | os.PathLike) -> None:
    blob = encode_tensor(array)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


# -- portable pixmaps ------------------------------------------------------


def _tokens(blob: bytes, count: int, pos: int):
    """Pull ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(blob)
    while len(out) < count:
        while pos < n and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < n and blob[pos : pos + 1] == b"#":
            while pos < n and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not blob[pos : pos + 1].isspace() and blob[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("malformed header: unexpected end of file")
        out.append(blob[start:pos])
    return out, pos


def decode_image(blob: bytes) -> np.ndarray:
    magic = blob[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise ImageFormatError(f"malformed header: unsupported magic {magic!r}")
    tokens, pos = _tokens(blob, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"malformed header: {exc}") from None
    if width < 1 or height < 1:
        raise ImageFormatError("malformed header: non-positive dimensions")
    if maxval != 255:
        raise ImageFormatError(f"maxval must be 255, got {maxval}")
    if pos >= len(blob) or not blob[pos : pos + 1].isspace():
        raise ImageFormatError("malformed header: missing separator before raster")
    pos += 1
    expected = width * height * channels
    if len(blob) - pos < expected:
        raise ImageFormatError(f"short data: {len(blob) - pos} of {expected} bytes")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=expected, offset=pos).copy()
    shape = (height, width, 3) if channels == 3 else (height, width)
    return pixels.reshape(shape)


def encode_image(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ImageFormatError(f"images must be uint8, got {image.dtype}")
    if image.ndim == 2:
        magic = b"P5"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    elif image.ndim == 3 and image.shape[2] == 1:
        magic, image = b"P5", image[:, :, 0]
    else:
        raise ImageFormatError(f"unsupported image shape {image.shape}")
    height, width = image.shape[:2]
    if width < 1 or height < 1:
        raise ImageFormatError("empty image")
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    return header + np.ascontiguousarray(image).tobytes()


def write_image(image: np.ndarray, path: str | os.PathLike) -> None:
    blob = encode_image(image)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image(fh.read())
