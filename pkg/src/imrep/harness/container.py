"""The binary container shared by feature caches and model files.

All integers are little-endian. A file is

    magic "DVK1" | version u32 | dim u32 | count u32 | dtype u8 | payload
    | crc32 u32

where the CRC covers every byte before it. For a feature cache the payload
is a row-major (count x dim) array with dtype tag 0 (float32) or 1
(float64). A sectioned container (model files) reuses the same header with
dim = 0, count = number of sections and dtype tag 255; its payload is a
section table (name, byte offset, byte length per section) followed by the
section blobs, each blob a typed array or raw bytes.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from imrep.errors import DataError

MAGIC = b"DVK1"
VERSION = 1

DTYPE_TAGS = {0: np.float32, 1: np.float64, 2: np.int64}
_TAG_FOR = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.int64): 2}
SECTION_TAG = 255

_HEADER = struct.Struct("<4sIIIB")


def _check_crc(blob: bytes, path) -> bytes:
    if len(blob) < _HEADER.size + 4:
        raise DataError(f"container too short: {path}")
    body, crc = blob[:-4], struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(body) != crc:
        raise DataError(f"checksum mismatch in {path}")
    return body


def _read_header(body: bytes, path):
    magic, version, dim, count, tag = _HEADER.unpack_from(body)
    if magic != MAGIC:
        raise DataError(f"bad magic in {path}")
    if version != VERSION:
        raise DataError(f"unsupported container version {version} in {path}")
    return dim, count, tag


def write_feature_cache(path, values: np.ndarray) -> None:
    """Write a (count, dim) float array; the round trip is bit-exact."""
    values = np.atleast_2d(values)
    if values.dtype not in (np.float32, np.float64):
        raise DataError(f"unsupported feature dtype {values.dtype}")
    tag = _TAG_FOR[values.dtype]
    body = _HEADER.pack(MAGIC, VERSION, values.shape[1], values.shape[0], tag)
    body += np.ascontiguousarray(values).astype(values.dtype, copy=False).tobytes()
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def read_feature_cache(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature cache not found: {path}")
    body = _check_crc(path.read_bytes(), path)
    dim, count, tag = _read_header(body, path)
    if tag not in DTYPE_TAGS or tag == SECTION_TAG:
        raise DataError(f"bad dtype tag {tag} in {path}")
    dtype = np.dtype(DTYPE_TAGS[tag]).newbyteorder("<")
    data = np.frombuffer(body, dtype=dtype, count=count * dim, offset=_HEADER.size)
    return data.reshape(count, dim).astype(DTYPE_TAGS[tag])


# ---------------------------------------------------------------------------
# sectioned container

def _encode_blob(value) -> bytes:
    if isinstance(value, bytes):
        return b"B" + value
    arr = np.asarray(value)
    if arr.dtype == np.int32:
        arr = arr.astype(np.int64)
    if arr.dtype not in _TAG_FOR:
        arr = arr.astype(np.float64)
    head = struct.pack("<cBB", b"A", _TAG_FOR[arr.dtype], arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr).tobytes()


def _decode_blob(blob: bytes):
    kind = blob[:1]
    if kind == b"B":
        return blob[1:]
    if kind != b"A":
        raise DataError("corrupt section blob")
    tag, ndim = struct.unpack_from("<BB", blob, 1)
    shape = struct.unpack_from(f"<{ndim}I", blob, 3)
    dtype = np.dtype(DTYPE_TAGS[tag]).newbyteorder("<")
    data = np.frombuffer(blob, dtype=dtype, offset=3 + 4 * ndim)
    return data.reshape(shape).astype(DTYPE_TAGS[tag])


def write_sections(path, sections: dict) -> None:
    """Write named arrays/bytes into one sectioned container file."""
    names = list(sections)
    blobs = [_encode_blob(sections[n]) for n in names]

    table = b""
    offsets = []
    pos = 0
    for name, blob in zip(names, blobs):
        offsets.append(pos)
        pos += len(blob)
    for name, blob, off in zip(names, blobs, offsets):
        raw = name.encode("utf-8")
        table += struct.pack("<H", len(raw)) + raw
        table += struct.pack("<QQ", off, len(blob))

    body = _HEADER.pack(MAGIC, VERSION, 0, len(names), SECTION_TAG)
    body += table + b"".join(blobs)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def read_sections(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    body = _check_crc(path.read_bytes(), path)
    dim, count, tag = _read_header(body, path)
    if tag != SECTION_TAG or dim != 0:
        raise DataError(f"{path} is not a sectioned container")
    pos = _HEADER.size
    table = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", body, pos)
        pos += 2
        name = body[pos : pos + nlen].decode("utf-8")
        pos += nlen
        off, length = struct.unpack_from("<QQ", body, pos)
        pos += 16
        table.append((name, off, length))
    base = pos
    out = {}
    for name, off, length in table:
        out[name] = _decode_blob(body[base + off : base + off + length])
    return out
