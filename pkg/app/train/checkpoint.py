# coding:utf-8
"""
Checkpoint file format, all integers little-endian:

    b"HVOX" | u16 version | records... | u32 CRC32 of everything before it

    record: u16 name length | name (utf-8) | u8 dtype tag | u8 rank
            | rank x u32 extents | u64 payload length | payload

Dtype tags: 0 float32, 1 float64, 2 raw bytes, 3 int64.
"""
import json
import logging
import os
import struct
import zlib
from collections import OrderedDict
from typing import Dict, Union

import numpy as np

from core.common.exception_handler import CheckpointError


logger = logging.getLogger(__name__)

MAGIC = b"HVOX"
FORMAT_VERSION = 1

DTYPE_TAGS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.int64): 3}
BYTES_TAG = 2
TAG_DTYPES = {v: k for k, v in DTYPE_TAGS.items()}

Record = Union[np.ndarray, bytes]


class Records(OrderedDict):
    """ name -> array/bytes mapping, a missing name raises `CheckpointError` """

    def __missing__(self, key):
        raise CheckpointError(f"checkpoint has no record `{key}`")

    def json(self, key):
        try:
            return json.loads(self[key].decode("utf-8"))
        except (AttributeError, UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"record `{key}` is not JSON: {e}") from e


def encode_json(value) -> bytes:
    return json.dumps(value, sort_keys=True).encode("utf-8")


def _encodeRecord(name: str, value: Record) -> bytes:
    key = name.encode("utf-8")
    if isinstance(value, (bytes, bytearray)):
        tag, extents, payload = BYTES_TAG, (), bytes(value)
    else:
        value = np.asarray(value)
        if value.dtype not in DTYPE_TAGS:
            raise CheckpointError(f"record `{name}`: unsupported dtype {value.dtype}")
        tag, extents = DTYPE_TAGS[value.dtype], value.shape
        payload = np.ascontiguousarray(value).astype(value.dtype.newbyteorder("<"), copy=False).tobytes()

    head = struct.pack("<H", len(key)) + key + struct.pack("<BB", tag, len(extents))
    head += struct.pack(f"<{len(extents)}I", *extents)
    return head + struct.pack("<Q", len(payload)) + payload


def write_records(path: str, records: Dict[str, Record]):
    """ write atomically: a temporary file in the same folder, then rename """
    body = MAGIC + struct.pack("<H", FORMAT_VERSION)
    body += b"".join(_encodeRecord(k, v) for k, v in records.items())
    body += struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(body)
        f.flush()
        os.fsync(f.fileno())

    os.replace(tmp, path)


class _Reader:

    def __init__(self, data: bytes, path: str):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated at byte {self.pos}")

        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_records(path: str) -> Records:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic {data[:4]!r})")
    if len(data) < 10:
        raise CheckpointError(f"{path}: truncated")

    version, = struct.unpack("<H", data[4:6])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {FORMAT_VERSION}")

    body, trailer = data[:-4], data[-4:]
    if zlib.crc32(body) & 0xFFFFFFFF != struct.unpack("<I", trailer)[0]:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupt or truncated")

    reader = _Reader(body, path)
    reader.pos = 6
    records = Records()
    while reader.pos < len(body):
        n, = reader.unpack("<H")
        name = reader.take(n).decode("utf-8")
        tag, rank = reader.unpack("<BB")
        extents = reader.unpack(f"<{rank}I")
        size, = reader.unpack("<Q")
        payload = reader.take(size)

        if tag == BYTES_TAG:
            records[name] = payload
        elif tag in TAG_DTYPES:
            dtype = TAG_DTYPES[tag]
            if size != int(np.prod(extents)) * dtype.itemsize:
                raise CheckpointError(f"{path}: record `{name}` payload does not match its extents {extents}")
            records[name] = np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype).reshape(extents)
        else:
            raise CheckpointError(f"{path}: record `{name}` has unknown dtype tag {tag}")

    logger.debug("read %d records from %s", len(records), path)
    return records
