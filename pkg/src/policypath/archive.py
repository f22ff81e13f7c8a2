"""Binary path archive (``PPATH1``) and CSV report writers.

Archive layout, little-endian throughout::

    b"PPATH1"            magic
    u16                  version (1)
    u32 n, u32 m         snapshots, parameters per snapshot
    u32                  layer count, then per layer:
        u16 name length, name bytes (UTF-8), u32 offset, u32 length
    n x u64              steps
    n x m x f64          parameters, row-major
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import MalformedArchive
from .path_metrics import LayerSegment, ParameterPath

MAGIC = b"PPATH1"
VERSION = 1


def encode_path(path: ParameterPath) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<HII", VERSION, path.n, path.m))
    out.write(struct.pack("<I", len(path.layers)))
    for seg in path.layers:
        name = seg.name.encode("utf-8")
        out.write(struct.pack("<H", len(name)))
        out.write(name)
        out.write(struct.pack("<II", seg.offset, seg.length))
    out.write(np.asarray(path.steps, dtype="<u8").tobytes())
    out.write(np.ascontiguousarray(path.params, dtype="<f8").tobytes())
    return out.getvalue()


def decode_path(blob: bytes) -> ParameterPath:
    view = memoryview(blob)
    pos = 0

    def take(size: int) -> memoryview:
        nonlocal pos
        if pos + size > len(view):
            raise MalformedArchive(f"archive truncated at byte {pos} (needed {size} more)")
        chunk = view[pos:pos + size]
        pos += size
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise MalformedArchive("bad magic; not a PPATH1 archive")
    version, n, m = struct.unpack("<HII", take(10))
    if version != VERSION:
        raise MalformedArchive(f"unsupported archive version {version}")
    (count,) = struct.unpack("<I", take(4))
    layers = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        try:
            name = bytes(take(name_len)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedArchive(f"layer name is not UTF-8: {exc}") from None
        offset, length = struct.unpack("<II", take(8))
        layers.append(LayerSegment(name, offset, length))
    steps = np.frombuffer(take(8 * n), dtype="<u8").astype(np.int64)
    params = np.frombuffer(take(8 * n * m), dtype="<f8").astype(np.float64).reshape(n, m)
    if pos != len(view):
        raise MalformedArchive(f"{len(view) - pos} trailing bytes after payload")
    try:
        return ParameterPath(steps=steps, params=params, layers=tuple(layers))
    except ValueError as exc:
        raise MalformedArchive(str(exc)) from None


def write_path(path: ParameterPath, target: Union[str, Path]) -> None:
    Path(target).write_bytes(encode_path(path))


def read_path(source: Union[str, Path]) -> ParameterPath:
    return decode_path(Path(source).read_bytes())


def fmt(value) -> str:
    """Shortest round-trip text for floats; ints and strings pass through."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(target: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(source: Union[str, Path]) -> list[dict]:
    with open(source, newline="") as fh:
        return list(csv.DictReader(fh))
