"""Binary parameter checkpoints.

Layout: an ASCII magic line, a decimal header length line, a UTF-8 JSON
header (which includes the parameter manifest: names and shapes in order),
then the raw little-endian float64 arrays concatenated in manifest order.
Round-trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import Parameter

MAGIC = b"VENUERANK-CKPT v1\n"


class CheckpointError(ValueError):
    pass


def write_checkpoint(path: str | Path, header: dict, params: Sequence[Parameter]) -> None:
    manifest = [{"name": p.name, "shape": list(p.value.shape)} for p in params]
    full_header = dict(header)
    full_header["manifest"] = manifest
    header_bytes = json.dumps(full_header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(header_bytes)}\n".encode("ascii"))
        fh.write(header_bytes)
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def read_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"{path}: not a venuerank checkpoint")
        length_line = fh.readline()
        try:
            header_len = int(length_line.strip())
        except ValueError as exc:
            raise CheckpointError(f"{path}: corrupt header length") from exc
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for entry in header["manifest"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CheckpointError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise CheckpointError(f"{path}: trailing bytes after manifest arrays")
    return header, arrays
