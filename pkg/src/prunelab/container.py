"""Versioned binary container: JSON metadata plus raw npy blocks.

Byte-for-byte deterministic for identical content (no timestamps), which
keeps output digests reproducible across runs.
"""

import io
import json

import numpy as np

MAGIC = b"PRUNELAB1\n"


def write_container(path, meta: dict, arrays: dict):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        header = dict(meta)
        header["__arrays__"] = sorted(arrays)
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for key in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arrays[key]), allow_pickle=False)
            data = buf.getvalue()
            fh.write(len(data).to_bytes(8, "little"))
            fh.write(data)


def read_container(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a prunelab container")
        hlen = int.from_bytes(fh.read(8), "little")
        meta = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for key in meta.pop("__arrays__"):
            alen = int.from_bytes(fh.read(8), "little")
            arrays[key] = np.load(io.BytesIO(fh.read(alen)), allow_pickle=False)
    return meta, arrays
