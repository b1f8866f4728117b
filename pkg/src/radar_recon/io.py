"""On-disk dataset container: one binary record per frame plus a JSON manifest.

Record layout (little-endian)::

    b"R2S2" | version u16 | ndim u8 | dims u32 * ndim | dtype code u8 | payload
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"R2S2"
VERSION = 1
MANIFEST = "manifest.json"
DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<c16"), 3: np.dtype("<f4"), 4: np.dtype("<c8")}
CODES = {v: k for k, v in DTYPES.items()}


def encode_frame(a) -> bytes:
    a = np.asarray(a)
    dt = a.dtype.newbyteorder("<")
    if dt not in CODES:
        raise FormatError(f"unsupported dtype {a.dtype}")
    head = MAGIC + struct.pack("<HB", VERSION, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + struct.pack("<B", CODES[dt]) + np.ascontiguousarray(a, dtype=dt).tobytes()


def decode_frame(buf: bytes, where: str = "<bytes>") -> np.ndarray:
    try:
        if buf[:4] != MAGIC:
            raise FormatError(f"{where}: bad magic {bytes(buf[:4])!r}, expected {MAGIC!r}")
        version, ndim = struct.unpack_from("<HB", buf, 4)
        if version != VERSION:
            raise FormatError(f"{where}: unsupported record version {version}")
        dims = struct.unpack_from(f"<{ndim}I", buf, 7)
        off = 7 + 4 * ndim
        (code,) = struct.unpack_from("<B", buf, off)
    except struct.error as exc:
        raise FormatError(f"{where}: truncated header") from exc
    if code not in DTYPES:
        raise FormatError(f"{where}: unknown dtype code {code}")
    dt = DTYPES[code]
    payload = buf[off + 1:]
    if len(payload) != dt.itemsize * int(np.prod(dims)):
        raise FormatError(f"{where}: payload is {len(payload)} bytes, header implies "
                          f"{dt.itemsize * int(np.prod(dims))}")
    return np.frombuffer(payload, dtype=dt).reshape(dims).astype(dt.newbyteorder("="))


def write_frame(path, a) -> None:
    with open(path, "wb") as f:
        f.write(encode_frame(a))


def read_frame(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_frame(f.read(), str(path))


def save_dataset(out_dir, frames, seeds, meta: dict | None = None) -> str:
    """Write frames and a manifest into ``out_dir``; returns the manifest path.

    File names derive from the seed, so re-running with the same seeds
    rewrites identical bytes.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for a, seed in zip(frames, seeds):
        name = f"frame_{int(seed):08d}.r2s2"
        write_frame(os.path.join(out_dir, name), a)
        entries.append({"file": name, "seed": int(seed)})
    manifest = {"format": "R2S2", "version": VERSION, **(meta or {}), "frames": entries}
    path = os.path.join(out_dir, MANIFEST)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_manifest(data_dir) -> dict:
    path = os.path.join(data_dir, MANIFEST)
    try:
        with open(path) as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(f"no dataset manifest at {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if manifest.get("format") != "R2S2" or "frames" not in manifest:
        raise FormatError(f"{path}: not an R2S2 manifest")
    return manifest


def load_dataset(data_dir):
    """Return ``(frames, seeds, manifest)`` for a container written by :func:`save_dataset`."""
    manifest = load_manifest(data_dir)
    frames = [read_frame(os.path.join(data_dir, e["file"])) for e in manifest["frames"]]
    seeds = tuple(e["seed"] for e in manifest["frames"])
    if not frames:
        raise FormatError(f"{data_dir}: manifest lists no frames")
    return np.stack(frames), seeds, manifest
