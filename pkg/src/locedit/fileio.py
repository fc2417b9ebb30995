"""Image and tensor file codecs.

PNG: 8-bit RGB in [0,1] float32; grayscale inputs are replicated to three
channels, 16-bit and paletted files are rejected. PGM: binary P5, used
for masks (0/255) and label maps (raw ids). Tensor dump: magic ``LTEN``,
u32-LE version (=1), u8 rank, rank u32-LE dims, then row-major IEEE-754
float32 little-endian payload. All writes go through a temp file and an
atomic rename.
"""

from __future__ import annotations

import os
import struct
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .tensorops import as_f32, bilinear_resize

IMAGE_SIZE = 256
FP255 = np.float32(255.0)

LTEN_MAGIC = b"LTEN"
LTEN_VERSION = 1


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# PNG


def load_png(path: str | Path) -> np.ndarray:
    """Decode an 8-bit PNG to a 256 x 256 x 3 float32 array in [0,1]."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise ValueError(f"unreadable image {path}: {exc}") from exc
    if img.mode == "P":
        raise ValueError(f"paletted PNG not supported: {path}")
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
        raise ValueError(f"16-bit PNG not supported: {path}")
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.uint8)
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif img.mode == "LA":
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif img.mode == "RGB":
        arr = np.asarray(img, dtype=np.uint8)
    elif img.mode == "RGBA":
        arr = np.asarray(img, dtype=np.uint8)[:, :, :3]
    else:
        raise ValueError(f"unsupported PNG mode {img.mode}: {path}")
    out = as_f32(arr) / FP255
    if out.shape[:2] != (IMAGE_SIZE, IMAGE_SIZE):
        print(
            f"warning: resizing {path} from {out.shape[1]}x{out.shape[0]} "
            f"to {IMAGE_SIZE}x{IMAGE_SIZE}",
            file=sys.stderr,
        )
        out = bilinear_resize(out, IMAGE_SIZE, IMAGE_SIZE)
    return out


def save_png(t: np.ndarray, path: str | Path) -> None:
    if t.ndim != 3 or t.shape[2] != 3:
        raise ValueError("save_png expects H x W x 3")
    q = np.clip(np.rint(as_f32(t) * FP255), 0, 255).astype(np.uint8)
    img = Image.fromarray(q, mode="RGB")
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    img.save(tmp, format="PNG")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# PGM (binary P5)


def save_pgm(grid: np.ndarray, path: str | Path) -> None:
    """Write a 2-D uint8 grid as binary PGM."""
    g = np.asarray(grid)
    if g.ndim != 2:
        raise ValueError("save_pgm expects a 2-D grid")
    if g.dtype != np.uint8:
        if g.min() < 0 or g.max() > 255:
            raise ValueError("PGM values must fit in 8 bits")
        g = g.astype(np.uint8)
    header = f"P5\n{g.shape[1]} {g.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + g.tobytes())


def save_mask_pgm(mask: np.ndarray, path: str | Path) -> None:
    """Binary mask written as 0/255."""
    save_pgm((np.asarray(mask) != 0).astype(np.uint8) * 255, path)


def load_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        if pos >= len(data):
            raise ValueError(f"truncated PGM header: {path}")
        ch = data[pos : pos + 1]
        if ch == b"#":  # comment to end of line
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(data[pos:end])
            pos = end
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM (P5): {path}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}: {path}")
    payload = data[pos : pos + width * height]
    if len(payload) != width * height:
        raise ValueError(f"truncated PGM payload: {path}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def load_mask_pgm(path: str | Path) -> np.ndarray:
    """Load a PGM as a binary mask (any nonzero byte counts as 1)."""
    return (load_pgm(path) != 0).astype(np.uint8)


# ---------------------------------------------------------------------------
# Binary tensor dump


def save_tensor(t: np.ndarray, path: str | Path) -> None:
    t = as_f32(t)
    if not 1 <= t.ndim <= 4:
        raise ValueError("tensor dump supports rank 1-4")
    header = LTEN_MAGIC + struct.pack("<IB", LTEN_VERSION, t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape)
    payload = t.astype("<f4").tobytes(order="C")
    atomic_write_bytes(path, header + payload)


def load_tensor(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != LTEN_MAGIC:
        raise ValueError(f"bad tensor magic: {path}")
    version, rank = struct.unpack_from("<IB", data, 4)
    if version != LTEN_VERSION:
        raise ValueError(f"unsupported tensor version {version}: {path}")
    if not 1 <= rank <= 4:
        raise ValueError(f"bad tensor rank {rank}: {path}")
    dims = struct.unpack_from(f"<{rank}I", data, 9)
    if any(d < 1 for d in dims):
        raise ValueError(f"bad tensor dims {dims}: {path}")
    offset = 9 + 4 * rank
    count = int(np.prod(dims))
    payload = data[offset : offset + 4 * count]
    if len(payload) != 4 * count:
        raise ValueError(f"truncated tensor payload: {path}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
