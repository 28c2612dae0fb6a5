"""Grayscale image ingestion: portable graymap reading and patch extraction.

Patches are vectorized column-major within the patch and collected in
row-major grid order over each image, so the same files always produce the
identical data matrix.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError


@dataclass
class PatchConfig:
    patch_side: int = 8
    stride: int = None  # defaults to patch_side (non-overlapping)
    mean_removal: bool = True

    def __post_init__(self):
        if self.patch_side < 2:
            raise ContractError("patch side must be >= 2")
        if self.stride is None:
            self.stride = self.patch_side
        if self.stride < 1:
            raise ContractError("stride must be >= 1")


@dataclass
class Dataset:
    """Training matrix whose columns are signals of dimension n.

    Learners additionally require N >= n so their second-moment
    initialization is well posed; ingestion itself accepts any count."""

    y: np.ndarray
    n: int
    N: int

    def __post_init__(self):
        if self.y.shape != (self.n, self.N):
            raise DimensionError("dataset shape does not match (n, N)")


def _tokens(data: bytes):
    """Whitespace tokens of a graymap header/body, skipping # comments."""
    pos = 0
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
            continue
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        yield data[pos:end], end
        pos = end


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit portable graymap (P2 ascii or P5 binary) as float64."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
        (w, _), (h, _), (mv, end) = next(toks), next(toks), next(toks)
        width, height, maxval = int(w), int(h), int(mv)
    except (StopIteration, ValueError) as exc:
        raise ContractError(f"{path}: malformed graymap header") from exc
    if magic not in (b"P2", b"P5"):
        raise ContractError(f"{path}: expected a P2/P5 graymap, got {magic!r}")
    if not 0 < maxval < 256:
        raise ContractError(f"{path}: only 8-bit graymaps supported (maxval {maxval})")
    count = width * height
    if magic == b"P5":
        raster = data[end + 1 : end + 1 + count]
        if len(raster) < count:
            raise ContractError(f"{path}: truncated raster")
        img = np.frombuffer(raster, dtype=np.uint8, count=count)
    else:
        vals = []
        for tok, _ in toks:
            vals.append(int(tok))
            if len(vals) == count:
                break
        if len(vals) < count:
            raise ContractError(f"{path}: truncated raster")
        img = np.array(vals, dtype=np.uint8)
    return img.reshape(height, width).astype(np.float64)


def write_pgm(path, img, maxval=255):
    """Write a P5 graymap (used by the synthetic-corpus helpers and tests)."""
    arr = np.asarray(img)
    clipped = np.clip(np.rint(arr), 0, maxval).astype(np.uint8)
    h, w = clipped.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        fh.write(clipped.tobytes())


def extract_patches(img: np.ndarray, cfg: PatchConfig) -> np.ndarray:
    """Vectorized patches of one image as columns."""
    h, w = img.shape
    side = cfg.patch_side
    if h < side or w < side:
        raise ContractError(f"image {h}x{w} smaller than one {side}x{side} patch")
    cols = []
    for r in range(0, h - side + 1, cfg.stride):
        for c in range(0, w - side + 1, cfg.stride):
            cols.append(img[r : r + side, c : c + side].flatten(order="F"))
    return np.stack(cols, axis=1)


def ingest(paths, cfg: PatchConfig = None) -> Dataset:
    """Read images and assemble the patch matrix, one column per patch."""
    cfg = cfg or PatchConfig()
    if not paths:
        raise ContractError("no input images given")
    blocks = [extract_patches(read_pgm(p), cfg) for p in paths]
    y = np.concatenate(blocks, axis=1)
    if cfg.mean_removal:
        y = y - y.mean(axis=0, keepdims=True)
    return Dataset(y=np.ascontiguousarray(y), n=y.shape[0], N=y.shape[1])
