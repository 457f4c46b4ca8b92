"""File formats: PFM and 16-bit PNG depth maps, PNG guides, DGSF stacks.

Conventions
-----------
PFM: grayscale ``Pf`` maps, both byte orders read (sign of the scale line),
always written little-endian, rows bottom-up. On read, non-finite or <= 0
samples are marked invalid; a written gap is stored as 0.0, so masks
round-trip for positive-depth grids.

PNG depth: 16-bit grayscale, raw integer counts, 0 = gap. Values are
rounded to nearest on write; a valid pixel may not round to 0 (that is the
gap marker) or past 65535.

DGSF: a little-endian feature-stack container: magic "DGSF", version byte 1,
then H, W, C as u32, then C*H*W float32 values channel-major (row-major
within each channel). The 17-byte header plus exact payload length makes the
format bit-exact and dependency-free.

The PNG codec here is deliberately minimal: color types 0/2/4/6 at bit
depths 8/16, no interlacing, no palettes. Files are written with filter 0
and a fixed compression level so identical grids produce identical bytes.
"""

from __future__ import annotations

import re
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFile,
    IoFailure,
    OutOfRange,
    UnsupportedFormat,
)
from .grids import DepthGrid, GuideStack, as_guide_stack, normalize_guide

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_DGSF_MAGIC = b"DGSF"
_DGSF_VERSION = 1
_PNG_ZLIB_LEVEL = 6

# ---------------------------------------------------------------- raw bytes


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------- PFM

_PFM_HEADER = re.compile(rb"^(P[fF])\s+(\d+)\s+(\d+)\s+([-+]?[0-9.eE+-]+)\s")


def _pfm_decode(data: bytes) -> np.ndarray:
    m = _PFM_HEADER.match(data)
    if m is None:
        raise CorruptFile("malformed PFM header")
    if m.group(1) == b"PF":
        raise UnsupportedFormat("color PFM is not supported; expected grayscale 'Pf'")
    width = int(m.group(2))
    height = int(m.group(3))
    try:
        scale = float(m.group(4))
    except ValueError as exc:
        raise CorruptFile("malformed PFM scale line") from exc
    if scale == 0.0 or width < 1 or height < 1:
        raise CorruptFile("PFM header declares zero scale or empty dimensions")
    payload = data[m.end():]
    expected = width * height * 4
    if len(payload) != expected:
        raise CorruptFile(
            f"PFM payload is {len(payload)} bytes, header implies {expected}"
        )
    dtype = "<f4" if scale < 0 else ">f4"
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return values[::-1].astype(np.float32)  # stored bottom-up


def _pfm_encode(values: np.ndarray) -> bytes:
    height, width = values.shape
    header = f"Pf\n{width} {height}\n-1.0\n".encode("ascii")
    return header + values[::-1].astype("<f4").tobytes()


# ---------------------------------------------------------------------- PNG


def _chunk(kind: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + kind
        + payload
        + struct.pack(">I", zlib.crc32(kind + payload))
    )


def _iter_chunks(data: bytes):
    pos = len(_PNG_SIG)
    n = len(data)
    while pos + 8 <= n:
        (length,) = struct.unpack_from(">I", data, pos)
        kind = data[pos + 4:pos + 8]
        end = pos + 8 + length
        if end + 4 > n:
            raise CorruptFile("PNG chunk extends past end of file")
        payload = data[pos + 8:end]
        (crc,) = struct.unpack_from(">I", data, end)
        if crc != zlib.crc32(kind + payload):
            raise CorruptFile(f"PNG chunk {kind!r} fails its checksum")
        yield kind, payload
        pos = end + 4
        if kind == b"IEND":
            return
    raise CorruptFile("PNG stream ended without an IEND chunk")


_PNG_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa = abs(p - a)
    pb = abs(p - b)
    pc = abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw: bytes, height: int, stride: int, bpp: int) -> bytes:
    out = bytearray(height * stride)
    pos = 0
    for r in range(height):
        f = raw[pos]
        pos += 1
        base = r * stride
        prev = base - stride
        row = raw[pos:pos + stride]
        if f == 0:
            out[base:base + stride] = row
        elif f == 1:
            for i in range(stride):
                left = out[base + i - bpp] if i >= bpp else 0
                out[base + i] = (row[i] + left) & 0xFF
        elif f == 2:
            if r == 0:
                out[base:base + stride] = row
            else:
                for i in range(stride):
                    out[base + i] = (row[i] + out[prev + i]) & 0xFF
        elif f == 3:
            for i in range(stride):
                left = out[base + i - bpp] if i >= bpp else 0
                up = out[prev + i] if r > 0 else 0
                out[base + i] = (row[i] + (left + up) // 2) & 0xFF
        elif f == 4:
            for i in range(stride):
                left = out[base + i - bpp] if i >= bpp else 0
                up = out[prev + i] if r > 0 else 0
                ul = out[prev + i - bpp] if (r > 0 and i >= bpp) else 0
                out[base + i] = (row[i] + _paeth(left, up, ul)) & 0xFF
        else:
            raise CorruptFile(f"PNG row uses unknown filter type {f}")
        pos += stride
    return bytes(out)


def _png_decode(data: bytes) -> tuple[np.ndarray, int, int]:
    """Decode to (array, bit_depth, color_type); array is HxW or HxWxC."""
    chunks = _iter_chunks(data)
    try:
        kind, payload = next(chunks)
    except StopIteration:
        raise CorruptFile("PNG stream has no chunks") from None
    if kind != b"IHDR" or len(payload) != 13:
        raise CorruptFile("PNG stream does not start with a valid IHDR chunk")
    width, height, bit_depth, color_type, comp, filt, interlace = struct.unpack(
        ">IIBBBBB", payload
    )
    if comp != 0 or filt != 0:
        raise UnsupportedFormat("PNG uses a non-standard compression or filter method")
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG is not supported")
    if color_type not in _PNG_CHANNELS:
        raise UnsupportedFormat(f"PNG color type {color_type} is not supported")
    if bit_depth not in (8, 16):
        raise UnsupportedFormat(f"PNG bit depth {bit_depth} is not supported")
    if width < 1 or height < 1:
        raise CorruptFile("PNG declares empty dimensions")
    idat = []
    for kind, payload in chunks:
        if kind == b"IDAT":
            idat.append(payload)
        elif kind == b"PLTE" or (kind[0] & 0x20) == 0 and kind != b"IEND":
            raise UnsupportedFormat(f"PNG contains unsupported critical chunk {kind!r}")
    if not idat:
        raise CorruptFile("PNG contains no image data")
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise CorruptFile(f"PNG image data fails to decompress: {exc}") from exc
    channels = _PNG_CHANNELS[color_type]
    bpp = channels * (bit_depth // 8)
    stride = width * bpp
    if len(raw) != height * (stride + 1):
        raise CorruptFile("PNG image data has the wrong length for its dimensions")
    flat = _unfilter(raw, height, stride, bpp)
    dtype = ">u2" if bit_depth == 16 else np.uint8
    arr = np.frombuffer(flat, dtype=dtype)
    if channels == 1:
        arr = arr.reshape(height, width)
    else:
        arr = arr.reshape(height, width, channels)
    if bit_depth == 16:
        arr = arr.astype(np.uint16)
    return arr, bit_depth, color_type


def _png_encode_gray16(arr: np.ndarray) -> bytes:
    height, width = arr.shape
    be = arr.astype(">u2").tobytes()
    stride = width * 2
    raw = b"".join(
        b"\x00" + be[r * stride:(r + 1) * stride] for r in range(height)
    )
    ihdr = struct.pack(">IIBBBBB", width, height, 16, 0, 0, 0, 0)
    return (
        _PNG_SIG
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, _PNG_ZLIB_LEVEL))
        + _chunk(b"IEND", b"")
    )


# --------------------------------------------------------------------- DGSF


def _dgsf_decode(data: bytes) -> np.ndarray:
    if len(data) < 17:
        raise CorruptFile("DGSF file is shorter than its 17-byte header")
    version = data[4]
    if version != _DGSF_VERSION:
        raise UnsupportedFormat(f"DGSF version {version} is not supported")
    height, width, channels = struct.unpack_from("<III", data, 5)
    if height < 1 or width < 1 or channels < 1:
        raise CorruptFile("DGSF header declares empty dimensions")
    expected = 4 * channels * height * width
    payload = data[17:]
    if len(payload) != expected:
        raise CorruptFile(
            f"DGSF payload is {len(payload)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(channels, height, width)
    if not np.isfinite(arr).all():
        raise CorruptFile("DGSF payload contains non-finite values")
    return np.ascontiguousarray(arr.transpose(1, 2, 0))


def _dgsf_encode(stack: GuideStack) -> bytes:
    values = stack.values.astype("<f4")
    header = _DGSF_MAGIC + struct.pack(
        "<BIII", _DGSF_VERSION, stack.height, stack.width, stack.channels
    )
    return header + np.ascontiguousarray(values.transpose(2, 0, 1)).tobytes()


# ------------------------------------------------------------------- public


def _sniff(data: bytes, path) -> str:
    if data.startswith(_PNG_SIG):
        return "png"
    if data[:2] in (b"Pf", b"PF"):
        return "pfm"
    if data[:4] == _DGSF_MAGIC:
        return "dgsf"
    raise UnsupportedFormat(f"{path} is not a PNG, PFM or DGSF file")


def read_depth(path) -> DepthGrid:
    """Read a depth map: 16-bit grayscale PNG (0 = gap) or grayscale PFM
    (non-finite or <= 0 = gap). Values are returned exactly as stored."""
    data = _read_bytes(path)
    kind = _sniff(data, path)
    if kind == "pfm":
        values = _pfm_decode(data)
        mask = np.isfinite(values) & (values > 0.0)
        safe = np.where(mask, values, 0.0)  # keep the container finite-at-valid
        return DepthGrid(safe.astype(np.float32), mask)
    if kind == "png":
        arr, bit_depth, color_type = _png_decode(data)
        if color_type != 0 or bit_depth != 16:
            raise UnsupportedFormat(
                f"{path}: depth PNG must be 16-bit grayscale, "
                f"got bit depth {bit_depth}, color type {color_type}"
            )
        return DepthGrid(arr.astype(np.float32), arr != 0)
    raise UnsupportedFormat(f"{path}: DGSF holds feature stacks, not depth maps")


def write_depth(path, grid: DepthGrid) -> None:
    """Write a depth map; format chosen by extension (.pfm or .png).

    PFM stores float32 exactly, gaps as 0.0. PNG stores rounded 16-bit
    counts, gaps as 0; valid values must round into 1..65535.
    """
    if not isinstance(grid, DepthGrid):
        grid = DepthGrid(grid)
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        values = np.where(grid.valid_mask(), grid.values, np.float32(0.0))
        _write_bytes(path, _pfm_encode(values.astype(np.float32)))
        return
    if suffix == ".png":
        rounded = np.rint(grid.values.astype(np.float64))
        valid = grid.valid_mask()
        bad = valid & ((rounded < 1.0) | (rounded > 65535.0))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise OutOfRange(
                f"depth value {grid.values[i, j]} at ({i}, {j}) rounds outside "
                f"1..65535 and cannot be stored in a 16-bit PNG (0 is the gap marker)"
            )
        counts = np.where(valid, rounded, 0.0).astype(np.uint16)
        _write_bytes(path, _png_encode_gray16(counts))
        return
    raise UnsupportedFormat(f"cannot infer depth format from extension {suffix!r}")


def read_guide(path) -> GuideStack:
    """Read a guide: 8/16-bit PNG (normalized into [0, 1]) or a DGSF
    feature stack (passed through unnormalized)."""
    data = _read_bytes(path)
    kind = _sniff(data, path)
    if kind == "png":
        arr, _, _ = _png_decode(data)
        return normalize_guide(arr)
    if kind == "dgsf":
        return GuideStack(_dgsf_decode(data))
    raise UnsupportedFormat(f"{path}: PFM depth maps cannot be used as guides")


def write_feature_stack(path, guide: GuideStack) -> None:
    """Write a guide stack as DGSF v1 (float32; read_guide inverts bitwise)."""
    guide = as_guide_stack(guide)
    _write_bytes(path, _dgsf_encode(guide))


def read_mask(path) -> np.ndarray:
    """Read a validity mask: single-channel PNG or PFM; nonzero = valid."""
    data = _read_bytes(path)
    kind = _sniff(data, path)
    if kind == "png":
        arr, _, color_type = _png_decode(data)
        if color_type != 0:
            raise UnsupportedFormat("mask PNG must be single-channel grayscale")
        return arr != 0
    if kind == "pfm":
        values = _pfm_decode(data)
        return np.isfinite(values) & (values > 0.0)
    raise UnsupportedFormat(f"{path}: DGSF stacks cannot be used as masks")
