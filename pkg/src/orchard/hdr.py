"""Radiance RGBE (.hdr) reading and writing.

Only the standard ``-Y H +X W`` orientation is accepted. Scanlines may be flat
4-byte pixels or new-style per-channel run-length encoded. A decoded channel is
``m * 2**(e - 136)`` for mantissa byte m and exponent byte e > 0, and zero when
e == 0.
"""
from __future__ import annotations

import os
import re

import numpy as np

from .errors import HDRFormatError
from .scene import EnvironmentKind, EnvironmentMap

_MAGICS = (b"#?RADIANCE", b"#?RGBE")
_RES_RE = re.compile(rb"^([-+])([XY]) (\d+) ([-+])([XY]) (\d+)$")


def _read_header(data: bytes) -> tuple[int, int, int]:
    """Return (width, height, offset of first scanline byte)."""
    pos = 0

    def line():
        nonlocal pos
        end = data.find(b"\n", pos)
        if end < 0:
            raise HDRFormatError("unterminated header line", pos)
        start, pos = pos, end + 1
        return data[start:end].rstrip(b"\r"), start

    first, at = line()
    if first not in _MAGICS:
        raise HDRFormatError("missing #?RADIANCE / #?RGBE signature", at)
    while True:
        text, at = line()
        if not text:
            break
        if text.startswith(b"FORMAT=") and text != b"FORMAT=32-bit_rle_rgbe":
            raise HDRFormatError(f"unsupported pixel format {text[7:].decode(errors='replace')}", at)
    res, at = line()
    m = _RES_RE.match(res)
    if not m:
        raise HDRFormatError("malformed resolution line", at)
    if (m.group(1), m.group(2), m.group(4), m.group(5)) != (b"-", b"Y", b"+", b"X"):
        raise HDRFormatError("unsupported orientation; only '-Y H +X W' is accepted", at)
    height, width = int(m.group(3)), int(m.group(6))
    if width < 1 or height < 1:
        raise HDRFormatError("empty image", at)
    return width, height, pos


def _decode_scanlines(data: bytes, pos: int, width: int, height: int) -> np.ndarray:
    out = np.empty((height, width, 4), dtype=np.uint8)
    n = len(data)
    rle_ok = 8 <= width <= 0x7FFF
    for y in range(height):
        if rle_ok and pos + 4 <= n and data[pos] == 2 and data[pos + 1] == 2 and not data[pos + 2] & 0x80:
            line_w = (data[pos + 2] << 8) | data[pos + 3]
            if line_w != width:
                raise HDRFormatError(f"scanline width {line_w} != image width {width}", pos)
            pos += 4
            for c in range(4):
                chan = out[y, :, c]
                x = 0
                while x < width:
                    if pos >= n:
                        raise HDRFormatError("truncated run-length scanline", pos)
                    count = data[pos]
                    if count > 128:
                        count -= 128
                        if x + count > width:
                            raise HDRFormatError("run overruns scanline", pos)
                        if pos + 1 >= n:
                            raise HDRFormatError("truncated run-length scanline", pos + 1)
                        chan[x:x + count] = data[pos + 1]
                        pos += 2
                    else:
                        if count == 0 or x + count > width:
                            raise HDRFormatError("bad literal count in scanline", pos)
                        if pos + 1 + count > n:
                            raise HDRFormatError("truncated run-length scanline", n)
                        chan[x:x + count] = np.frombuffer(data, np.uint8, count, pos + 1)
                        pos += 1 + count
                    x += count
        else:
            need = 4 * width
            if pos + need > n:
                raise HDRFormatError("truncated flat scanline", n)
            out[y] = np.frombuffer(data, np.uint8, need, pos).reshape(width, 4)
            pos += need
    return out


def rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int32)
    vals = np.ldexp(rgbe[..., :3].astype(np.float64), (e - 136)[..., None])
    vals[e == 0] = 0.0
    return vals


def float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    v = rgb.max(axis=-1)
    mant, exp = np.frexp(v)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = v >= 1e-32
    scale = np.where(ok, mant * 256.0 / np.where(ok, v, 1.0), 0.0)
    out[..., :3] = np.where(ok[..., None], np.floor(rgb * scale[..., None]), 0).clip(0, 255).astype(np.uint8)
    out[..., 3] = np.where(ok, exp + 128, 0).clip(0, 255).astype(np.uint8)
    return out


def decode_hdr(data: bytes) -> np.ndarray:
    """Decode to a float64 array of shape (height, width, 3)."""
    width, height, pos = _read_header(bytes(data))
    return rgbe_to_float(_decode_scanlines(data, pos, width, height))


def load_hdr(data: bytes) -> EnvironmentMap:
    return EnvironmentMap(decode_hdr(data), EnvironmentKind.LOADED_HDR)


def load_hdr_file(path: str | os.PathLike) -> EnvironmentMap:
    with open(path, "rb") as fh:
        return load_hdr(fh.read())


def _rle_channel(values: bytes) -> bytes:
    out = bytearray()
    i, n = 0, len(values)
    while i < n:
        run = 1
        while i + run < n and run < 127 and values[i + run] == values[i]:
            run += 1
        if run >= 3:
            out += bytes((128 + run, values[i]))
            i += run
            continue
        j = i
        while j < n and j - i < 128:
            if j + 2 < n and values[j] == values[j + 1] == values[j + 2]:
                break
            j += 1
        out.append(j - i)
        out += values[i:j]
        i = j
    return bytes(out)


def encode_hdr(radiance: np.ndarray, rle: bool = True) -> bytes:
    """Encode an (H, W, 3) float image. RLE applies only for widths in [8, 32767]."""
    rgbe = float_to_rgbe(radiance)
    height, width = rgbe.shape[:2]
    parts = [b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n", f"-Y {height} +X {width}\n".encode()]
    use_rle = rle and 8 <= width <= 0x7FFF
    for y in range(height):
        if use_rle:
            parts.append(bytes((2, 2, width >> 8, width & 0xFF)))
            for c in range(4):
                parts.append(_rle_channel(rgbe[y, :, c].tobytes()))
        else:
            parts.append(rgbe[y].tobytes())
    return b"".join(parts)
