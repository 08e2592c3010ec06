"""Video files: YUV4MPEG2 (C444, 8-bit) streams and directories of P6 PPM frames.

8-bit samples map to ``[0, 1]`` as ``v / 255``; writing quantizes with
``round_half_up(v * 255)`` clamped to ``[0, 255]``. y4m planes are
full-range BT.601 Y'CbCr. That conversion is not injective at 8 bits, so
RGB -> y4m -> RGB may move a sample by one level. PPM round trips are exact.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .video import as_video

# full-range BT.601 (JFIF)
RGB_TO_YCBCR = np.array(
    [[0.299, 0.587, 0.114],
     [-0.168736, -0.331264, 0.5],
     [0.5, -0.418688, -0.081312]]
)
YCBCR_TO_RGB = np.array(
    [[1.0, 0.0, 1.402],
     [1.0, -0.344136, -0.714136],
     [1.0, 1.772, 0.0]]
)

PPM_PATTERN = "frame_{:04d}.ppm"
_PPM_RE = re.compile(r"^frame_(\d+)\.ppm$")


class VideoFormatError(ValueError):
    pass


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def to_uint8(v) -> np.ndarray:
    v = as_video(v)
    return np.clip(_round_half_up(v.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(a: np.ndarray) -> np.ndarray:
    return (a.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def _rgb8(v) -> np.ndarray:
    a = to_uint8(v)
    if a.shape[3] == 1:
        a = np.repeat(a, 3, axis=3)
    if a.shape[3] != 3:
        raise ValueError(f"can only write 1- or 3-channel videos, got {a.shape[3]}")
    return a


def rgb_to_ycbcr(rgb8: np.ndarray) -> np.ndarray:
    ycc = rgb8.astype(np.float64) @ RGB_TO_YCBCR.T
    ycc[..., 1:] += 128.0
    return np.clip(_round_half_up(ycc), 0, 255).astype(np.uint8)


def ycbcr_to_rgb(ycc8: np.ndarray) -> np.ndarray:
    ycc = ycc8.astype(np.float64)
    ycc[..., 1:] -= 128.0
    return np.clip(_round_half_up(ycc @ YCBCR_TO_RGB.T), 0, 255).astype(np.uint8)


# -- y4m --------------------------------------------------------------------------


def write_y4m(v, path, fps: str = "25:1") -> None:
    rgb = _rgb8(v)
    t, h, w, _ = rgb.shape
    ycc = rgb_to_ycbcr(rgb)
    with open(path, "wb") as f:
        f.write(f"YUV4MPEG2 W{w} H{h} F{fps} Ip A1:1 C444\n".encode("ascii"))
        for frame in ycc:
            f.write(b"FRAME\n")
            f.write(np.ascontiguousarray(frame.transpose(2, 0, 1)).tobytes())


def read_y4m(path) -> np.ndarray:
    data = Path(path).read_bytes()
    end = data.find(b"\n")
    if end < 0 or not data.startswith(b"YUV4MPEG2"):
        raise VideoFormatError(f"{path}: missing YUV4MPEG2 signature at byte 0")
    params = {}
    for tok in data[len(b"YUV4MPEG2"):end].split():
        params[chr(tok[0])] = tok[1:].decode("ascii", "replace")
    try:
        w, h = int(params["W"]), int(params["H"])
    except (KeyError, ValueError):
        raise VideoFormatError(f"{path}: header lacks valid W/H at byte 0") from None
    chroma = params.get("C", "420jpeg")
    if chroma != "444":
        raise VideoFormatError(f"{path}: unsupported chroma C{chroma} at byte 0 (need C444)")
    if w < 1 or h < 1:
        raise VideoFormatError(f"{path}: invalid frame size {w}x{h} at byte 0")
    size = 3 * w * h
    pos = end + 1
    frames = []
    while pos < len(data):
        nl = data.find(b"\n", pos)
        if nl < 0 or not data[pos:nl].startswith(b"FRAME"):
            raise VideoFormatError(f"{path}: expected FRAME header at byte {pos}")
        start = nl + 1
        if start + size > len(data):
            raise VideoFormatError(
                f"{path}: truncated frame at byte {start} ({len(data) - start} of {size} bytes)"
            )
        planes = np.frombuffer(data, np.uint8, size, start).reshape(3, h, w)
        frames.append(planes.transpose(1, 2, 0))
        pos = start + size
    if not frames:
        raise VideoFormatError(f"{path}: no frames after header (byte {end + 1})")
    return from_uint8(ycbcr_to_rgb(np.stack(frames)))


# -- PPM directories ----------------------------------------------------------------


def _ppm_header(data: bytes, path) -> tuple[int, int, int]:
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.find(b"\n", pos) + 1 or len(data)
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise VideoFormatError(f"{path}: truncated PPM header at byte {pos}")
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise VideoFormatError(f"{path}: not a P6 PPM (magic {fields[0]!r}) at byte 0")
    try:
        w, h, maxval = (int(x) for x in fields[1:])
    except ValueError:
        raise VideoFormatError(f"{path}: malformed PPM header near byte {pos}") from None
    if maxval != 255:
        raise VideoFormatError(f"{path}: maxval {maxval} unsupported (need 255) near byte {pos}")
    return w, h, pos + 1


def write_ppm_dir(v, path) -> None:
    rgb = _rgb8(v)
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _, h, w, _ = rgb.shape
    for old in path.iterdir():
        if _PPM_RE.match(old.name):
            old.unlink()
    for i, frame in enumerate(rgb, start=1):
        with open(path / PPM_PATTERN.format(i), "wb") as f:
            f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            f.write(frame.tobytes())


def read_ppm_dir(path) -> np.ndarray:
    path = Path(path)
    numbered = {}
    for p in path.iterdir():
        m = _PPM_RE.match(p.name)
        if m:
            numbered[int(m.group(1))] = p
    if not numbered:
        raise VideoFormatError(f"{path}: no frame_NNNN.ppm files")
    expected = range(1, max(numbered) + 1)
    missing = [i for i in expected if i not in numbered]
    if missing:
        raise VideoFormatError(
            f"{path}: frame sequence has a gap, missing {PPM_PATTERN.format(missing[0])}"
        )
    frames = []
    for i in expected:
        p = numbered[i]
        data = p.read_bytes()
        w, h, off = _ppm_header(data, p)
        if frames and (h, w) != frames[0].shape[:2]:
            raise VideoFormatError(
                f"{p}: frame size {w}x{h} differs from {frames[0].shape[1]}x{frames[0].shape[0]}"
            )
        if off + 3 * w * h > len(data):
            raise VideoFormatError(f"{p}: truncated pixel data at byte {len(data)}")
        frames.append(np.frombuffer(data, np.uint8, 3 * w * h, off).reshape(h, w, 3))
    return from_uint8(np.stack(frames))


# -- dispatch --------------------------------------------------------------------


def read_video(path) -> np.ndarray:
    """Read a ``.y4m`` file or a directory of ``frame_NNNN.ppm`` files."""
    path = Path(path)
    if path.is_dir():
        return read_ppm_dir(path)
    if not path.exists():
        raise FileNotFoundError(path)
    return read_y4m(path)


def write_video(v, path) -> None:
    """Write to ``path``: a ``.y4m`` file, otherwise a PPM frame directory."""
    path = Path(path)
    if path.suffix.lower() == ".y4m":
        write_y4m(v, path)
    else:
        write_ppm_dir(v, path)
