"""Image, disparity and point-cloud files.

Gray images go through Pillow (PNG, PGM). Disparity maps use PFM for exact
float storage or the KITTI 16-bit PNG convention (raw / 256, raw 0 invalid).
Point clouds are written as PLY, ASCII or binary little-endian.
"""

import os
import re
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import DisparityMap, check_gray
from .errors import ConfigError, CorruptFile, EmptyCloud, NegativeDisparity, UnsupportedFormat

PFM = "pfm"
KITTI = "kitti"


class NarrowedInput(UserWarning):
    """A 16-bit image was reduced to 8 bits on read."""


def read_gray(path):
    """Load an 8-bit gray PNG or PGM as a (H, W) uint8 array.

    16-bit gray input is shifted right by 8 bits and a :class:`NarrowedInput`
    warning is issued. Colour images are rejected.
    """
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.array(im)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise CorruptFile(f"cannot decode {path}: {e}") from e
    if mode == "L":
        pass
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        if arr.ndim != 2 or arr.min(initial=0) < 0 or arr.max(initial=0) > 0xFFFF:
            raise UnsupportedFormat(f"{path}: mode {mode} is not 16-bit gray")
        warnings.warn(f"{path}: 16-bit input narrowed to 8 bits", NarrowedInput, stacklevel=2)
        arr = (arr.astype(np.uint32) >> 8).astype(np.uint8)
    else:
        raise UnsupportedFormat(f"{path}: image mode {mode} is not single-channel gray")
    return check_gray(arr.astype(np.uint8, copy=False), os.fspath(path))


def write_gray(image, path):
    """Write a uint8 gray image; the format follows the suffix (.png, .pgm)."""
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise UnsupportedFormat(f"expected a 2-D uint8 array, got {arr.dtype} {arr.shape}")
    ext = os.path.splitext(os.fspath(path))[1].lower()
    fmt = {".png": "PNG", ".pgm": "PPM"}.get(ext)
    if fmt is None:
        raise UnsupportedFormat(f"unsupported gray image suffix {ext!r}")
    Image.fromarray(arr, mode="L").save(path, format=fmt)


def _encoding_for(path, encoding):
    if encoding is not None:
        enc = encoding.lower()
        if enc not in (PFM, KITTI):
            raise UnsupportedFormat(f"unknown disparity encoding {encoding!r}")
        return enc
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".pfm":
        return PFM
    if ext == ".png":
        return KITTI
    raise UnsupportedFormat(f"cannot infer disparity encoding from suffix {ext!r}")


def _read_pfm(path):
    with open(path, "rb") as f:
        data = f.read()
    m = re.match(rb"(P[Ff])\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s", data)
    if m is None:
        raise CorruptFile(f"{path}: not a PFM file")
    if m.group(1) == b"PF":
        raise UnsupportedFormat(f"{path}: colour PFM is not a disparity map")
    w, h = int(m.group(2)), int(m.group(3))
    try:
        scale = float(m.group(4))
    except ValueError as e:
        raise CorruptFile(f"{path}: bad PFM scale") from e
    if scale == 0:
        raise CorruptFile(f"{path}: PFM scale must be non-zero")
    dtype = "<f4" if scale < 0 else ">f4"
    body = data[m.end() :]
    if len(body) < w * h * 4:
        raise CorruptFile(f"{path}: truncated PFM payload ({len(body)} < {w * h * 4} bytes)")
    arr = np.frombuffer(body, dtype=dtype, count=w * h).reshape(h, w)[::-1]
    d = arr.astype(np.float64)
    valid = np.isfinite(d) & (d > 0)
    return DisparityMap(np.where(valid, d, 0.0), valid)


def _write_pfm(dmap, path):
    h, w = dmap.shape
    out = np.where(dmap.valid, dmap.disparity, np.inf).astype("<f4")
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(out[::-1].tobytes())


def _read_kitti(path):
    try:
        with Image.open(path) as im:
            im.load()
            raw = np.array(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise CorruptFile(f"cannot decode {path}: {e}") from e
    if raw.ndim != 2:
        raise UnsupportedFormat(f"{path}: KITTI disparity must be single-channel")
    raw = raw.astype(np.int64)
    valid = raw > 0
    return DisparityMap(np.where(valid, raw / 256.0, 0.0), valid)


def _write_kitti(dmap, path):
    d = dmap.disparity[dmap.valid]
    if d.size and d.min() < 0:
        raise NegativeDisparity(f"negative disparity {d.min()} cannot be KITTI-encoded")
    raw = np.zeros(dmap.shape, dtype=np.uint16)
    # valid zeros would read back as invalid; clamp them to the smallest step
    raw[dmap.valid] = np.clip(np.round(d * 256.0), 1, 0xFFFF).astype(np.uint16)
    Image.fromarray(raw).save(path, format="PNG")


def read_disparity(path, encoding=None):
    """Read a disparity map; ``encoding`` is ``"pfm"`` or ``"kitti"``, else taken from the suffix."""
    enc = _encoding_for(path, encoding)
    return _read_pfm(path) if enc == PFM else _read_kitti(path)


def write_disparity(dmap, path, encoding=None):
    """Write a disparity map. PFM stores invalid pixels as +inf."""
    if not isinstance(dmap, DisparityMap):
        dmap = DisparityMap.from_array(dmap)
    enc = _encoding_for(path, encoding)
    if enc == PFM:
        _write_pfm(dmap, path)
    else:
        _write_kitti(dmap, path)


def write_float_map(values, path):
    """Store a raw float map (e.g. costs) as PFM; NaN is kept as NaN."""
    arr = np.asarray(values, dtype="<f4")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(arr[::-1].tobytes())


@dataclass(frozen=True)
class CameraCalib:
    f: float  # focal length, pixels
    B: float  # baseline, metres
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.f > 0 and self.B > 0):
            raise ConfigError(f"focal length and baseline must be positive, got f={self.f}, B={self.B}")

    @classmethod
    def parse(cls, text):
        """From ``"f,B,cx,cy"``."""
        parts = text.split(",")
        if len(parts) != 4:
            raise ConfigError(f"calibration needs f,B,cx,cy; got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as e:
            raise ConfigError(f"bad calibration {text!r}: {e}") from None


def triangulate_points(dmap, calib, min_disparity=0.5):
    """(N, 3) camera-frame points and the (u, v) pixels they came from."""
    keep = dmap.valid & (dmap.disparity >= min_disparity)
    v, u = np.nonzero(keep)
    d = dmap.disparity[v, u]
    z = calib.f * calib.B / d
    x = (u - calib.cx) * z / calib.f
    y = (v - calib.cy) * z / calib.f
    return np.column_stack([x, y, z]), u, v


def export_pointcloud(dmap, image, calib, path, min_disparity=0.5, binary=False):
    """Write valid pixels with disparity >= ``min_disparity`` as coloured PLY vertices.

    Returns the number of vertices written.
    """
    image = np.asarray(image)
    if image.shape != dmap.shape:
        raise ValueError(f"image {image.shape} and disparity {dmap.shape} differ in size")
    xyz, u, v = triangulate_points(dmap, calib, min_disparity)
    n = xyz.shape[0]
    if n == 0:
        raise EmptyCloud("no valid disparities to export")
    gray = image[v, u].astype(np.uint8)

    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"element vertex {n}\n"
        "property double x\nproperty double y\nproperty double z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if binary:
            rec = np.empty(n, dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("r", "u1"), ("g", "u1"), ("b", "u1")])
            rec["x"], rec["y"], rec["z"] = xyz[:, 0], xyz[:, 1], xyz[:, 2]
            rec["r"] = rec["g"] = rec["b"] = gray
            f.write(rec.tobytes())
        else:
            lines = (f"{x!r} {y!r} {z!r} {g} {g} {g}\n" for (x, y, z), g in zip(xyz.tolist(), gray.tolist()))
            f.write("".join(lines).encode("ascii"))
    return n


def read_ply_vertices(path):
    """Minimal reader for the PLY files written by :func:`export_pointcloud`."""
    with open(path, "rb") as f:
        if f.readline().strip() != b"ply":
            raise CorruptFile(f"{path}: missing PLY magic")
        fmt, n = None, None
        while True:
            line = f.readline()
            if not line:
                raise CorruptFile(f"{path}: unterminated PLY header")
            tok = line.split()
            if tok[:1] == [b"format"]:
                fmt = tok[1].decode()
            elif tok[:2] == [b"element", b"vertex"]:
                n = int(tok[2])
            elif tok[:1] == [b"end_header"]:
                break
        body = f.read()
    if n is None:
        raise CorruptFile(f"{path}: no vertex element")
    if fmt == "binary_little_endian":
        rec = np.frombuffer(body, dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("r", "u1"), ("g", "u1"), ("b", "u1")],
                            count=n)
        return np.column_stack([rec["x"], rec["y"], rec["z"]]), rec["r"].copy()
    rows = np.loadtxt(body.decode("ascii").splitlines(), ndmin=2) if n else np.empty((0, 6))
    return rows[:, :3], rows[:, 3].astype(np.uint8)
