"""Image primitives: validation, high-gradient mask and the 5x5 census transform."""

from dataclasses import asdict, dataclass, replace

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionTooSmall
from .kernels import CENSUS_BITS, CENSUS_INVALID

MIN_SIZE = 16
CENSUS_RADIUS = 2


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable parameters of the reconstruction.

    ``n_iters`` is the accuracy/speed knob. Costs are normalized census
    distances in [0, 1].
    """

    n_iters: int = 1
    max_disparity: int = 128
    t_lo: float = 0.25
    t_hi: float = 0.5
    gradient_threshold: int = 20
    sz_occ_init: int = 32
    corner_threshold: int = 20
    per_bin_cap: int = 5
    sparse_accept_cost: float = 0.25
    uniqueness_ratio: float = 0.9
    bins_u: int = 12
    bins_v: int = 10

    def __post_init__(self):
        if self.n_iters < 1:
            raise ConfigError(f"n_iters must be >= 1, got {self.n_iters}")
        if self.max_disparity < 1:
            raise ConfigError(f"max_disparity must be >= 1, got {self.max_disparity}")
        if not 0 < self.t_lo < self.t_hi <= 1:
            raise ConfigError(f"need 0 < t_lo < t_hi <= 1, got t_lo={self.t_lo}, t_hi={self.t_hi}")
        sz = self.sz_occ_init
        if sz < 1 or sz & (sz - 1):
            raise ConfigError(f"sz_occ_init must be a power of two, got {sz}")
        if self.gradient_threshold < 0:
            raise ConfigError("gradient_threshold must be non-negative")
        if self.corner_threshold < 1:
            raise ConfigError("corner_threshold must be >= 1")
        if self.per_bin_cap < 1 or self.bins_u < 1 or self.bins_v < 1:
            raise ConfigError("per_bin_cap and bin counts must be >= 1")
        if not 0 <= self.sparse_accept_cost <= 1:
            raise ConfigError("sparse_accept_cost must lie in [0, 1]")
        if self.uniqueness_ratio <= 0:
            raise ConfigError("uniqueness_ratio must be positive")

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


def check_gray(image, name="image"):
    """Return ``image`` as a contiguous 2-D uint8 array, raising on bad input."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D gray image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {arr.dtype}")
    h, w = arr.shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise DimensionTooSmall(f"{name} is {w}x{h}; both sides must be >= {MIN_SIZE}")
    return np.ascontiguousarray(arr)


def gradient_mask(image, threshold=20):
    """High-gradient pixel mask.

    A pixel belongs to the mask when the L1 central difference
    ``|I(u+1,v) - I(u-1,v)| + |I(u,v+1) - I(u,v-1)|`` reaches ``threshold``
    and it lies at least two pixels from every border.
    """
    img = check_gray(image).astype(np.int16)
    h, w = img.shape
    mask = np.zeros((h, w), dtype=bool)
    r = CENSUS_RADIUS
    gx = np.abs(img[r : h - r, r + 1 : w - r + 1] - img[r : h - r, r - 1 : w - r - 1])
    gy = np.abs(img[r + 1 : h - r + 1, r : w - r] - img[r - 1 : h - r - 1, r : w - r])
    mask[r : h - r, r : w - r] = gx + gy >= threshold
    return mask


def census_transform(image, threads=1):
    """24-bit census descriptors over a 5x5 window, one uint32 per pixel.

    Bit ``k`` is set when the k-th neighbour (row-major, centre skipped) is
    strictly darker than the centre. Pixels within two pixels of the border
    hold :data:`CENSUS_INVALID`.
    """
    return kernels.census_transform(check_gray(image), threads)


def census_valid(field):
    return (np.asarray(field) & np.uint32(CENSUS_INVALID)) == 0


def census_cost(a, b):
    """Normalized Hamming distance between descriptors (scalars or arrays)."""
    x = np.bitwise_xor(np.asarray(a, dtype=np.uint32), np.asarray(b, dtype=np.uint32))
    cost = np.bitwise_count(x) / float(CENSUS_BITS)
    return float(cost) if np.ndim(cost) == 0 else cost


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Per-pixel real disparity with a validity flag.

    Invalid pixels hold 0 in ``disparity``.
    """

    disparity: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.disparity.shape != self.valid.shape:
            raise ValueError("disparity and valid shapes differ")

    @property
    def shape(self):
        return self.disparity.shape

    @property
    def width(self):
        return self.disparity.shape[1]

    @property
    def height(self):
        return self.disparity.shape[0]

    @classmethod
    def empty(cls, shape):
        return cls(np.zeros(shape, dtype=np.float64), np.zeros(shape, dtype=bool))

    @classmethod
    def from_array(cls, disparity, valid=None):
        """Wrap a float array; without ``valid``, finite non-negative entries count as valid."""
        d = np.asarray(disparity, dtype=np.float64)
        if valid is None:
            valid = np.isfinite(d) & (d >= 0)
        valid = np.asarray(valid, dtype=bool)
        return cls(np.where(valid, d, 0.0), valid)

    def masked(self, nan=np.nan):
        """Float array with invalid pixels replaced by ``nan``."""
        return np.where(self.valid, self.disparity, nan)
