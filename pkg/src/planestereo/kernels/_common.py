import numpy as np

# descriptors within the 2-px border carry bits above the 24-bit payload
CENSUS_INVALID = 0xFF000000
CENSUS_BITS = 24

# Bresenham circle of radius 3, clockwise from 12 o'clock
CIRCLE_DU = np.array([0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1], dtype=np.int64)
CIRCLE_DV = np.array([-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3], dtype=np.int64)


def _arc9_table():
    bits = np.arange(1 << 16, dtype=np.int64)
    x = bits | (bits << 16)
    # x keeps bit i only where bits i..i+8 (cyclically) are all set
    for _ in range(8):
        x &= x >> 1
    return (x != 0).astype(np.bool_)


ARC9 = _arc9_table()
