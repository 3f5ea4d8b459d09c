"""
Image and Kernel containers.
An image is a 2-D float64 numpy array; a kernel is a small frozen array of taps.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.errors import ConstructionError, DimensionError

Image = np.ndarray


def as_image(x, name="image"):
    """Validate and return ``x`` as a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite values")
    return arr


def check_same_shape(x, y, what="images"):
    if np.shape(x) != np.shape(y):
        raise DimensionError(f"{what} differ in shape: {np.shape(x)} vs {np.shape(y)}")


@dataclass(frozen=True, eq=False)
class Kernel:
    """Blur kernel. The centre tap (kh // 2, kw // 2) is the convolution origin."""

    taps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64, ndmin=2)
        if taps.ndim != 2:
            raise ConstructionError(f"kernel taps must be 2-D, got {taps.ndim}-D")
        if not np.all(np.isfinite(taps)):
            raise ConstructionError("kernel taps must be finite")
        if self.normalized and abs(taps.sum() - 1.0) > 1e-12:
            raise ConstructionError(f"normalized kernel sums to {taps.sum():.15g}, not 1")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def shape(self):
        return self.taps.shape

    @property
    def center(self):
        return self.taps.shape[0] // 2, self.taps.shape[1] // 2

    def is_symmetric(self):
        """k(i, j) == k(-i, -j) about the centre tap (requires odd sizes)."""
        kh, kw = self.taps.shape
        if kh % 2 == 0 or kw % 2 == 0:
            return False
        return bool(np.array_equal(self.taps, self.taps[::-1, ::-1]))

    def is_nonnegative(self):
        return bool(np.all(self.taps >= 0))

    @classmethod
    def from_array(cls, taps, normalize=True):
        taps = np.array(taps, dtype=np.float64, ndmin=2)
        if normalize:
            total = taps.sum()
            if total == 0:
                raise ConstructionError("cannot normalize a kernel whose taps sum to 0")
            taps = taps / total
        return cls(taps, normalized=normalize)

    @classmethod
    def delta(cls):
        return cls(np.ones((1, 1)))

    @classmethod
    def binomial(cls, size=3):
        """Separable binomial kernel, e.g. size 3 -> [1 2 1]/4 outer [1 2 1]/4."""
        if size < 1 or size % 2 == 0:
            raise ConstructionError(f"binomial kernel size must be odd and positive, got {size}")
        row = np.array([1.0])
        for _ in range(size - 1):
            row = np.convolve(row, [1.0, 1.0])
        row /= row.sum()
        return cls(np.outer(row, row) / np.outer(row, row).sum())

    @classmethod
    def gaussian(cls, size, std):
        if size < 1 or size % 2 == 0:
            raise ConstructionError(f"gaussian kernel size must be odd and positive, got {size}")
        if std <= 0:
            raise ConstructionError(f"gaussian std must be positive, got {std}")
        r = np.arange(size) - size // 2
        row = np.exp(-0.5 * (r / std) ** 2)
        return cls.from_array(np.outer(row, row))

    @classmethod
    def box(cls, size):
        if size < 1:
            raise ConstructionError(f"box kernel size must be positive, got {size}")
        return cls.from_array(np.ones((size, size)))

    @classmethod
    def motion(cls, length):
        """Horizontal line kernel, a synthetic stand-in for measured camera shake."""
        if length < 1:
            raise ConstructionError(f"motion length must be positive, got {length}")
        return cls.from_array(np.ones((1, length)))

    @classmethod
    def from_text(cls, path, normalize=True):
        """Read a kernel stored as rows of whitespace-separated reals."""
        taps = np.loadtxt(Path(path), ndmin=2, comments="#")
        return cls.from_array(taps, normalize=normalize)

    def to_text(self, path):
        np.savetxt(Path(path), self.taps, fmt="%.17g")
