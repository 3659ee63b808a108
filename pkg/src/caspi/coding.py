"""Binary coded-aperture masks: generation, application, MSK1 file I/O.

One mask per measurement; the aperture is assumed reprogrammable between
shots. Identical masks across shots reproduce a single fixed code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from ._envelope import expect_payload, read_envelope, write_envelope
from .cube import CubeGeometry, SpectralCube, make_cube
from .errors import BadDensity, DimensionMismatch, FormatError, HeaderError

MASK_MAGIC = "MSK1"


@dataclass(frozen=True)
class MaskSet:
    """K binary masks of shape (K, ny, nx); entries are exactly 0 or 1."""

    masks: np.ndarray = field(repr=False)
    seed: int
    density: float

    @property
    def n_measurements(self) -> int:
        return self.masks.shape[0]

    @property
    def plane_shape(self) -> tuple[int, int]:
        return self.masks.shape[1:]

    def mask(self, k: int) -> np.ndarray:
        return self.masks[k]


def gen_masks(k: int, geometry: CubeGeometry, density: float = 0.5,
              seed: int = 0) -> MaskSet:
    """Draw K iid Bernoulli(density) masks; deterministic for a given seed."""
    if k < 1:
        raise ValueError(f"need at least one mask, got k={k}")
    if not 0.0 < density <= 1.0:
        raise BadDensity(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(np.uint64(seed))
    masks = (rng.random((k, geometry.ny, geometry.nx)) < density).astype(np.uint8)
    masks.setflags(write=False)
    return MaskSet(masks=masks, seed=int(seed), density=float(density))


def apply_mask(cube: SpectralCube, mask: np.ndarray) -> SpectralCube:
    """Multiply every band of the cube pixel-wise by one mask plane."""
    mask = np.asarray(mask)
    if mask.shape != cube.geometry.plane_shape:
        raise DimensionMismatch(f"mask shape {mask.shape} vs cube plane "
                                f"{cube.geometry.plane_shape}")
    return make_cube(cube.geometry, cube.data * mask[None, :, :])


def write_masks(ms: MaskSet, sink: BinaryIO, extra_header: dict | None = None) -> int:
    k, ny, nx = ms.masks.shape
    header = {"K": k, "nx": nx, "ny": ny, "seed": ms.seed, "density": ms.density}
    if extra_header:
        header.update(extra_header)
    return write_envelope(sink, MASK_MAGIC, header, ms.masks.astype(np.uint8).tobytes())


def read_masks(source: BinaryIO) -> MaskSet:
    header, payload = read_envelope(source, MASK_MAGIC)
    try:
        k, nx, ny = int(header["K"]), int(header["nx"]), int(header["ny"])
        seed = int(header["seed"])
        density = float(header["density"])
        if k < 1 or nx < 1 or ny < 1:
            raise ValueError("non-positive dimensions")
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderError(f"inconsistent mask header: {exc}") from exc
    raw = expect_payload(payload, k * ny * nx, "mask data")
    masks = np.frombuffer(raw, dtype=np.uint8, count=k * ny * nx).reshape(k, ny, nx)
    if not np.all((masks == 0) | (masks == 1)):
        raise FormatError("mask bytes must be 0 or 1")
    masks = masks.copy()
    masks.setflags(write=False)
    return MaskSet(masks=masks, seed=seed, density=density)


def save_masks(ms: MaskSet, path, extra_header: dict | None = None) -> int:
    with open(path, "wb") as f:
        return write_masks(ms, f, extra_header)


def load_masks(path) -> MaskSet:
    with open(path, "rb") as f:
        return read_masks(f)
