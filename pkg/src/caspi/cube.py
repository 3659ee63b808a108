"""Hyperspectral cube data model, portable file I/O, and visual exports.

A cube is a stack of ``bands`` spatial planes, one per wavelength sample.
Arithmetic is done in float64; the HSC1 file format stores float32,
band-major then row-major, little-endian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

from ._envelope import expect_payload, read_envelope, write_envelope
from .errors import (DimensionMismatch, HeaderError, NonFinite, OutOfBounds)

HSC_MAGIC = "HSC1"

# Gaussian band weights used for display only; no colorimetric claim.
RGB_CENTERS_NM = (620.0, 550.0, 450.0)
RGB_SIGMA_NM = 40.0


@dataclass(frozen=True)
class CubeGeometry:
    """Spatial and spectral layout of a cube.

    Pixel ``[m, n]`` addresses row ``m`` in ``[0, ny)`` and column ``n``
    in ``[0, nx)``; ``n_pixels`` is ``nx * ny``.
    """

    nx: int
    ny: int
    bands: int
    wavelengths_nm: tuple[float, ...]
    pixel_pitch_um: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "wavelengths_nm",
                           tuple(float(w) for w in self.wavelengths_nm))
        if self.nx < 1 or self.ny < 1 or self.bands < 1:
            raise ValueError(f"geometry dimensions must be >= 1, got "
                             f"nx={self.nx} ny={self.ny} bands={self.bands}")
        if len(self.wavelengths_nm) != self.bands:
            raise ValueError(f"{len(self.wavelengths_nm)} wavelengths for "
                             f"{self.bands} bands")
        diffs = np.diff(self.wavelengths_nm)
        if self.bands > 1 and not np.all(diffs > 0):
            raise ValueError("wavelengths_nm must be strictly increasing")
        if self.pixel_pitch_um <= 0:
            raise ValueError("pixel_pitch_um must be positive")

    @property
    def n_pixels(self) -> int:
        return self.nx * self.ny

    @property
    def plane_shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)


@dataclass(frozen=True)
class SpectralCube:
    """An immutable spatial-spectral volume; ``data`` has shape (bands, ny, nx)."""

    geometry: CubeGeometry
    data: np.ndarray = field(repr=False)

    def band(self, s: int) -> np.ndarray:
        return self.data[s]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def make_cube(geometry: CubeGeometry, data) -> SpectralCube:
    """Validate planes against the geometry and build a cube.

    ``data`` is anything array-like of shape (bands, ny, nx), or a sequence
    of ny-by-nx planes. Values are copied to a read-only float64 array.
    """
    arr = np.asarray(data, dtype=np.float64)
    expected = (geometry.bands, geometry.ny, geometry.nx)
    if arr.shape != expected:
        raise DimensionMismatch(f"data shape {arr.shape} does not match "
                                f"geometry {expected}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("cube data contains NaN or Inf")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return SpectralCube(geometry, arr)


def write_cube(cube: SpectralCube, sink: BinaryIO, extra_header: dict | None = None) -> int:
    """Serialize to the HSC1 format; returns bytes written.

    Values are rounded once to float32; a cube whose values are already
    float32-representable round-trips bit-exactly.
    """
    g = cube.geometry
    header = {
        "nx": g.nx, "ny": g.ny, "bands": g.bands,
        "wavelengths_nm": list(g.wavelengths_nm),
        "pixel_pitch_um": g.pixel_pitch_um,
    }
    if extra_header:
        header.update(extra_header)
    payload = cube.data.astype("<f4").tobytes(order="C")
    return write_envelope(sink, HSC_MAGIC, header, payload)


def read_cube(source: BinaryIO) -> SpectralCube:
    """Parse an HSC1 stream back into a cube (float64 internally)."""
    header, payload = read_envelope(source, HSC_MAGIC)
    try:
        geometry = CubeGeometry(
            nx=int(header["nx"]), ny=int(header["ny"]), bands=int(header["bands"]),
            wavelengths_nm=tuple(header["wavelengths_nm"]),
            pixel_pitch_um=float(header.get("pixel_pitch_um", 10.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderError(f"inconsistent cube header: {exc}") from exc
    count = geometry.bands * geometry.n_pixels
    raw = expect_payload(payload, 4 * count, "cube data")
    arr = np.frombuffer(raw, dtype="<f4", count=count).astype(np.float64)
    arr = arr.reshape(geometry.bands, geometry.ny, geometry.nx)
    return make_cube(geometry, arr)


def save_cube(cube: SpectralCube, path, extra_header: dict | None = None) -> int:
    with open(path, "wb") as f:
        return write_cube(cube, f, extra_header)


def load_cube(path) -> SpectralCube:
    with open(path, "rb") as f:
        return read_cube(f)


def crop(cube: SpectralCube, x0: int, y0: int, w: int, h: int) -> SpectralCube:
    """Cut a w-by-h spatial window with corner (x0, y0); wavelengths kept."""
    g = cube.geometry
    if w < 1 or h < 1:
        raise OutOfBounds(f"window must be at least 1x1, got {w}x{h}")
    if x0 < 0 or y0 < 0 or x0 + w > g.nx or y0 + h > g.ny:
        raise OutOfBounds(f"window [{x0}:{x0 + w}) x [{y0}:{y0 + h}) exceeds "
                          f"{g.nx} x {g.ny}")
    sub = CubeGeometry(nx=w, ny=h, bands=g.bands,
                       wavelengths_nm=g.wavelengths_nm,
                       pixel_pitch_um=g.pixel_pitch_um)
    return make_cube(sub, cube.data[:, y0:y0 + h, x0:x0 + w])


def render_rgb(cube: SpectralCube) -> np.ndarray:
    """Collapse bands to an RGB preview, shape (ny, nx, 3) in [0, 1].

    Each channel is a Gaussian-weighted band average (centers 620/550/450 nm,
    sigma 40 nm), then the image is scaled by its own maximum and clipped.
    """
    lam = np.asarray(cube.geometry.wavelengths_nm)
    img = np.zeros((cube.geometry.ny, cube.geometry.nx, 3))
    for c, mu in enumerate(RGB_CENTERS_NM):
        w = np.exp(-((lam - mu) ** 2) / (2.0 * RGB_SIGMA_NM ** 2))
        img[:, :, c] = np.tensordot(w, cube.data, axes=(0, 0)) / w.sum()
    peak = img.max()
    if peak > 0:
        img /= peak
    return np.clip(img, 0.0, 1.0)


def write_ppm(image: np.ndarray, sink: BinaryIO) -> int:
    """Write an (ny, nx, 3) image in [0, 1] as binary PPM (P6, maxval 255)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionMismatch(f"expected (ny, nx, 3), got {image.shape}")
    ny, nx = image.shape[:2]
    body = np.rint(np.clip(image, 0, 1) * 255).astype(np.uint8).tobytes()
    head = f"P6\n{nx} {ny}\n255\n".encode("ascii")
    sink.write(head)
    sink.write(body)
    return len(head) + len(body)


def write_pgm(plane: np.ndarray, sink: BinaryIO) -> int:
    """Write an (ny, nx) plane in [0, 1] as binary PGM (P5, maxval 255)."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise DimensionMismatch(f"expected (ny, nx), got {plane.shape}")
    ny, nx = plane.shape
    body = np.rint(np.clip(plane, 0, 1) * 255).astype(np.uint8).tobytes()
    head = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    sink.write(head)
    sink.write(body)
    return len(head) + len(body)
