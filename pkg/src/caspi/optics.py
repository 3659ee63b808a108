"""Synthetic defocus PSFs for a thin lens with chromatic dispersion.

The lens focal length follows lensmaker scaling of a Cauchy-dispersion
index, calibrated to ``f_ref_mm`` at the reference wavelength. Moving the
detector axially defocuses each band by a different amount, producing one
blur kernel per (wavelength, detector position) pair. Kernel stacks can
be written to and read from PSF1 files, so ray-traced kernels computed
elsewhere drop into the same pipeline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from ._envelope import expect_payload, read_envelope, write_envelope
from .cube import CubeGeometry
from .errors import (FormatError, HeaderError, KernelTooLarge,
                     NonPositiveWavelength, NormalizationError, VirtualImage)

PSF_MAGIC = "PSF1"
PSF_MODELS = ("disc", "gaussian")

KERNEL_SUM_TOL = 1e-9        # synthesized kernels
KERNEL_READ_TOL = 1e-6       # externally supplied kernels


@dataclass(frozen=True)
class OpticalPrescription:
    """Thin-lens system parameters plus the detector sampling."""

    f_ref_mm: float = 50.0
    lambda_ref_nm: float = 550.0
    cauchy_A: float = 1.5046
    cauchy_B_um2: float = 0.00420
    aperture_diameter_mm: float = 10.0
    object_distance_mm: float = math.inf
    detector_offsets_mm: tuple[float, ...] = (-0.25, 0.0, 0.25)
    pixel_pitch_um: float = 10.0
    psf_model: str = "disc"
    kernel_halfwidth: int = 15

    def __post_init__(self):
        object.__setattr__(self, "detector_offsets_mm",
                           tuple(float(d) for d in self.detector_offsets_mm))
        if self.f_ref_mm <= 0:
            raise ValueError("f_ref_mm must be positive")
        if self.aperture_diameter_mm <= 0:
            raise ValueError("aperture_diameter_mm must be positive")
        if self.cauchy_A <= 1:
            raise ValueError("cauchy_A must exceed 1")
        if self.cauchy_B_um2 < 0:
            raise ValueError("cauchy_B_um2 must be nonnegative")
        if len(self.detector_offsets_mm) < 1:
            raise ValueError("need at least one detector offset")
        if self.pixel_pitch_um <= 0:
            raise ValueError("pixel_pitch_um must be positive")
        if self.psf_model not in PSF_MODELS:
            raise ValueError(f"psf_model must be one of {PSF_MODELS}")
        if self.kernel_halfwidth < 0:
            raise ValueError("kernel_halfwidth must be nonnegative")

    @property
    def n_positions(self) -> int:
        return len(self.detector_offsets_mm)


DEFAULT_PRESCRIPTION = OpticalPrescription()


@dataclass(frozen=True)
class PsfStack:
    """Per-(position, band) blur kernels; ``kernels`` has shape (K, S, ny, nx).

    Every kernel is nonnegative, sums to one, and is centered at pixel
    (ny // 2, nx // 2).
    """

    kernels: np.ndarray = field(repr=False)
    geometry: CubeGeometry
    detector_offsets_mm: tuple[float, ...]

    @property
    def n_positions(self) -> int:
        return self.kernels.shape[0]

    @property
    def n_bands(self) -> int:
        return self.kernels.shape[1]

    def kernel(self, k: int, s: int) -> np.ndarray:
        return self.kernels[k, s]


def refractive_index(lambda_nm: float, cauchy_A: float, cauchy_B_um2: float) -> float:
    """Cauchy two-term dispersion: n = A + B / lambda_um^2."""
    if lambda_nm <= 0:
        raise NonPositiveWavelength(f"lambda_nm = {lambda_nm}")
    lam_um = lambda_nm / 1000.0
    return cauchy_A + cauchy_B_um2 / (lam_um * lam_um)


def focal_length_mm(lambda_nm: float, rx: OpticalPrescription) -> float:
    """Lensmaker scaling, calibrated so f(lambda_ref) = f_ref exactly."""
    n_ref = refractive_index(rx.lambda_ref_nm, rx.cauchy_A, rx.cauchy_B_um2)
    n_lam = refractive_index(lambda_nm, rx.cauchy_A, rx.cauchy_B_um2)
    return rx.f_ref_mm * (n_ref - 1.0) / (n_lam - 1.0)


def image_distance_mm(lambda_nm: float, rx: OpticalPrescription) -> float:
    """Thin-lens image distance; equals f for an object at infinity."""
    f = focal_length_mm(lambda_nm, rx)
    d_o = rx.object_distance_mm
    if math.isinf(d_o):
        return f
    if d_o <= f:
        raise VirtualImage(f"object at {d_o} mm is inside f({lambda_nm} nm) = {f:.4f} mm")
    return 1.0 / (1.0 / f - 1.0 / d_o)


def blur_radius_px(lambda_nm: float, k: int, rx: OpticalPrescription) -> float:
    """Geometric defocus blur radius, in pixels, at detector position k.

    The detector sits at the reference band's image plane shifted by
    ``detector_offsets_mm[k]``; the blur diameter is the aperture scaled
    by the relative defocus.
    """
    if not 0 <= k < rx.n_positions:
        raise IndexError(f"detector position {k} out of range [0, {rx.n_positions})")
    d_i = image_distance_mm(lambda_nm, rx)
    d_k = image_distance_mm(rx.lambda_ref_nm, rx) + rx.detector_offsets_mm[k]
    diameter_mm = rx.aperture_diameter_mm * abs(d_k - d_i) / d_i
    pitch_mm = rx.pixel_pitch_um / 1000.0
    return (diameter_mm / 2.0) / pitch_mm


def synth_kernel(radius_px: float, psf_model: str, geometry: CubeGeometry,
                 kernel_halfwidth: int) -> np.ndarray:
    """Place a normalized blur kernel of the given radius on an ny-by-nx plane.

    Sub-half-pixel radii collapse to a discrete delta. The disc profile is
    antialiased by 4x4 area subsampling; the gaussian profile uses
    sigma = radius / 2. Both are truncated to the halfwidth box around the
    center pixel (ny // 2, nx // 2) and normalized to unit sum.
    """
    ny, nx = geometry.ny, geometry.nx
    if 2 * kernel_halfwidth + 1 > min(nx, ny):
        raise KernelTooLarge(f"halfwidth {kernel_halfwidth} needs a "
                             f"{2 * kernel_halfwidth + 1} px plane, have "
                             f"{min(nx, ny)}")
    if radius_px < 0:
        raise ValueError("radius_px must be nonnegative")
    cy, cx = ny // 2, nx // 2
    kernel = np.zeros((ny, nx))
    if radius_px < 0.5:
        kernel[cy, cx] = 1.0
        return kernel
    hw = kernel_halfwidth
    dy = np.arange(-hw, hw + 1)
    dx = np.arange(-hw, hw + 1)
    if psf_model == "disc":
        # area fraction of each pixel inside the disc, 4x4 subsamples
        sub = (np.arange(4) + 0.5) / 4.0 - 0.5
        yy = (dy[:, None] + sub[None, :]).ravel()      # (2hw+1)*4 sample rows
        xx = (dx[:, None] + sub[None, :]).ravel()
        inside = (yy[:, None] ** 2 + xx[None, :] ** 2) <= radius_px ** 2
        patch = inside.reshape(dy.size, 4, dx.size, 4).mean(axis=(1, 3))
    elif psf_model == "gaussian":
        sigma = radius_px / 2.0
        r2 = dy[:, None] ** 2 + dx[None, :] ** 2
        patch = np.exp(-r2 / (2.0 * sigma * sigma))
    else:
        raise ValueError(f"psf_model must be one of {PSF_MODELS}")
    total = patch.sum()
    if total <= 0:
        raise NormalizationError("kernel mass vanished after truncation")
    kernel[cy - hw:cy + hw + 1, cx - hw:cx + hw + 1] = patch / total
    return kernel


def build_psf_stack(rx: OpticalPrescription, geometry: CubeGeometry) -> PsfStack:
    """Synthesize the full (position, band) kernel grid for a geometry."""
    K = rx.n_positions
    S = geometry.bands
    kernels = np.empty((K, S, geometry.ny, geometry.nx))
    for k in range(K):
        for s, lam in enumerate(geometry.wavelengths_nm):
            r = blur_radius_px(lam, k, rx)
            kernels[k, s] = synth_kernel(r, rx.psf_model, geometry,
                                         rx.kernel_halfwidth)
    kernels.setflags(write=False)
    return PsfStack(kernels=kernels, geometry=geometry,
                    detector_offsets_mm=rx.detector_offsets_mm)


def write_psf_stack(stack: PsfStack, sink: BinaryIO,
                    extra_header: dict | None = None) -> int:
    """Serialize to PSF1; float32 payload, (k, s)-major."""
    g = stack.geometry
    header = {
        "K": stack.n_positions, "S": stack.n_bands,
        "nx": g.nx, "ny": g.ny,
        "wavelengths_nm": list(g.wavelengths_nm),
        "detector_offsets_mm": list(stack.detector_offsets_mm),
        "pixel_pitch_um": g.pixel_pitch_um,
    }
    if extra_header:
        header.update(extra_header)
    payload = stack.kernels.astype("<f4").tobytes(order="C")
    return write_envelope(sink, PSF_MAGIC, header, payload)


def read_psf_stack(source: BinaryIO) -> PsfStack:
    """Parse a PSF1 stream, validating kernel normalization.

    Kernels whose sum strays from 1 by more than the read tolerance are
    renormalized with a warning; a kernel with non-positive mass or
    significantly negative entries is rejected.
    """
    header, payload = read_envelope(source, PSF_MAGIC)
    try:
        K, S = int(header["K"]), int(header["S"])
        nx, ny = int(header["nx"]), int(header["ny"])
        wavelengths = tuple(header["wavelengths_nm"])
        offsets = tuple(float(d) for d in header["detector_offsets_mm"])
        pitch = float(header.get("pixel_pitch_um", 10.0))
        geometry = CubeGeometry(nx=nx, ny=ny, bands=S, wavelengths_nm=wavelengths,
                                pixel_pitch_um=pitch)
        if len(offsets) != K:
            raise ValueError(f"{len(offsets)} offsets for K={K}")
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderError(f"inconsistent PSF header: {exc}") from exc
    count = K * S * ny * nx
    raw = expect_payload(payload, 4 * count, "kernel data")
    kernels = np.frombuffer(raw, dtype="<f4", count=count).astype(np.float64)
    kernels = kernels.reshape(K, S, ny, nx)
    if not np.all(np.isfinite(kernels)):
        raise FormatError("kernel data contains NaN or Inf")
    if kernels.min() < -KERNEL_READ_TOL:
        raise NormalizationError(f"kernel entries as low as {kernels.min():.3g}")
    kernels = np.clip(kernels, 0.0, None)
    sums = kernels.sum(axis=(-2, -1))
    if np.any(sums <= 0):
        bad = np.argwhere(sums <= 0)[0]
        raise NormalizationError(f"kernel (k={bad[0]}, s={bad[1]}) has "
                                 "non-positive mass")
    if np.any(np.abs(sums - 1.0) > KERNEL_READ_TOL):
        warnings.warn("PSF stack kernels renormalized on read "
                      f"(worst sum deviation {np.max(np.abs(sums - 1.0)):.3g})")
        kernels = kernels / sums[:, :, None, None]
    kernels.setflags(write=False)
    return PsfStack(kernels=kernels, geometry=geometry,
                    detector_offsets_mm=offsets)


def save_psf_stack(stack: PsfStack, path, extra_header: dict | None = None) -> int:
    with open(path, "wb") as f:
        return write_psf_stack(stack, f, extra_header)


def load_psf_stack(path) -> PsfStack:
    with open(path, "rb") as f:
        return read_psf_stack(f)
