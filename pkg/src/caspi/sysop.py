"""Matrix-free forward model, exact adjoint, dense oracle, and helpers.

A measurement stacks, band by band, the periodic convolution of each
masked spectral plane with its blur kernel. The operator keeps the
kernels' half-plane DFTs cached; band sums always accumulate in ascending
band order so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ._envelope import expect_payload, read_envelope, write_envelope
from .coding import MaskSet
from .cube import CubeGeometry, SpectralCube
from .errors import DimensionMismatch, HeaderError, TooLarge
from .optics import PsfStack
from .transforms import TransformSpec, analyze_volume, synthesize_volume

MEAS_MAGIC = "MEA1"

DENSE_GUARD = 4096   # largest N*S for explicit matrices


@dataclass(frozen=True)
class MeasurementSet:
    """K detector images of shape (K, ny, nx) plus provenance metadata."""

    data: np.ndarray = field(repr=False)
    geometry: CubeGeometry
    provenance: dict = field(default_factory=dict)

    @property
    def n_measurements(self) -> int:
        return self.data.shape[0]


def _center_to_origin(kernels: np.ndarray) -> np.ndarray:
    # move the (ny//2, nx//2) kernel center to index (0, 0)
    return np.fft.ifftshift(kernels, axes=(-2, -1))


def conv2_periodic(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Circular 2D convolution of an image with a centered kernel.

    Computed through the half-plane DFT, which keeps the result exactly
    real; the kernel is shifted so its center sits at index (0, 0) first.
    """
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if img.shape != kernel.shape:
        raise DimensionMismatch(f"image {img.shape} vs kernel {kernel.shape}")
    kf = sfft.rfft2(_center_to_origin(kernel))
    return sfft.irfft2(sfft.rfft2(img) * kf, s=img.shape)


class SystemOperator:
    """The coded-blur measurement map and its adjoint, applied via FFTs."""

    def __init__(self, masks: MaskSet, psfs: PsfStack):
        if masks.plane_shape != psfs.geometry.plane_shape:
            raise DimensionMismatch(f"mask planes {masks.plane_shape} vs PSF "
                                    f"planes {psfs.geometry.plane_shape}")
        if masks.n_measurements != psfs.n_positions:
            raise DimensionMismatch(f"{masks.n_measurements} masks vs "
                                    f"{psfs.n_positions} detector positions")
        self.masks = masks
        self.psfs = psfs
        self.geometry = psfs.geometry
        self._m = masks.masks.astype(np.float64)
        self._kf = sfft.rfft2(_center_to_origin(psfs.kernels), axes=(-2, -1))
        self._kf_conj = np.conj(self._kf)

    @property
    def n_measurements(self) -> int:
        return self._kf.shape[0]

    @property
    def n_bands(self) -> int:
        return self._kf.shape[1]

    @property
    def domain_shape(self) -> tuple[int, int, int]:
        return (self.n_bands, self.geometry.ny, self.geometry.nx)

    @property
    def range_shape(self) -> tuple[int, int, int]:
        return (self.n_measurements, self.geometry.ny, self.geometry.nx)

    def forward(self, volume: np.ndarray) -> np.ndarray:
        """(S, ny, nx) -> (K, ny, nx): mask, blur per band, sum over bands."""
        volume = np.asarray(volume, dtype=np.float64)
        if volume.shape != self.domain_shape:
            raise DimensionMismatch(f"volume {volume.shape} vs domain "
                                    f"{self.domain_shape}")
        coded = volume[None, :, :, :] * self._m[:, None, :, :]
        cf = sfft.rfft2(coded, axes=(-2, -1))
        yf = np.einsum("ksyx,ksyx->kyx", cf, self._kf)
        return sfft.irfft2(yf, s=self.geometry.plane_shape, axes=(-2, -1))

    def adjoint(self, meas: np.ndarray) -> np.ndarray:
        """(K, ny, nx) -> (S, ny, nx): correlate per band, mask, sum over shots."""
        meas = np.asarray(meas, dtype=np.float64)
        if meas.shape != self.range_shape:
            raise DimensionMismatch(f"measurements {meas.shape} vs range "
                                    f"{self.range_shape}")
        yf = sfft.rfft2(meas, axes=(-2, -1))
        corr = sfft.irfft2(yf[:, None] * self._kf_conj,
                           s=self.geometry.plane_shape, axes=(-2, -1))
        return np.einsum("ksyx,kyx->syx", corr, self._m)

    def gram_range(self, meas: np.ndarray) -> np.ndarray:
        """Apply forward(adjoint(.)) in measurement space."""
        return self.forward(self.adjoint(meas))


def forward_apply(op: SystemOperator, cube: SpectralCube,
                  provenance: dict | None = None) -> MeasurementSet:
    if cube.geometry.plane_shape != op.geometry.plane_shape or \
            cube.geometry.bands != op.n_bands:
        raise DimensionMismatch(f"cube {cube.shape} vs operator domain "
                                f"{op.domain_shape}")
    return MeasurementSet(data=op.forward(cube.data), geometry=op.geometry,
                          provenance=dict(provenance or {}))


def adjoint_apply(op: SystemOperator, meas) -> np.ndarray:
    """Backproject measurements to a cube-shaped (S, ny, nx) volume."""
    data = meas.data if isinstance(meas, MeasurementSet) else meas
    return op.adjoint(data)


def build_dense(op: SystemOperator) -> np.ndarray:
    """Explicit KN-by-SN matrix: column j is the forward image of basis cube j."""
    n = op.geometry.n_pixels
    s, k = op.n_bands, op.n_measurements
    if n * s > DENSE_GUARD:
        raise TooLarge(f"dense operator would need N*S = {n * s} columns "
                       f"(limit {DENSE_GUARD})")
    mat = np.empty((k * n, s * n))
    basis = np.zeros(s * n)
    for j in range(s * n):
        basis[j] = 1.0
        mat[:, j] = op.forward(basis.reshape(op.domain_shape)).ravel()
        basis[j] = 0.0
    return mat


class AOperator:
    """The measurement map composed with the synthesis transform."""

    def __init__(self, op: SystemOperator, spec: TransformSpec):
        spec.check_plane(op.geometry.ny, op.geometry.nx)
        self.op = op
        self.spec = spec
        self.domain_shape = op.domain_shape
        self.range_shape = op.range_shape

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.op.forward(synthesize_volume(coeffs, self.spec))

    def adjoint(self, meas: np.ndarray) -> np.ndarray:
        return analyze_volume(self.op.adjoint(meas), self.spec)

    def gram_range(self, meas: np.ndarray) -> np.ndarray:
        # synthesis is orthonormal, so A A^T collapses to the raw operator
        return self.op.gram_range(meas)

    def preconditioner(self) -> "CirculantPreconditioner":
        return CirculantPreconditioner(self.op)


def compose_with_synthesis(op: SystemOperator, spec: TransformSpec) -> AOperator:
    return AOperator(op, spec)


class CirculantPreconditioner:
    """Approximate inverse of A A^T, exact if the masks were replaced by
    their mean transmittance.

    Averaging the binary masks leaves a convolution operator, so the
    expected A A^T is block-diagonal in the 2D DFT basis with a small
    K-by-K Hermitian block per frequency; those blocks are inverted once.
    """

    def __init__(self, op: SystemOperator, ridge: float = 1e-8):
        k = op.n_measurements
        kf = op._kf
        fshape = kf.shape[-2:]
        h = kf.reshape(k, op.n_bands, -1)
        dens = op.masks.masks.reshape(k, -1).mean(axis=1)
        gram = np.einsum("ksf,lsf->klf", h, np.conj(h))
        blocks = gram * (dens[:, None] * dens[None, :])[:, :, None]
        diag = np.einsum("ksf,ksf->kf", h, np.conj(h)).real
        blocks[np.arange(k), np.arange(k)] += (dens * (1.0 - dens))[:, None] * diag
        blocks = blocks.transpose(2, 0, 1)
        scale = np.trace(blocks, axis1=1, axis2=2).real.mean() / k
        blocks = blocks + (ridge * max(scale, np.finfo(float).tiny)) * np.eye(k)[None]
        self._inv = np.linalg.inv(blocks)
        self._k = k
        self._fshape = fshape
        self._plane_shape = op.geometry.plane_shape

    def apply(self, meas: np.ndarray) -> np.ndarray:
        mf = sfft.rfft2(meas, axes=(-2, -1)).reshape(self._k, -1)
        u = np.einsum("fkl,lf->kf", self._inv, mf)
        u = u.reshape((self._k,) + self._fshape)
        return sfft.irfft2(u, s=self._plane_shape, axes=(-2, -1))


def add_gaussian_noise(meas: MeasurementSet, sigma: float, seed: int = 0) -> MeasurementSet:
    """Additive white Gaussian corruption; sigma 0 returns the input unchanged."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return meas
    rng = np.random.default_rng(np.uint64(seed))
    noisy = meas.data + sigma * rng.standard_normal(meas.data.shape)
    prov = dict(meas.provenance)
    prov.update({"noise_sigma": sigma, "noise_seed": int(seed)})
    return MeasurementSet(data=noisy, geometry=meas.geometry, provenance=prov)


def write_measurements(meas: MeasurementSet, sink,
                       extra_header: dict | None = None) -> int:
    k = meas.n_measurements
    g = meas.geometry
    header = {"K": k, "nx": g.nx, "ny": g.ny}
    if meas.provenance:
        header["provenance"] = meas.provenance
    if extra_header:
        header.update(extra_header)
    return write_envelope(sink, MEAS_MAGIC, header,
                          meas.data.astype("<f4").tobytes(order="C"))


def read_measurements(source, geometry: CubeGeometry | None = None) -> MeasurementSet:
    """Parse a MEA1 stream; a geometry argument supplies band metadata."""
    header, payload = read_envelope(source, MEAS_MAGIC)
    try:
        k, nx, ny = int(header["K"]), int(header["nx"]), int(header["ny"])
        if k < 1 or nx < 1 or ny < 1:
            raise ValueError("non-positive dimensions")
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderError(f"inconsistent measurement header: {exc}") from exc
    if geometry is None:
        geometry = CubeGeometry(nx=nx, ny=ny, bands=1, wavelengths_nm=(550.0,))
    elif (geometry.nx, geometry.ny) != (nx, ny):
        raise HeaderError(f"measurement planes {ny}x{nx} vs geometry "
                          f"{geometry.ny}x{geometry.nx}")
    count = k * ny * nx
    raw = expect_payload(payload, 4 * count, "measurement data")
    data = np.frombuffer(raw, dtype="<f4", count=count).astype(np.float64)
    return MeasurementSet(data=data.reshape(k, ny, nx), geometry=geometry,
                          provenance=dict(header.get("provenance", {})))


def save_measurements(meas: MeasurementSet, path,
                      extra_header: dict | None = None) -> int:
    with open(path, "wb") as f:
        return write_measurements(meas, f, extra_header)


def load_measurements(path, geometry: CubeGeometry | None = None) -> MeasurementSet:
    with open(path, "rb") as f:
        return read_measurements(f, geometry)
