"""Reconstruction quality metrics and spectral-curve extraction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cube import SpectralCube
from .errors import DimensionMismatch, OutOfBounds

PSNR_CAP_DB = 300.0


def psnr(reference: SpectralCube, estimate: SpectralCube) -> float:
    """Peak signal-to-noise ratio in dB.

    The peak is the maximum of the reference cube and the MSE averages
    over every voxel; identical cubes report the 300 dB cap.
    """
    if reference.geometry != estimate.geometry:
        raise DimensionMismatch("cubes have different geometry")
    peak = float(reference.data.max())
    mse = float(np.mean((reference.data - estimate.data) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB)


def psnr_per_band(reference: SpectralCube, estimate: SpectralCube) -> np.ndarray:
    """Band-wise PSNR, sharing the reference cube's global peak."""
    if reference.geometry != estimate.geometry:
        raise DimensionMismatch("cubes have different geometry")
    peak = float(reference.data.max())
    mse = np.mean((reference.data - estimate.data) ** 2, axis=(1, 2))
    out = np.full(reference.geometry.bands, PSNR_CAP_DB)
    nz = mse > 0
    out[nz] = np.minimum(10.0 * np.log10(peak * peak / mse[nz]), PSNR_CAP_DB)
    return out


def spectral_curve(cube: SpectralCube, m: int, n: int) -> list[tuple[float, float]]:
    """The (wavelength, value) series at pixel row m, column n."""
    g = cube.geometry
    if not (0 <= m < g.ny and 0 <= n < g.nx):
        raise OutOfBounds(f"pixel ({m}, {n}) outside {g.ny}x{g.nx}")
    return [(lam, float(cube.data[s, m, n]))
            for s, lam in enumerate(g.wavelengths_nm)]


def compression_ratio(k: int, s: int) -> float:
    """Measurements acquired per spectral band to recover: K / S."""
    if k < 1 or s < 1:
        raise ValueError("K and S must be >= 1")
    return k / s


@dataclass
class QualityReport:
    """PSNR summary plus spectral curves at the pixels of interest."""

    psnr_db: float
    psnr_db_per_band: list[float]
    compression_ratio: float
    curves: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "psnr_db": self.psnr_db,
            "psnr_db_per_band": self.psnr_db_per_band,
            "compression_ratio": self.compression_ratio,
            "curves": {f"{m},{n}": rows for (m, n), rows in self.curves.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def build_quality_report(reference: SpectralCube, estimate: SpectralCube,
                         n_measurements: int,
                         pixels: list[tuple[int, int]] | None = None) -> QualityReport:
    curves = {}
    for (m, n) in pixels or []:
        truth = spectral_curve(reference, m, n)
        est = spectral_curve(estimate, m, n)
        curves[(m, n)] = [(lam, t, e) for (lam, t), (_, e) in zip(truth, est)]
    return QualityReport(
        psnr_db=psnr(reference, estimate),
        psnr_db_per_band=[float(v) for v in psnr_per_band(reference, estimate)],
        compression_ratio=compression_ratio(n_measurements,
                                            reference.geometry.bands),
        curves=curves,
    )


def curve_csv(reference: SpectralCube, estimate: SpectralCube,
              m: int, n: int) -> str:
    """CSV of truth vs estimate spectra at one pixel: lambda_nm,truth,estimate."""
    truth = spectral_curve(reference, m, n)
    est = spectral_curve(estimate, m, n)
    lines = ["lambda_nm,truth,estimate"]
    for (lam, t), (_, e) in zip(truth, est):
        lines.append(f"{lam:.6g},{t:.9e},{e:.9e}")
    return "\n".join(lines) + "\n"
