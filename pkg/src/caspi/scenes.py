"""Synthetic natural-looking test scenes.

Desk-scale experiments need a ground-truth cube without shipping a
dataset: smooth spatial blobs with smooth per-blob spectra give a
nonnegative cube that compresses well under the wavelet-DCT transform.
"""

from __future__ import annotations

import numpy as np

from .cube import CubeGeometry, SpectralCube, make_cube


def synthetic_scene(geometry: CubeGeometry, seed: int = 0,
                    n_blobs: int = 6) -> SpectralCube:
    """Gaussian blobs on a gentle ramp, each with its own spectral peak."""
    rng = np.random.default_rng(np.uint64(seed))
    lam = np.asarray(geometry.wavelengths_nm)
    span = max(lam[-1] - lam[0], 1.0)
    yy = np.arange(geometry.ny)[:, None] / geometry.ny
    xx = np.arange(geometry.nx)[None, :] / geometry.nx
    data = np.zeros((geometry.bands, geometry.ny, geometry.nx))
    bg_spec = 0.3 + 0.2 * np.cos((lam - lam[0]) / span * np.pi)
    data += bg_spec[:, None, None] * (0.5 + 0.3 * xx + 0.2 * yy)[None]
    for _ in range(n_blobs):
        cy, cx = rng.random(2)
        width = 0.05 + 0.15 * rng.random()
        spatial = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width ** 2))
        mu = lam[0] + rng.random() * span
        sigma = 30.0 + 60.0 * rng.random()
        spectrum = np.exp(-((lam - mu) ** 2) / (2.0 * sigma ** 2))
        data += (1.5 * rng.random()) * spectrum[:, None, None] * spatial[None]
    return make_cube(geometry, data)
