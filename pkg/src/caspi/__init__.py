"""Compressive spectral imaging through a chromatically aberrated lens.

The pipeline: synthesize per-band defocus PSFs (``optics``), code the
scene with binary masks (``coding``), form snapshot measurements with the
matrix-free operator (``sysop``), and recover the cube by l1 minimization
over a wavelet-DCT basis (``transforms``, ``solver``). ``cube`` holds the
data model and file formats; ``metrics`` the evaluation.
"""

from .coding import MaskSet, apply_mask, gen_masks, load_masks, save_masks
from .cube import (CubeGeometry, SpectralCube, crop, load_cube, make_cube,
                   read_cube, render_rgb, save_cube, write_cube, write_pgm,
                   write_ppm)
from .metrics import (QualityReport, build_quality_report, compression_ratio,
                      psnr, psnr_per_band, spectral_curve)
from .optics import (DEFAULT_PRESCRIPTION, OpticalPrescription, PsfStack,
                     blur_radius_px, build_psf_stack, focal_length_mm,
                     image_distance_mm, load_psf_stack, read_psf_stack,
                     refractive_index, save_psf_stack, synth_kernel,
                     write_psf_stack)
from .scenes import synthetic_scene
from .solver import (CgResult, SolveReport, SolverConfig, cg_normal_solve,
                     douglas_rachford, project_affine, soft_threshold)
from .sysop import (AOperator, CirculantPreconditioner, MeasurementSet,
                    SystemOperator, add_gaussian_noise, adjoint_apply,
                    build_dense, compose_with_synthesis, conv2_periodic,
                    forward_apply, load_measurements, read_measurements,
                    save_measurements, write_measurements)
from .transforms import (SparseCoeffs, TransformSpec, analysis, analyze_volume,
                         dct1_analysis, dct1_synthesis, default_levels,
                         dwt2_analysis, dwt2_synthesis, synthesis,
                         synthesis_matrix, synthesize_volume)

__version__ = "0.1.0"
