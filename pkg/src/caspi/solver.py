"""Basis-pursuit reconstruction by Douglas-Rachford splitting.

The objective splits into the l1 norm, handled by soft thresholding, and
the indicator of the noiseless measurement-consistency set, handled by a
Euclidean projection. The projection solves the normal equations
``(A A^T + mu I) w = y - A v`` with (optionally preconditioned) conjugate
gradients and lifts the correction back through the adjoint.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CgStagnation, NegativeThreshold, NonFinite, Unsupported

TRACE_COLUMNS = ("iter", "l1_value", "rel_change", "feas_residual", "elapsed_s")


@dataclass(frozen=True)
class SolverConfig:
    """All iteration and stopping knobs the reconstruction depends on.

    ``gamma`` is the soft-threshold scale; when None it is set at solve
    time to 0.01 times the max-abs entry of the backprojected data.
    Only the noiseless consistency set is supported, so ``epsilon`` must
    stay 0.
    """

    gamma: float | None = None
    relax: float = 1.0
    max_iters: int = 2000
    stop_tol: float = 1e-6
    cg_tol: float = 1e-10
    cg_max_iters: int = 500
    tikhonov_mu: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive (or None for automatic)")
        if not 0.0 < self.relax < 2.0:
            raise ValueError("relax must lie in (0, 2)")
        if self.max_iters < 1 or self.cg_max_iters < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.stop_tol <= 0 or self.cg_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.tikhonov_mu < 0:
            raise ValueError("tikhonov_mu must be nonnegative")
        if self.epsilon != 0.0:
            raise Unsupported("only the noiseless case (epsilon = 0) is "
                              "supported")


@dataclass
class CgResult:
    """Outcome of one normal-equations solve."""

    w: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool


@dataclass
class SolveReport:
    """What the solver did and how feasible/sparse the answer is."""

    iterations: int
    rel_change: float
    feasibility_residual: float
    l1_value: float
    wall_time_s: float
    gamma: float
    cg_stagnations: int = 0
    trace: list[tuple] | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rel_change": self.rel_change,
            "feasibility_residual": self.feasibility_residual,
            "l1_value": self.l1_value,
            "wall_time_s": self.wall_time_s,
            "gamma": self.gamma,
            "cg_stagnations": self.cg_stagnations,
        }

    def trace_csv(self) -> str:
        if self.trace is None:
            raise ValueError("solver was run without trace collection")
        lines = [",".join(TRACE_COLUMNS)]
        for row in self.trace:
            lines.append(f"{row[0]},{row[1]:.9e},{row[2]:.9e},{row[3]:.9e},"
                         f"{row[4]:.3f}")
        return "\n".join(lines) + "\n"


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Component-wise shrink toward zero by t: the prox of t * l1."""
    if t < 0:
        raise NegativeThreshold(f"threshold {t} is negative")
    v = np.asarray(v)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _vdot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a.ravel(), b.ravel()))


def _gram(A, mu: float):
    base = getattr(A, "gram_range", None)
    if base is None:
        def base(w):
            return A.apply(A.adjoint(w))
    if mu == 0.0:
        return base
    return lambda w: base(w) + mu * w


def cg_normal_solve(A, r: np.ndarray, cfg: SolverConfig,
                    w0: np.ndarray | None = None,
                    preconditioner=None) -> CgResult:
    """Solve (A A^T + mu I) w = r by conjugate gradients.

    Returns the iterate with the smallest residual seen; ``converged``
    records whether the relative residual met ``cfg.cg_tol``. A warm
    start and a measurement-space preconditioner (object with an
    ``apply`` method) are optional accelerators and do not change the
    solution being approximated.
    """
    r = np.asarray(r, dtype=np.float64)
    gram = _gram(A, cfg.tikhonov_mu)
    bnorm = float(np.linalg.norm(r))
    if bnorm == 0.0:
        return CgResult(np.zeros_like(r), 0, 0.0, True)
    w = np.zeros_like(r) if w0 is None else np.array(w0, dtype=np.float64)
    res = r - gram(w)
    z = preconditioner.apply(res) if preconditioner is not None else res
    p = z.copy()
    rz = _vdot(res, z)
    rnorm = float(np.linalg.norm(res))
    best_w, best_rnorm = w.copy(), rnorm
    iterations = 0
    for iterations in range(1, cfg.cg_max_iters + 1):
        if best_rnorm <= cfg.cg_tol * bnorm:
            iterations -= 1
            break
        gp = gram(p)
        denom = _vdot(p, gp)
        if denom <= 0:
            break
        step = rz / denom
        w = w + step * p
        res = res - step * gp
        rnorm = float(np.linalg.norm(res))
        if rnorm < best_rnorm:
            best_rnorm = rnorm
            best_w = w.copy()
        z = preconditioner.apply(res) if preconditioner is not None else res
        rz_new = _vdot(res, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    converged = best_rnorm <= cfg.cg_tol * bnorm
    return CgResult(best_w, iterations, best_rnorm / bnorm, converged)


def project_affine(v: np.ndarray, A, y: np.ndarray, cfg: SolverConfig,
                   preconditioner=None) -> np.ndarray:
    """Euclidean projection of v onto {alpha : A alpha = y}, up to CG tolerance."""
    u, _ = _project(v, A, y, cfg, preconditioner=preconditioner)
    return u


def _project(v, A, y, cfg, w0=None, preconditioner=None):
    r = y - A.apply(v)
    cg = cg_normal_solve(A, r, cfg, w0=w0, preconditioner=preconditioner)
    return v + A.adjoint(cg.w), cg


def douglas_rachford(A, y: np.ndarray, cfg: SolverConfig | None = None,
                     keep_trace: bool = False,
                     preconditioner=None) -> tuple[np.ndarray, SolveReport]:
    """Minimize the l1 norm of alpha subject to A alpha = y.

    Iterates ``alpha = soft_threshold(z, gamma)`` followed by a relaxed
    reflected projection onto the consistency set, starting from z = 0.
    Stops on the relative change of alpha or at ``max_iters``; the
    returned point is the final iterate re-projected, so it satisfies the
    measurements to CG accuracy. The report carries the stopping state
    and, when requested, a per-iteration (l1, change, feasibility) trace.
    """
    if cfg is None:
        cfg = SolverConfig()
    else:
        cfg.__post_init__()  # validate caller-constructed configs
    y = np.asarray(y, dtype=np.float64)
    t_start = time.perf_counter()
    if preconditioner is None and hasattr(A, "preconditioner"):
        preconditioner = A.preconditioner()
    aty = A.adjoint(y)
    gamma = cfg.gamma if cfg.gamma is not None else 0.01 * float(np.max(np.abs(aty)))
    ynorm = float(np.linalg.norm(y))
    z = np.zeros_like(aty)
    alpha = np.zeros_like(aty)
    alpha_prev = None
    w_warm = None
    rel_change = np.inf
    stagnations = 0
    trace: list[tuple] | None = [] if keep_trace else None
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        alpha = soft_threshold(z, gamma)
        v = 2.0 * alpha - z
        u, cg = _project(v, A, y, cfg, w0=w_warm, preconditioner=preconditioner)
        w_warm = cg.w
        if not cg.converged:
            stagnations += 1
        z = z + cfg.relax * (u - alpha)
        if not np.all(np.isfinite(z)):
            raise NonFinite(f"iterate diverged at iteration {iterations}; "
                            "reduce gamma or relax")
        if alpha_prev is not None:
            num = float(np.linalg.norm(alpha - alpha_prev))
            rel_change = num / max(float(np.linalg.norm(alpha_prev)), 1e-30)
        if trace is not None:
            feas = (float(np.linalg.norm(y - A.apply(alpha))) / ynorm
                    if ynorm > 0 else 0.0)
            trace.append((iterations, float(np.abs(alpha).sum()),
                          float(rel_change) if np.isfinite(rel_change) else 0.0,
                          feas, time.perf_counter() - t_start))
        if alpha_prev is not None and rel_change <= cfg.stop_tol:
            break
        alpha_prev = alpha
    # hand back a point that actually satisfies the measurements
    alpha_star, cg = _project(alpha, A, y, cfg, w0=w_warm,
                              preconditioner=preconditioner)
    if not cg.converged:
        stagnations += 1
    if not np.all(np.isfinite(alpha_star)):
        raise NonFinite("projected solution is not finite")
    if stagnations:
        warnings.warn(f"{stagnations} projection(s) stopped at the CG "
                      "iteration cap before reaching tolerance",
                      CgStagnation)
    feas = float(np.linalg.norm(y - A.apply(alpha_star)))
    feas_rel = feas / ynorm if ynorm > 0 else feas
    report = SolveReport(
        iterations=iterations,
        rel_change=float(rel_change) if np.isfinite(rel_change) else 0.0,
        feasibility_residual=feas_rel,
        l1_value=float(np.abs(alpha_star).sum()),
        wall_time_s=time.perf_counter() - t_start,
        gamma=gamma,
        cg_stagnations=stagnations,
        trace=trace,
    )
    return alpha_star, report
