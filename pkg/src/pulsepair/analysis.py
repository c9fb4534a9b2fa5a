"""Polarization-interference scans, fringe fitting and Bell-type correlations.

The standard experiment fixes analyzer 2 and steps analyzer 1 through a grid
of angles; the coincidence rate then traces a two-peaked fringe over a full
turn.  Fits use the linear basis {1, cos 2t, sin 2t} (equivalent to
A + B cos^2(t - t0) but a closed-form least-squares problem), and visibility
is reported both as amplitude/offset of the fit and from the extreme bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .counting import (
    CountRecord,
    DetectorConfig,
    RunConfig,
    expected_rates,
    simulate_run,
)
from .polarization import DensityMatrix, correlation
from .rng import derive_seed
from .source import SourceConfig, emitted_state

MODE_ANALYTIC = "analytic"
MODE_MONTE_CARLO = "monte-carlo"
_MODES = (MODE_ANALYTIC, MODE_MONTE_CARLO)


@dataclass(frozen=True)
class FringePoint:
    """One scan point: analyzer-1 angle (radians) and its tallies."""

    theta1: float
    coincidences: float
    singles1: float
    singles2: float
    accidentals: float


@dataclass(frozen=True)
class FringeScan:
    """Ordered polarization scan at fixed analyzer-2 angle ``theta2``."""

    theta2: float
    points: tuple[FringePoint, ...]
    mode: str

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not self.points:
            raise ValueError("scan has no points")
        for pt in self.points:
            if min(pt.coincidences, pt.singles1, pt.singles2, pt.accidentals) < 0:
                raise ValueError("scan counts must be nonnegative")

    @property
    def theta1s(self) -> np.ndarray:
        return np.array([p.theta1 for p in self.points])

    @property
    def coincidences(self) -> np.ndarray:
        return np.array([p.coincidences for p in self.points])

    @property
    def accidentals(self) -> np.ndarray:
        return np.array([p.accidentals for p in self.points])


@dataclass(frozen=True)
class FringeFit:
    """Result of a fringe fit.

    ``phase`` is the analyzer-1 angle of the fringe maximum in [0, pi);
    ``visibility`` is amplitude/offset clamped into [0, 1], with a one-sigma
    Poisson propagation estimate in ``visibility_sigma``; the extreme-bin
    estimator (max-min)/(max+min) is kept alongside the fit-based one.
    """

    offset: float
    amplitude: float
    phase: float
    visibility: float
    rms_residual: float
    visibility_extremes: float = 0.0
    offset_sigma: float = 0.0
    amplitude_sigma: float = 0.0
    visibility_sigma: float = 0.0
    n_points: int = field(default=0)


def polarization_scan(
    cfg: SourceConfig,
    det: DetectorConfig,
    run: RunConfig,
    theta2: float,
    theta1_list,
    mode: str = MODE_ANALYTIC,
    theta1_sign: int = 1,
) -> FringeScan:
    """Scan analyzer 1 over ``theta1_list`` with analyzer 2 fixed at ``theta2``.

    Analytic mode fills expected counts (per-pulse rates times the pulse
    count); monte-carlo mode runs one seeded simulation per angle, with
    per-angle child seeds derived from ``run.seed``.  ``theta1_sign=-1``
    evaluates physics at the negated analyzer-1 angle while recording the
    dial reading, which reproduces the cos^2(t1+t2) form of the fringe law
    for a (HH+VV) source.
    """
    theta1_list = list(theta1_list)
    if not theta1_list:
        raise ValueError("theta1_list must not be empty")
    if theta1_sign not in (1, -1):
        raise ValueError("theta1_sign must be +1 or -1")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")

    points = []
    if mode == MODE_ANALYTIC:
        rho = emitted_state(cfg)
        n = float(run.n_pulses)
        for t1 in theta1_list:
            r = expected_rates(rho, theta1_sign * t1, theta2, cfg.mean_pairs_per_pulse, det)
            points.append(
                FringePoint(
                    theta1=t1,
                    coincidences=r.p_coinc * n,
                    singles1=r.p_single1 * n,
                    singles2=r.p_single2 * n,
                    accidentals=r.p_accidental * n,
                )
            )
    else:
        for i, t1 in enumerate(theta1_list):
            child = RunConfig(run.n_pulses, derive_seed(run.seed, i), run.workers)
            rec: CountRecord = simulate_run(cfg, theta1_sign * t1, theta2, det, child)
            points.append(
                FringePoint(
                    theta1=t1,
                    coincidences=float(rec.coincidences),
                    singles1=float(rec.singles1),
                    singles2=float(rec.singles2),
                    accidentals=float(rec.accidentals),
                )
            )
    return FringeScan(theta2=theta2, points=tuple(points), mode=mode)


def fit_fringe(
    scan: FringeScan,
    use_accidental_subtraction: bool = False,
    weighted: bool = False,
) -> FringeFit:
    """Least-squares fringe fit of counts against {1, cos 2t1, sin 2t1}.

    With ``use_accidental_subtraction`` each point is corrected to
    max(0, coincidences - accidentals) before fitting.  ``weighted`` switches
    to inverse-variance weights from Poisson errors (unweighted by default:
    fringe counts are near-homoscedastic in the intended regime).
    """
    t = scan.theta1s
    y = scan.coincidences
    if use_accidental_subtraction:
        y = np.maximum(0.0, y - scan.accidentals)

    if len(np.unique(np.round(t, 12))) < 4:
        raise ValueError("underdetermined fit: need at least 4 distinct angles")
    design = np.column_stack([np.ones_like(t), np.cos(2.0 * t), np.sin(2.0 * t)])
    var = np.maximum(y, 1.0)  # Poisson variance floor
    if weighted:
        w = 1.0 / np.sqrt(var)
        coeffs, _, rank, _ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    else:
        coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise ValueError("underdetermined fit: rank-deficient design matrix")

    offset, c_cos, c_sin = (float(c) for c in coeffs)
    if offset <= 0.0:
        raise ValueError("degenerate fringe: fitted offset is not positive")
    amplitude = float(np.hypot(c_cos, c_sin))
    phase = 0.5 * np.arctan2(c_sin, c_cos) % np.pi
    visibility = min(max(amplitude / offset, 0.0), 1.0)
    residuals = y - design @ coeffs
    rms = float(np.sqrt(np.mean(residuals**2)))

    # Poisson-propagated parameter covariance of the estimator actually used
    if weighted:
        cov = np.linalg.inv(design.T @ (design / var[:, None]))
    else:
        xtx_inv = np.linalg.inv(design.T @ design)
        cov = xtx_inv @ (design.T * var) @ design @ xtx_inv
    offset_sigma = float(np.sqrt(max(cov[0, 0], 0.0)))
    if amplitude > 0.0:
        g_amp = np.array([0.0, c_cos / amplitude, c_sin / amplitude])
        amplitude_sigma = float(np.sqrt(max(g_amp @ cov @ g_amp, 0.0)))
        g_vis = np.array(
            [-amplitude / offset**2, c_cos / (amplitude * offset), c_sin / (amplitude * offset)]
        )
        visibility_sigma = float(np.sqrt(max(g_vis @ cov @ g_vis, 0.0)))
    else:
        amplitude_sigma = float(np.sqrt(max(cov[1, 1] + cov[2, 2], 0.0)))
        visibility_sigma = amplitude_sigma / offset

    y_max, y_min = float(y.max()), float(y.min())
    extremes = (y_max - y_min) / (y_max + y_min) if y_max > 0.0 else 0.0

    return FringeFit(
        offset=offset,
        amplitude=amplitude,
        phase=float(phase),
        visibility=visibility,
        rms_residual=rms,
        visibility_extremes=extremes,
        offset_sigma=offset_sigma,
        amplitude_sigma=amplitude_sigma,
        visibility_sigma=visibility_sigma,
        n_points=len(scan.points),
    )


def visibility(r_max: float, r_min: float) -> float:
    """Fringe contrast (r_max - r_min) / (r_max + r_min)."""
    if r_max < r_min:
        raise ValueError("r_max must not be smaller than r_min")
    if r_min < 0:
        raise ValueError("rates must be nonnegative")
    if r_max == 0:
        raise ValueError("visibility undefined for r_max = 0")
    return (r_max - r_min) / (r_max + r_min)


def chsh(
    rho: DensityMatrix, a: float, a_prime: float, b: float, b_prime: float
) -> float:
    """CHSH combination |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.

    Classical bound 2; the quantum maximum 2*sqrt(2) is reached by Bell
    states at the standard angle set (0, 45, 22.5, 67.5 degrees).
    """
    return abs(
        correlation(rho, a, b)
        - correlation(rho, a, b_prime)
        + correlation(rho, a_prime, b)
        + correlation(rho, a_prime, b_prime)
    )
