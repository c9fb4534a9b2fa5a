"""Counting statistics: analytic rates and exact Monte Carlo pulse runs.

One pump pulse is one coincidence window (the 2 ns window is shorter than the
12.5 ns period of an 80 MHz pulse train, so windows never straddle pulses).
Per pulse the Monte Carlo draws a Poisson number of pairs; each photon is
routed independently through a 50/50 beamsplitter to one of the two analyzer
ports, joint analyzer outcomes are sampled from the exact four-outcome
distribution of the emitted state, and threshold (non-number-resolving)
detectors fire per transmitted photon with their efficiency, plus an
independent background probability per window.  D1 and D2 in the same window
count as a coincidence; D1 at window i with D2 at window i+1 feeds the
delayed-window accidental estimate.

Randomness is counter-based and keyed by (seed, pulse index, draw index), so
a run is bit-reproducible regardless of chunking or worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .polarization import DensityMatrix, coincidence_probability
from .source import SourceConfig, emitted_state

FIRST_ORDER_LAMBDA_LIMIT = 0.1
_DEFAULT_CHUNK = 1 << 18


class ModelRegimeWarning(UserWarning):
    """Raised when the analytic rate model leaves its first-order regime."""


@dataclass(frozen=True)
class DetectorConfig:
    """Per-port detection efficiency and per-window background probability."""

    efficiency1: float = 0.6
    efficiency2: float = 0.6
    background_prob1: float = 0.0
    background_prob2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("efficiency1", "efficiency2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        for name in ("background_prob1", "background_prob2"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {val}")


@dataclass(frozen=True)
class RunConfig:
    """Length, seed and worker count of one simulated run."""

    n_pulses: int = 1_000_000
    seed: int = 12345
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not -(1 << 63) <= self.seed < (1 << 64):
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class CountRecord:
    """Tallies of one run: singles, same-window coincidences, accidentals."""

    n_pulses: int
    singles1: int
    singles2: int
    coincidences: int
    accidentals: int

    def __post_init__(self) -> None:
        if not 0 <= self.coincidences <= min(self.singles1, self.singles2):
            raise ValueError("coincidences must not exceed either singles count")
        if not 0 <= self.accidentals <= max(self.n_pulses - 1, 0):
            raise ValueError("accidentals exceed the number of delayed windows")


@dataclass(frozen=True)
class ExpectedRates:
    """Per-pulse click probabilities from the analytic model."""

    p_single1: float
    p_single2: float
    p_coinc: float
    p_accidental: float

    def __post_init__(self) -> None:
        for name in ("p_single1", "p_single2", "p_coinc", "p_accidental"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {val}")


def _marginal_pass(rho: DensityMatrix, theta: float) -> tuple[float, float]:
    """Pass probabilities of photons A and B alone at an analyzer angle."""
    axis = np.array([np.cos(theta), np.sin(theta)])
    proj = np.outer(axis, axis)
    m = rho.matrix
    p_a = float(np.trace(m @ np.kron(proj, np.eye(2))).real)
    p_b = float(np.trace(m @ np.kron(np.eye(2), proj)).real)
    return p_a, p_b


def pair_click_rate(rho: DensityMatrix, theta: float, efficiency: float) -> float:
    """Probability that one emitted pair clicks the detector at ``theta``.

    Averages the four equally likely beamsplitter routings.  Photons landing
    alone contribute eta * marginal pass probability; when both photons reach
    the same port the threshold detector saturates, which subtracts the
    eta^2/4 * P(theta, theta) double-transmission overlap.
    """
    p_a, p_b = _marginal_pass(rho, theta)
    both = coincidence_probability(rho, theta, theta)
    return efficiency * 0.5 * (p_a + p_b) - efficiency**2 * 0.25 * both


def expected_rates(
    rho: DensityMatrix,
    theta1: float,
    theta2: float,
    mean_pairs_per_pulse: float,
    det: DetectorConfig,
) -> ExpectedRates:
    """First-order-in-lambda analytic model of the per-pulse rates.

    Exact for at most one pair per pulse and exact in efficiency and
    background; multi-pair corrections are O(lambda^2).  The intended regime
    is lambda <= 0.05; above 0.1 a ModelRegimeWarning is emitted (the values
    are still computed).
    """
    lam = mean_pairs_per_pulse
    if lam < 0:
        raise ValueError("mean_pairs_per_pulse must be nonnegative")
    if lam > FIRST_ORDER_LAMBDA_LIMIT:
        warnings.warn(
            f"first-order model out of regime: mean pairs per pulse {lam} > "
            f"{FIRST_ORDER_LAMBDA_LIMIT}",
            ModelRegimeWarning,
            stacklevel=2,
        )
    pair1 = lam * pair_click_rate(rho, theta1, det.efficiency1)
    pair2 = lam * pair_click_rate(rho, theta2, det.efficiency2)
    p1 = pair1 + det.background_prob1 - pair1 * det.background_prob1
    p2 = pair2 + det.background_prob2 - pair2 * det.background_prob2
    p12 = coincidence_probability(rho, theta1, theta2)
    p21 = coincidence_probability(rho, theta2, theta1)
    p_true = lam * det.efficiency1 * det.efficiency2 * 0.25 * (p12 + p21)
    p_acc = p1 * p2
    clip = lambda x: min(max(x, 0.0), 1.0)  # noqa: E731
    return ExpectedRates(clip(p1), clip(p2), clip(p_true + p_acc), clip(p_acc))


def subtract_accidentals(rec: CountRecord) -> float:
    """Accidental-corrected coincidence count, floored at zero."""
    return float(max(0, rec.coincidences - rec.accidentals))


# --- Monte Carlo engine ----------------------------------------------------

# draw indices within one pulse: 0 poisson, 1/2 backgrounds, then 5 per pair
_DRAW_POISSON = 0
_DRAW_BG1 = 1
_DRAW_BG2 = 2
_PAIR_DRAW_BASE = 3
_PAIR_DRAW_STRIDE = 5


def _poisson_thresholds(lam: float) -> np.ndarray:
    """uint64 CDF thresholds for Poisson(lam), truncated at ~1e-18 tail mass."""
    if lam <= 0.0:
        return np.array([rng.MASK64], dtype=np.uint64)
    kmax = int(lam + 10.0 * np.sqrt(lam) + 30.0)
    pmf = np.exp(-lam)
    cdf = [pmf]
    k = 0
    while 1.0 - cdf[-1] > 1e-18 and k < kmax:
        k += 1
        pmf *= lam / k
        cdf.append(cdf[-1] + pmf)
    # cap strictly below 2**64 so the uint64 cast cannot wrap
    cap = np.nextafter(2.0**64, 0.0)
    thresholds = np.minimum(np.array(cdf) * 2.0**64, cap)
    out = thresholds.astype(np.uint64)
    out[-1] = np.uint64(rng.MASK64)
    return out


@dataclass(frozen=True)
class _PulseTables:
    """Precomputed sampling tables shared by all chunks of one run."""

    key: int
    pois_cdf: np.ndarray  # uint64 CDF thresholds for the pair number
    bg_thr: tuple[np.uint64, np.uint64]
    eta_thr: np.ndarray  # uint64 thresholds per port, shape (2,)
    case_cum: np.ndarray  # uint64 outcome thresholds per routing case, (4, 3)


def _outcome_cum(rho: DensityMatrix, alpha: float, beta: float) -> np.ndarray:
    """Cumulative thresholds of the four joint analyzer outcomes at (alpha, beta)."""
    perp_a = alpha + 0.5 * np.pi
    perp_b = beta + 0.5 * np.pi
    q = np.array(
        [
            coincidence_probability(rho, alpha, beta),
            coincidence_probability(rho, alpha, perp_b),
            coincidence_probability(rho, perp_a, beta),
            coincidence_probability(rho, perp_a, perp_b),
        ]
    )
    cum = np.cumsum(q / q.sum())[:3]
    return np.array([rng.threshold(min(c, 1.0)) for c in cum], dtype=np.uint64)


def _build_tables(
    rho: DensityMatrix, theta1: float, theta2: float, det: DetectorConfig, run: RunConfig, lam: float
) -> _PulseTables:
    port_angle = (theta1, theta2)
    case_cum = np.stack(
        [
            _outcome_cum(rho, port_angle[pa], port_angle[pb])
            for pa in (0, 1)
            for pb in (0, 1)
        ]
    )
    return _PulseTables(
        key=rng.stream_key(run.seed),
        pois_cdf=_poisson_thresholds(lam),
        bg_thr=(rng.threshold(det.background_prob1), rng.threshold(det.background_prob2)),
        eta_thr=np.array(
            [rng.threshold(det.efficiency1), rng.threshold(det.efficiency2)],
            dtype=np.uint64,
        ),
        case_cum=case_cum,
    )


def _run_chunk(tables: _PulseTables, lo: int, hi: int) -> tuple[int, int, int, int, bool, bool]:
    """Tallies for pulses [lo, hi): singles, coincidences, in-chunk accidentals
    and the edge detector flags needed to stitch accidentals across chunks."""
    n = hi - lo
    keys = rng.pulse_keys(tables.key, np.arange(lo, hi, dtype=np.uint64))

    k = np.zeros(n, dtype=np.int64)
    if len(tables.pois_cdf) > 1:
        u = rng.draw(keys, _DRAW_POISSON)
        hot = u >= tables.pois_cdf[0]
        if hot.any():
            k[hot] = np.searchsorted(tables.pois_cdf, u[hot], side="right")
            np.minimum(k, len(tables.pois_cdf) - 1, out=k)

    d1 = rng.draw(keys, _DRAW_BG1) < tables.bg_thr[0] if tables.bg_thr[0] else np.zeros(n, bool)
    d2 = rng.draw(keys, _DRAW_BG2) < tables.bg_thr[1] if tables.bg_thr[1] else np.zeros(n, bool)

    pulses_hot = np.nonzero(k)[0]
    if pulses_hot.size:
        kk = k[pulses_hot]
        pair_pulse = np.repeat(pulses_hot, kk)
        pair_keys = keys[pair_pulse]
        starts = np.cumsum(kk) - kk
        ordinal = np.arange(pair_pulse.size, dtype=np.uint64) - np.repeat(starts, kk).astype(
            np.uint64
        )
        base = ordinal * np.uint64(_PAIR_DRAW_STRIDE) + np.uint64(_PAIR_DRAW_BASE)

        port_a = rng.draw_at(pair_keys, base) >> np.uint64(63)  # 0 -> port 1
        port_b = rng.draw_at(pair_keys, base + np.uint64(1)) >> np.uint64(63)
        case = (port_a * np.uint64(2) + port_b).astype(np.intp)
        u_out = rng.draw_at(pair_keys, base + np.uint64(2))
        outcome = (u_out[:, None] >= tables.case_cum[case]).sum(axis=1)
        pass_a = outcome < 2
        pass_b = (outcome & 1) == 0
        hit_a = pass_a & (rng.draw_at(pair_keys, base + np.uint64(3)) < tables.eta_thr[port_a])
        hit_b = pass_b & (rng.draw_at(pair_keys, base + np.uint64(4)) < tables.eta_thr[port_b])

        at1 = np.concatenate([pair_pulse[hit_a & (port_a == 0)], pair_pulse[hit_b & (port_b == 0)]])
        at2 = np.concatenate([pair_pulse[hit_a & (port_a == 1)], pair_pulse[hit_b & (port_b == 1)]])
        if at1.size:
            d1 = d1 | (np.bincount(at1, minlength=n) > 0)
        if at2.size:
            d2 = d2 | (np.bincount(at2, minlength=n) > 0)

    singles1 = int(np.count_nonzero(d1))
    singles2 = int(np.count_nonzero(d2))
    coincidences = int(np.count_nonzero(d1 & d2))
    accidentals = int(np.count_nonzero(d1[:-1] & d2[1:]))
    return singles1, singles2, coincidences, accidentals, bool(d1[-1]), bool(d2[0])


def simulate_run(
    cfg: SourceConfig,
    theta1: float,
    theta2: float,
    det: DetectorConfig,
    run: RunConfig,
    chunk_size: int | None = None,
) -> CountRecord:
    """Simulate ``run.n_pulses`` windows and tally counts.

    The result depends only on (seed, configs): chunk size and worker count
    are pure throughput knobs.  Workers share the numpy-heavy chunk kernel
    through a thread pool.
    """
    rho = emitted_state(cfg)
    lam = cfg.mean_pairs_per_pulse
    tables = _build_tables(rho, theta1, theta2, det, run, lam)

    if chunk_size is None:
        chunk_size = _DEFAULT_CHUNK if lam <= 1.0 else max(1 << 14, int(_DEFAULT_CHUNK / lam))
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    bounds = list(range(0, run.n_pulses, chunk_size)) + [run.n_pulses]
    ranges = list(zip(bounds[:-1], bounds[1:]))

    if run.workers == 1 or len(ranges) == 1:
        results = [_run_chunk(tables, lo, hi) for lo, hi in ranges]
    else:
        with ThreadPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(lambda r: _run_chunk(tables, *r), ranges))

    singles1 = sum(r[0] for r in results)
    singles2 = sum(r[1] for r in results)
    coincidences = sum(r[2] for r in results)
    accidentals = sum(r[3] for r in results)
    # delayed windows spanning a chunk boundary: D1 on the last pulse of one
    # chunk against D2 on the first pulse of the next
    for prev, nxt in zip(results[:-1], results[1:]):
        accidentals += int(prev[4] and nxt[5])
    return CountRecord(run.n_pulses, singles1, singles2, coincidences, accidentals)
