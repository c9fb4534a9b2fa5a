"""Two-crystal down-conversion source model.

A pump at ``pump_angle`` drives two stacked crystals whose optic axes lie in
perpendicular planes: one crystal emits |HH> pairs, the other |VV> pairs.
After single-mode-fiber filtering the two emission paths overlap with a
scalar indistinguishability ``overlap_mu`` in [0, 1], which scales the
HH <-> VV coherence; crystal-height trimming is modeled by the two gain
factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polarization import (
    DensityMatrix,
    OneQubitOperator,
    apply_local,
    half_waveplate,
    identity,
    phase_shifter,
)


@dataclass(frozen=True)
class SourceConfig:
    """Physical knobs of the pair source.

    pump_angle           pump polarization angle from horizontal (radians)
    gain_up, gain_down   amplitude factors of the HH and VV processes (>= 0)
    relative_phase       phase of the VV amplitude relative to HH (radians)
    overlap_mu           spatial indistinguishability of the two paths [0, 1]
    mean_pairs_per_pulse Poisson mean of pairs emitted per pump pulse (>= 0)
    """

    pump_angle: float = np.pi / 4
    gain_up: float = 1.0
    gain_down: float = 1.0
    relative_phase: float = 0.0
    overlap_mu: float = 1.0
    mean_pairs_per_pulse: float = 0.01

    def __post_init__(self) -> None:
        if self.gain_up < 0 or self.gain_down < 0:
            raise ValueError("crystal gains must be nonnegative")
        if not 0.0 <= self.overlap_mu <= 1.0:
            raise ValueError(f"overlap_mu must lie in [0, 1], got {self.overlap_mu}")
        if self.mean_pairs_per_pulse < 0:
            raise ValueError("mean_pairs_per_pulse must be nonnegative")
        power = (self.gain_up * np.cos(self.pump_angle)) ** 2 + (
            self.gain_down * np.sin(self.pump_angle)
        ) ** 2
        if power <= 0.0:
            raise ValueError("degenerate source: both emission amplitudes vanish")


def _amplitudes(cfg: SourceConfig) -> tuple[complex, complex]:
    a_h = cfg.gain_up * np.cos(cfg.pump_angle)
    a_v = cfg.gain_down * np.sin(cfg.pump_angle) * np.exp(1j * cfg.relative_phase)
    return complex(a_h), complex(a_v)


def emitted_state(cfg: SourceConfig) -> DensityMatrix:
    """Density matrix of one emitted pair.

    Populations |aH|^2 and |aV|^2 on HH and VV, HH <-> VV coherence scaled by
    ``overlap_mu``; the HV/VH sector is empty for this source geometry.
    """
    a_h, a_v = _amplitudes(cfg)
    norm = abs(a_h) ** 2 + abs(a_v) ** 2
    if norm <= 0.0:
        raise ValueError("degenerate source: both emission amplitudes vanish")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = abs(a_h) ** 2 / norm
    rho[3, 3] = abs(a_v) ** 2 / norm
    rho[0, 3] = cfg.overlap_mu * a_h * np.conj(a_v) / norm
    rho[3, 0] = np.conj(rho[0, 3])
    return DensityMatrix(rho)


def amplitude_ratio(cfg: SourceConfig) -> complex:
    """Complex VV/HH amplitude ratio of the emitted superposition.

    Undefined for a pure-VV source (zero HH amplitude).
    """
    a_h, a_v = _amplitudes(cfg)
    if abs(a_h) <= 1e-12 * np.hypot(abs(a_h), abs(a_v)):
        raise ValueError("amplitude ratio undefined: pure VV source (zero HH amplitude)")
    return a_v / a_h


def mixed_state(theta: float) -> DensityMatrix:
    """Incoherent mixture cos^2(theta)|HH><HH| + sin^2(theta)|VV><VV|.

    Equal to the emitted state with zero spatial overlap and the pump set so
    the HH weight is cos^2(theta).
    """
    c2 = np.cos(theta) ** 2
    return DensityMatrix(np.diag([c2, 0.0, 0.0, 1.0 - c2]).astype(complex))


def bell_transform(
    rho: DensityMatrix,
    hwp_angle: float | None = None,
    shifter_phase: float = 0.0,
    arm: int = 2,
) -> DensityMatrix:
    """Pass one arm through a phase shifter and an optional half waveplate.

    The shifter acts first, then the plate (omitted when ``hwp_angle`` is
    None).  Both elements are unitary, so purity and entanglement are
    untouched; applied to (HH+VV) this reaches the other three Bell states.
    """
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm}")
    u = phase_shifter(shifter_phase).matrix
    if hwp_angle is not None:
        u = half_waveplate(hwp_angle).matrix @ u
    element = OneQubitOperator(u)
    if arm == 1:
        out, _ = apply_local(rho, element, identity())
    else:
        out, _ = apply_local(rho, identity(), element)
    return out
