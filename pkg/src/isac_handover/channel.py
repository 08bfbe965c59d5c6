"""Physical-layer primitives: ULA beamforming, log-distance path loss, fading, RCS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import LosState

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array; spacing is in wavelengths."""

    n_elements: int = 64
    element_spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be positive")

    def with_elements(self, n: int) -> ArrayConfig:
        return ArrayConfig(n, self.element_spacing)


@dataclass(frozen=True)
class PathLossParams:
    exponent_los: float = 2.1
    exponent_nlos: float = 3.1
    ref_distance: float = 1.0
    ref_attenuation_db: float = 21.0
    # Extra attenuation of an obstructed link on top of the NLOS exponent.
    blockage_loss_db: float = 0.0

    def __post_init__(self):
        if self.exponent_los < 1 or self.exponent_nlos < 1:
            raise ValueError("path-loss exponents must be >= 1")
        if not self.ref_distance > 0:
            raise ValueError("ref_distance must be positive")
        if self.blockage_loss_db < 0:
            raise ValueError("blockage_loss_db must be non-negative")


@dataclass(frozen=True)
class FadingParams:
    rician_k_db: float = -5.0
    enabled: bool = True

    def __post_init__(self):
        if not math.isfinite(self.rician_k_db):
            raise ValueError("rician_k_db must be finite")

    @property
    def k_linear(self) -> float:
        return 10 ** (self.rician_k_db / 10)


@dataclass(frozen=True)
class RcsModel:
    mean_rcs_dbsm: float = 0.0
    fluctuating: bool = True

    def __post_init__(self):
        if not math.isfinite(self.mean_rcs_dbsm):
            raise ValueError("mean_rcs_dbsm must be finite")

    @property
    def mean_linear(self) -> float:
        return 10 ** (self.mean_rcs_dbsm / 10)


@dataclass
class Rng:
    """Seeded random stream; (seed, stream) fully determines the draw sequence."""

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def standard_complex_normal(self) -> complex:
        re, im = self._gen.standard_normal(2)
        return complex(re, im) / math.sqrt(2.0)

    def exponential(self, mean: float) -> float:
        return float(self._gen.exponential(mean))

    def uniform(self, low: float, high: float) -> float:
        return float(self._gen.uniform(low, high))


def steering_vector(array: ArrayConfig, angle: float) -> np.ndarray:
    m = np.arange(array.n_elements)
    return np.exp(1j * 2 * np.pi * array.element_spacing * m * np.sin(angle))


def beam_gain(array: ArrayConfig, steer_angle: float, eval_angle: float) -> float:
    """Power gain |a(steer)^H a(eval)|^2 / N of a conjugate-matched beam.

    Evaluated through the Dirichlet kernel; exactly N when the directions coincide.
    """
    n = array.n_elements
    psi = 2 * math.pi * array.element_spacing * (math.sin(eval_angle) - math.sin(steer_angle))
    if psi == 0.0:
        return float(n)
    half = 0.5 * psi
    den = math.sin(half)
    if abs(den) < 1e-12:
        return float(n)
    num = math.sin(n * half)
    return (num * num) / (den * den) / n


def path_loss_db(d: float, state: LosState, p: PathLossParams = PathLossParams()) -> float:
    """Log-distance path loss; distances below the reference distance are clamped."""
    d = max(d, p.ref_distance)
    if state is LosState.LOS:
        return p.ref_attenuation_db + 10 * p.exponent_los * math.log10(d / p.ref_distance)
    return (
        p.ref_attenuation_db
        + 10 * p.exponent_nlos * math.log10(d / p.ref_distance)
        + p.blockage_loss_db
    )


def draw_rcs(model: RcsModel, rng: Rng) -> float:
    """Swerling-1 scan-to-scan draw (exponential power) or the constant mean."""
    if not model.fluctuating:
        return model.mean_linear
    return rng.exponential(model.mean_linear)


def los_phase(path_length_m: float, carrier_hz: float) -> float:
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return 2 * math.pi * ((path_length_m / wavelength) % 1.0)


def draw_small_scale(
    params: FadingParams, state: LosState, rng: Rng, los_phase_rad: float = 0.0
) -> complex:
    """One unit-power small-scale coefficient, Rician on LOS links, Rayleigh otherwise."""
    if not params.enabled:
        return 1.0 + 0.0j
    scatter = rng.standard_complex_normal()
    if state is LosState.NLOS:
        return scatter
    k = params.k_linear
    specular = math.sqrt(k / (k + 1)) * complex(math.cos(los_phase_rad), math.sin(los_phase_rad))
    return specular + math.sqrt(1 / (k + 1)) * scatter
