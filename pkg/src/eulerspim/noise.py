"""Detector-noise protocol: Gaussian white noise on normalised images.

Noise is added digitally to the max-normalised detected image, with the
level defined as the variance of the zero-mean Gaussian samples.  Values
are not clamped at zero; the distance cost relies on the unclipped
Gaussian statistics.
"""

from dataclasses import dataclass

import numpy as np

from .optics import IntensityImage


@dataclass(frozen=True)
class NoiseSpec:
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")
        if self.level >= 1:
            raise ValueError("noise level must be below 1 (variance on unit scale)")


def normalize_image(image: IntensityImage) -> IntensityImage:
    """Divide by the max pixel; rejects images without a positive max."""
    peak = float(image.values.max())
    if peak <= 0:
        raise ValueError("image has no positive maximum")
    return IntensityImage(values=image.values / peak, normalized=True)


def add_noise_array(values: np.ndarray, level: float, rng: np.random.Generator) -> np.ndarray:
    """Fresh i.i.d. zero-mean Gaussian with variance `level` on every pixel."""
    if level == 0.0:
        return values
    return values + rng.normal(0.0, np.sqrt(level), size=values.shape)


def add_noise(image: IntensityImage, spec: NoiseSpec) -> IntensityImage:
    """Noisy copy of a normalised image; deterministic per spec.seed."""
    if not image.normalized:
        raise ValueError("noise is defined on max-normalised images")
    rng = np.random.default_rng(spec.seed)
    return IntensityImage(
        values=add_noise_array(image.values, spec.level, rng),
        normalized=True,
    )
