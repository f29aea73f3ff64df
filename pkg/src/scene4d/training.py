"""Training-support math: focal L2 loss with its annealed fraction and
category weighting, Fourier encoding of the camera conditioning, and
conditioning-augmentation noise.

These are forward-evaluable references for an external training stack; no
autograd or optimizer lives here. Feature grids are plain arrays of shape
(T, h, w, D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import categories
from .trajectory import SamplingBounds

DEFAULT_RAMP_ITERS = 5000
DEFAULT_FINAL_FRACTION = 0.1
VEHICLE_WEIGHT = 3.0
PERSON_WEIGHT = 7.0

FOURIER_BANDS = 8
CONDITIONING_NOISE_SIGMA = 0.02


@dataclass(frozen=True)
class LossConfig:
    ramp_iters: int = DEFAULT_RAMP_ITERS
    final_fraction: float = DEFAULT_FINAL_FRACTION
    vehicle_weight: float = VEHICLE_WEIGHT
    person_weight: float = PERSON_WEIGHT
    vehicle_ids: frozenset[int] = field(
        default_factory=lambda: categories.ids_for_names(categories.VEHICLE_NAMES)
    )
    person_ids: frozenset[int] = field(
        default_factory=lambda: categories.ids_for_names(categories.PERSON_NAMES)
    )

    def __post_init__(self):
        if not 0.0 < self.final_fraction <= 1.0:
            raise ValueError("final_fraction must be in (0, 1]")
        if self.vehicle_weight < 1.0 or self.person_weight < 1.0:
            raise ValueError("category weights must be >= 1")
        if self.vehicle_ids & self.person_ids:
            raise ValueError("vehicle and person id sets overlap")

    @classmethod
    def from_categories_json(cls, path, **kwargs) -> "LossConfig":
        """Build id sets by matching the known category names in a dataset's
        categories.json."""
        table = categories.read_categories_json(path)
        return cls(
            vehicle_ids=categories.ids_for_names(categories.VEHICLE_NAMES, table),
            person_ids=categories.ids_for_names(categories.PERSON_NAMES, table),
            **kwargs,
        )


def focal_fraction(iteration: int, cfg: LossConfig = LossConfig()) -> float:
    """Selected fraction of positions: anneals linearly from 1.0 down to the
    final fraction over the ramp, constant afterwards."""
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    ramp = 1.0 - (1.0 - cfg.final_fraction) * iteration / cfg.ramp_iters
    return max(cfg.final_fraction, ramp)


def focal_l2(
    pred: np.ndarray,
    target: np.ndarray,
    q: float,
    weights: np.ndarray | None = None,
) -> float:
    """Squared-error loss over only the worst-erring top fraction q of
    spatial positions.

    The per-position error is the squared L2 norm over the feature axis
    (last). Selection uses unweighted errors; weights multiply the selected
    errors before the mean. q = 1 with unit weights is the plain
    per-position MSE.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must be in (0, 1]")
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    errors = np.sum(diff * diff, axis=-1).ravel()
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != errors.shape:
            raise ValueError("weights must match the spatial positions")
    else:
        w = None
    k = math.ceil(q * errors.size)
    if k >= errors.size:
        selected = slice(None)
    else:
        # Stable descending sort keeps tie selection deterministic.
        selected = np.argsort(-errors, kind="stable")[:k]
    chosen = errors[selected]
    if w is not None:
        chosen = chosen * w[selected]
    return float(np.mean(chosen))


def category_weight_map(semantic_gt: np.ndarray, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Per-position loss weights: vehicle categories 3x, person categories
    7x, everything else 1x."""
    labels = np.asarray(semantic_gt)
    weights = np.ones(labels.shape, dtype=np.float64)
    if cfg.vehicle_ids:
        weights[np.isin(labels, list(cfg.vehicle_ids))] = cfg.vehicle_weight
    if cfg.person_ids:
        weights[np.isin(labels, list(cfg.person_ids))] = cfg.person_weight
    return weights


def fourier_encode(
    params: tuple[float, float, float],
    bounds: SamplingBounds,
    bands: int = FOURIER_BANDS,
) -> np.ndarray:
    """Fourier positional encoding of the (d_azimuth, d_elevation, d_radius)
    camera conditioning, length 6 * bands.

    Each component is normalized to [-1, 1] by its preset maximum, then
    expanded as sin/cos at frequencies 2^k * pi, ordered component-major,
    band next, (sin, cos) innermost.
    """
    if bands < 1:
        raise ValueError("need at least one band")
    d_azimuth, d_elevation, d_radius = params
    normalized = np.array(
        [
            d_azimuth / bounds.max_delta_azimuth_deg,
            d_elevation / bounds.max_delta_elevation_deg,
            d_radius / bounds.max_delta_radius_m,
        ]
    )
    frequencies = (2.0 ** np.arange(bands)) * math.pi
    angles = normalized[:, None] * frequencies[None, :]
    encoded = np.stack([np.sin(angles), np.cos(angles)], axis=-1)
    return encoded.reshape(-1)


def conditioning_augment(
    latent: np.ndarray,
    rng: np.random.Generator,
    sigma: float = CONDITIONING_NOISE_SIGMA,
) -> np.ndarray:
    """Additive Gaussian conditioning-augmentation noise, reproducible from
    the caller's seeded generator."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    latent = np.asarray(latent, dtype=np.float64)
    if sigma == 0.0:
        return latent.copy()
    return latent + sigma * rng.standard_normal(latent.shape)
