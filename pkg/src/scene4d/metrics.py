"""Image and segmentation metrics under the occlusion-aware protocol.

PSNR and SSIM run on "all" valid pixels and on the occluded split; mean IoU
accumulates a dataset-level confusion (intersection/union sums commute, so
accumulation order and worker sharding do not matter). Sequence evaluation
always excludes frame 0, whose target pose coincides with the source.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage

from .occlusion import OcclusionMask

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# Rec. 709 luma coefficients.
_LUMA = np.array([0.2126, 0.7152, 0.0722])

MIOU_TOP_K = 10


def _select(image: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        return np.asarray(image, dtype=np.float64).ravel()
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != image.shape[:2]:
        raise ValueError("mask shape does not match image")
    if not mask.any():
        raise ValueError("mask selects no pixels")
    return np.asarray(image, dtype=np.float64)[mask].ravel()


def psnr(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB for images in [0, 1], capped at
    100 dB for identical inputs so aggregates stay finite."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    diff = _select(pred, mask) - _select(gt, mask)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


def _to_luma(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        return image @ _LUMA
    return image


def _gaussian_filter(image: np.ndarray) -> np.ndarray:
    radius = SSIM_WINDOW // 2
    offsets = np.arange(-radius, radius + 1)
    window = np.exp(-0.5 * (offsets / SSIM_SIGMA) ** 2)
    window /= window.sum()
    out = ndimage.correlate1d(image, window, axis=0, mode="reflect")
    return ndimage.correlate1d(out, window, axis=1, mode="reflect")


def ssim_map(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Per-pixel structural similarity on luma (Gaussian window 11, sigma
    1.5, K1=0.01, K2=0.03, dynamic range 1)."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    x = _to_luma(pred)
    y = _to_luma(gt)
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    mu_x = _gaussian_filter(x)
    mu_y = _gaussian_filter(y)
    var_x = _gaussian_filter(x * x) - mu_x * mu_x
    var_y = _gaussian_filter(y * y) - mu_y * mu_y
    cov = _gaussian_filter(x * y) - mu_x * mu_y
    return ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )


def ssim(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean SSIM. Without a mask the window-radius border is cropped from
    the average; with a mask the full map is averaged over masked pixels."""
    smap = ssim_map(pred, gt)
    if mask is None:
        pad = SSIM_WINDOW // 2
        return float(smap[pad:-pad, pad:-pad].mean())
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != smap.shape:
        raise ValueError("mask shape does not match image")
    if not mask.any():
        raise ValueError("mask selects no pixels")
    return float(smap[mask].mean())


class IoUAccumulator:
    """Dataset-level intersection/union sums per category.

    Updates are associative and commutative, so accumulators can be merged
    across frames, scenes, or workers in any order. Per-frame sums are also
    retained for the per-frame-average mIoU variant.
    """

    def __init__(self, num_categories: int):
        if num_categories < 1:
            raise ValueError("need at least one category")
        self.num_categories = num_categories
        self.intersection = np.zeros(num_categories, dtype=np.int64)
        self.pred_count = np.zeros(num_categories, dtype=np.int64)
        self.gt_count = np.zeros(num_categories, dtype=np.int64)
        self.frames: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    def update(
        self, pred: np.ndarray, gt: np.ndarray, mask: np.ndarray | None = None
    ) -> None:
        if pred.shape != gt.shape:
            raise ValueError("label maps must share shape")
        p = np.asarray(pred).ravel()
        g = np.asarray(gt).ravel()
        if mask is not None:
            m = np.asarray(mask, dtype=bool).ravel()
            p, g = p[m], g[m]
        n = self.num_categories
        inter = np.bincount(g[p == g], minlength=n)[:n]
        pc = np.bincount(p, minlength=n)[:n]
        gc = np.bincount(g, minlength=n)[:n]
        self.intersection += inter
        self.pred_count += pc
        self.gt_count += gc
        self.frames.append((inter, pc, gc))

    def merge(self, other: "IoUAccumulator") -> None:
        if other.num_categories != self.num_categories:
            raise ValueError("category counts differ")
        self.intersection += other.intersection
        self.pred_count += other.pred_count
        self.gt_count += other.gt_count
        self.frames.extend(other.frames)

    def union(self) -> np.ndarray:
        return self.pred_count + self.gt_count - self.intersection

    def top_categories(self, k: int = MIOU_TOP_K) -> tuple[int, ...]:
        """The k most common categories by ground-truth pixel count."""
        order = np.lexsort((np.arange(self.num_categories), -self.gt_count))
        present = [int(i) for i in order if self.gt_count[i] > 0]
        return tuple(present[:k])

    def iou(self, categories: Iterable[int]) -> dict[int, float]:
        union = self.union()
        out = {}
        for c in categories:
            out[c] = (
                float(self.intersection[c] / union[c]) if union[c] > 0 else float("nan")
            )
        return out

    def miou(
        self, categories: Iterable[int] | None = None, per_frame_average: bool = False
    ) -> float:
        """Mean IoU over the given categories (default: top 10 by pixel
        count). Dataset-level accumulation by default; the per-frame switch
        averages each category's per-frame IoU before the category mean."""
        cats = tuple(categories) if categories is not None else self.top_categories()
        if not cats:
            raise ValueError("empty category set")
        if not per_frame_average:
            values = [v for v in self.iou(cats).values() if not math.isnan(v)]
        else:
            values = []
            for c in cats:
                per_frame = [
                    inter[c] / (pc[c] + gc[c] - inter[c])
                    for inter, pc, gc in self.frames
                    if pc[c] + gc[c] - inter[c] > 0
                ]
                if per_frame:
                    values.append(float(np.mean(per_frame)))
        if not values:
            raise ValueError("no category with nonzero union")
        return float(np.mean(values))


def miou(
    pred_labels: np.ndarray,
    gt_labels: np.ndarray,
    categories: Iterable[int],
    mask: np.ndarray | None = None,
    accumulator: IoUAccumulator | None = None,
) -> tuple[dict[int, float], float]:
    """Per-category IoU and their unweighted mean.

    With an accumulator, the update is folded in and the result reflects
    all accumulated frames; otherwise the result is for this frame alone.
    """
    cats = tuple(categories)
    if not cats:
        raise ValueError("empty category set")
    if accumulator is None:
        accumulator = IoUAccumulator(num_categories=max(cats) + 1)
    accumulator.update(pred_labels, gt_labels, mask)
    per_category = accumulator.iou(cats)
    return per_category, accumulator.miou(cats)


@dataclass
class FrameMetrics:
    frame_index: int
    psnr_all: float | None = None
    ssim_all: float | None = None
    psnr_occ: float | None = None
    ssim_occ: float | None = None
    miou_all: float | None = None
    miou_occ: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


_METRIC_FIELDS = ("psnr_all", "ssim_all", "psnr_occ", "ssim_occ", "miou_all", "miou_occ")


@dataclass
class MetricsReport:
    """Per-frame and aggregate scores; aggregates exclude frame 0."""

    per_frame: list[FrameMetrics]
    aggregate: dict[str, float | None]
    lpips_all: float | None = None  # reserved for third-party values
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_frame": [f.to_dict() for f in self.per_frame],
            "aggregate": self.aggregate,
            "lpips_all": self.lpips_all,
            "metadata": self.metadata,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            per_frame=[FrameMetrics(**f) for f in d["per_frame"]],
            aggregate=d["aggregate"],
            lpips_all=d.get("lpips_all"),
            metadata=d.get("metadata", {}),
        )


def evaluate_sequence(
    pred_frames: Sequence[np.ndarray],
    gt_frames: Sequence[np.ndarray],
    masks: Sequence[OcclusionMask],
    modality: str = "rgb",
    categories: Iterable[int] | None = None,
    metadata: dict | None = None,
) -> MetricsReport:
    """Score a predicted video against ground truth on frames 1..T-1.

    "all" metrics run on every pixel with valid target depth; "occ."
    metrics on the occluded/out-of-view split. RGB modality produces
    PSNR/SSIM, semantic modality mean IoU (dataset-level accumulation for
    the aggregate, per-frame confusions for the per-frame entries).
    """
    t_frames = len(pred_frames)
    if not (len(gt_frames) == len(masks) == t_frames):
        raise ValueError("pred/gt/mask lengths differ")
    if t_frames < 2:
        raise ValueError("need at least 2 frames (frame 0 is excluded)")
    if modality not in ("rgb", "semantic"):
        raise ValueError(f"unknown modality {modality!r}")

    cats: tuple[int, ...] | None = tuple(categories) if categories is not None else None
    if modality == "semantic":
        num_categories = 1 + max(
            int(max(np.max(p), np.max(g)) if p.size else 0)
            for p, g in zip(pred_frames, gt_frames)
        )
        if cats:
            num_categories = max(num_categories, max(cats) + 1)
        acc_all = IoUAccumulator(num_categories)
        acc_occ = IoUAccumulator(num_categories)

    per_frame: list[FrameMetrics] = []
    for t in range(1, t_frames):
        pred, gt, mask = pred_frames[t], gt_frames[t], masks[t]
        valid = mask.valid()
        occ = mask.occluded_split()
        entry = FrameMetrics(frame_index=t)
        if modality == "rgb":
            entry.psnr_all = psnr(pred, gt, valid) if valid.any() else None
            entry.ssim_all = ssim(pred, gt, valid) if valid.any() else None
            entry.psnr_occ = psnr(pred, gt, occ) if occ.any() else None
            entry.ssim_occ = ssim(pred, gt, occ) if occ.any() else None
        else:
            frame_all = IoUAccumulator(num_categories)
            frame_all.update(pred, gt, valid)
            acc_all.update(pred, gt, valid)
            frame_cats = cats if cats is not None else frame_all.top_categories()
            try:
                entry.miou_all = frame_all.miou(frame_cats)
            except ValueError:
                entry.miou_all = None
            if occ.any():
                frame_occ = IoUAccumulator(num_categories)
                frame_occ.update(pred, gt, occ)
                acc_occ.update(pred, gt, occ)
                try:
                    entry.miou_occ = frame_occ.miou(frame_cats)
                except ValueError:
                    entry.miou_occ = None
        per_frame.append(entry)

    aggregate: dict[str, float | None] = {}
    for name in _METRIC_FIELDS:
        values = [getattr(f, name) for f in per_frame if getattr(f, name) is not None]
        aggregate[name] = float(np.mean(values)) if values else None
    if modality == "semantic":
        # Aggregate mIoU from the accumulated confusion, not frame averages.
        agg_cats = cats if cats is not None else acc_all.top_categories()
        try:
            aggregate["miou_all"] = acc_all.miou(agg_cats)
        except ValueError:
            aggregate["miou_all"] = None
        try:
            aggregate["miou_occ"] = acc_occ.miou(agg_cats) if acc_occ.frames else None
        except ValueError:
            aggregate["miou_occ"] = None

    return MetricsReport(
        per_frame=per_frame, aggregate=aggregate, metadata=metadata or {}
    )


def aggregate_reports(reports: Sequence[MetricsReport]) -> dict[str, float | None]:
    """Mean of aggregate scores across reports (samples x trajectories)."""
    if not reports:
        raise ValueError("no reports to aggregate")
    out: dict[str, float | None] = {}
    for name in _METRIC_FIELDS:
        values = [
            r.aggregate.get(name)
            for r in reports
            if r.aggregate.get(name) is not None
        ]
        out[name] = float(np.mean(values)) if values else None
    return out


def rotation_sweep(
    scenes: Sequence[Any],
    angles_deg: Sequence[float],
    evaluator: Callable[[Any, float], float],
) -> list[tuple[float, float]]:
    """Evaluate final-frame PSNR as a function of azimuth rotation.

    ``evaluator(scene, angle)`` returns the last-frame PSNR for one scene;
    each output row is (angle, mean over scenes).
    """
    rows = []
    for angle in angles_deg:
        values = [evaluator(scene, angle) for scene in scenes]
        rows.append((float(angle), float(np.mean(values))))
    return rows


def write_sweep_csv(path, rows: Sequence[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["angle_deg", "psnr_last_frame"])
        for angle, value in rows:
            writer.writerow([f"{angle:g}", f"{value:.6f}"])
