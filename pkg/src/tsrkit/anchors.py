"""Dataset shape statistics and sliding-anchor generation/coverage analysis.

Table components are extreme in aspect ratio compared with common objects
(rows and columns routinely exceed height/width ratios of 10), so the anchor
ratio list matters. Ratios below 1 fold onto their multiplicative inverse for
histogramming. Coverage quantifies how well a ratio list serves a corpus:
the fraction of ground-truth boxes whose best anchor IoU clears 0.5 / 0.7.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox
from .labels import AnnotationSet

# Height/width ratios used by the extreme-aspect table-component anchor setup.
TABLE_ASPECT_RATIOS = (
    0.0125, 0.025, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16, 40, 80,
)
# Common-object default shipped by the popular detection frameworks.
DEFAULT_ASPECT_RATIOS = (0.5, 1.0, 2.0)

HISTOGRAM_TOP_BUCKET = 140


@dataclass(frozen=True)
class DatasetStats:
    n_images: int
    n_objects: int
    avg_objects_per_image: float
    folded_aspect_ratio_histogram: dict[int, int] = field(default_factory=dict)

    def format_lines(self) -> list[str]:
        return [
            f"images = {self.n_images}",
            f"objects = {self.n_objects}",
            f"objects/image = {self.avg_objects_per_image:.2f}",
        ]


def fold_ratio(r: float) -> float:
    """Map a ratio onto [1, inf): values below 1 count as their inverse."""
    if r <= 0.0:
        raise ValueError(f"ratio must be positive, got {r}")
    return max(r, 1.0 / r)


def dataset_stats(annotations: list[AnnotationSet]) -> DatasetStats:
    """Counts, objects per image, and the folded aspect-ratio histogram.

    Boxes with zero width or height have no ratio and are skipped by the
    histogram only.
    """
    if not annotations:
        raise ValueError("no images")
    n_images = len(annotations)
    n_objects = 0
    histogram: dict[int, int] = {}
    for ann in annotations:
        n_objects += len(ann.instances)
        for inst in ann.instances:
            if inst.box.width <= 0.0 or inst.box.height <= 0.0:
                continue
            folded = fold_ratio(inst.box.height / inst.box.width)
            bucket = min(int(folded), HISTOGRAM_TOP_BUCKET)
            histogram[bucket] = histogram.get(bucket, 0) + 1
    return DatasetStats(
        n_images=n_images,
        n_objects=n_objects,
        avg_objects_per_image=n_objects / n_images,
        folded_aspect_ratio_histogram=dict(sorted(histogram.items())),
    )


@dataclass(frozen=True)
class AnchorConfig:
    """Sliding-anchor parameters: one scale (side at ratio 1) per pyramid level."""

    aspect_ratios: tuple[float, ...] = TABLE_ASPECT_RATIOS
    strides: tuple[int, ...] = (4, 8, 16, 32, 64)
    scales: tuple[float, ...] | None = None  # default 8 * stride per level

    def __post_init__(self):
        if any(r <= 0 for r in self.aspect_ratios):
            raise ValueError("aspect ratios must be positive")
        if list(self.aspect_ratios) != sorted(self.aspect_ratios):
            raise ValueError("aspect ratios must be sorted ascending")
        if self.scales is not None and len(self.scales) != len(self.strides):
            raise ValueError("need one scale per stride level")

    def level_scales(self) -> tuple[float, ...]:
        if self.scales is not None:
            return self.scales
        return tuple(8.0 * s for s in self.strides)


def generate_anchors(
    cfg: AnchorConfig, feature_map_sizes: list[tuple[int, int]]
) -> np.ndarray:
    """All anchors for the given per-level (height, width) feature map sizes.

    Anchor at grid position (i, j) of a level with stride s is centered at
    ((j + 0.5) s, (i + 0.5) s); a ratio rho and scale side a give width
    a / sqrt(rho) and height a * sqrt(rho). Returns an (N, 4) float array of
    (x1, y1, x2, y2) rows.
    """
    if len(feature_map_sizes) != len(cfg.strides):
        raise ValueError("need one feature map size per stride level")
    ratios = np.asarray(cfg.aspect_ratios, dtype=np.float64)
    half_w = 0.5 / np.sqrt(ratios)
    half_h = 0.5 * np.sqrt(ratios)
    out = []
    for (height, width), stride, scale in zip(
        feature_map_sizes, cfg.strides, cfg.level_scales()
    ):
        ys = (np.arange(height) + 0.5) * stride
        xs = (np.arange(width) + 0.5) * stride
        cx, cy = np.meshgrid(xs, ys)
        cx = cx.reshape(-1, 1)
        cy = cy.reshape(-1, 1)
        w = scale * half_w
        h = scale * half_h
        boxes = np.stack(
            [
                np.broadcast_to(cx - w, (cx.shape[0], len(ratios))),
                np.broadcast_to(cy - h, (cx.shape[0], len(ratios))),
                np.broadcast_to(cx + w, (cx.shape[0], len(ratios))),
                np.broadcast_to(cy + h, (cx.shape[0], len(ratios))),
            ],
            axis=-1,
        )
        out.append(boxes.reshape(-1, 4))
    return np.concatenate(out, axis=0)


@dataclass(frozen=True)
class CoverageReport:
    frac_iou50: float
    frac_iou70: float
    mean_best_iou: float

    def format_lines(self) -> list[str]:
        return [
            f"fraction best IoU >= 0.5 = {self.frac_iou50:.4f}",
            f"fraction best IoU >= 0.7 = {self.frac_iou70:.4f}",
            f"mean best IoU = {self.mean_best_iou:.4f}",
        ]


def _as_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        arr = np.asarray(boxes, dtype=np.float64)
    else:
        arr = np.asarray([b.as_tuple() if isinstance(b, BBox) else b for b in boxes], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(f"expected (N, 4) boxes, got shape {arr.shape}")
    return arr


def best_iou_per_gt(anchors, gts) -> np.ndarray:
    """Maximum IoU over all anchors, per ground-truth box."""
    anchor_arr = _as_array(anchors)
    gt_arr = _as_array(gts)
    if anchor_arr.shape[0] == 0:
        raise ValueError("empty anchor list")
    anchor_area = (anchor_arr[:, 2] - anchor_arr[:, 0]) * (anchor_arr[:, 3] - anchor_arr[:, 1])
    best = np.zeros(gt_arr.shape[0])
    for i, gt in enumerate(gt_arr):
        iw = np.minimum(anchor_arr[:, 2], gt[2]) - np.maximum(anchor_arr[:, 0], gt[0])
        ih = np.minimum(anchor_arr[:, 3], gt[3]) - np.maximum(anchor_arr[:, 1], gt[1])
        inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
        gt_area = (gt[2] - gt[0]) * (gt[3] - gt[1])
        union = anchor_area + gt_area - inter
        with np.errstate(divide="ignore", invalid="ignore"):
            ious = np.where(union > 0.0, inter / union, 0.0)
        best[i] = ious.max()
    return best


def anchor_coverage(anchors, gts) -> CoverageReport:
    """Coverage statistics of a ground-truth corpus under an anchor set."""
    best = best_iou_per_gt(anchors, gts)
    if best.size == 0:
        raise ValueError("empty ground-truth list")
    return CoverageReport(
        frac_iou50=float((best >= 0.5).mean()),
        frac_iou70=float((best >= 0.7).mean()),
        mean_best_iou=float(best.mean()),
    )
