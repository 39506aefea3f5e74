"""Detection metrics: per-class AP over IoU thresholds plus size-bucketed APs.

Average precision uses the 101-point interpolation with the right-max
precision envelope. Matching is per image and per class: predictions sorted
by descending confidence greedily claim the unmatched ground truth with the
highest IoU at or above the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CorpusError
from .geometry import SizeBucket, classify_size, iou
from .labels import ComponentClass, ComponentInstance

DEFAULT_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_RECALL_LEVELS = tuple(i / 100.0 for i in range(101))


@dataclass(frozen=True)
class MatchConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    recall_levels: tuple[float, ...] = DEFAULT_RECALL_LEVELS
    max_detections_per_image: int = 300

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.iou_thresholds, self.iou_thresholds[1:])):
            raise ValueError("iou_thresholds must be strictly increasing")
        if self.max_detections_per_image < 1:
            raise ValueError("max_detections_per_image must be positive")


@dataclass(frozen=True)
class ApReport:
    mean_ap: float | None
    ap50: float | None
    ap75: float | None
    ap_small: float | None
    ap_medium: float | None
    ap_large: float | None
    per_class: dict[ComponentClass, float] = field(default_factory=dict)

    def format_lines(self) -> list[str]:
        def fmt(value):
            return "n/a" if value is None else f"{value:.4f}"

        lines = [
            f"AP = {fmt(self.mean_ap)}",
            f"AP50 = {fmt(self.ap50)}",
            f"AP75 = {fmt(self.ap75)}",
            f"APs = {fmt(self.ap_small)}",
            f"APm = {fmt(self.ap_medium)}",
            f"APl = {fmt(self.ap_large)}",
        ]
        for cls in sorted(self.per_class):
            lines.append(f"AP[{cls.display_name}] = {fmt(self.per_class[cls])}")
        return lines


def _sort_by_confidence(preds: list[ComponentInstance]) -> list[ComponentInstance]:
    for p in preds:
        if p.score is None:
            raise ValueError("prediction without confidence")
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    return [preds[i] for i in order]


def _greedy_match(iou_rows: list[list[float]], threshold: float) -> list[bool]:
    """Greedy TP/FP labels from a per-prediction IoU matrix (rows ordered by confidence)."""
    n_gt = len(iou_rows[0]) if iou_rows else 0
    matched = [False] * n_gt
    labels: list[bool] = []
    for row in iou_rows:
        best_iou = 0.0
        best_idx = -1
        for g in range(n_gt):
            if matched[g]:
                continue
            if row[g] >= threshold and row[g] > best_iou:
                best_iou = row[g]
                best_idx = g
        if best_idx >= 0:
            matched[best_idx] = True
            labels.append(True)
        else:
            labels.append(False)
    return labels


def match_detections(
    preds: list[ComponentInstance],
    gts: list[ComponentInstance],
    iou_threshold: float,
) -> list[bool]:
    """TP/FP labels in descending-confidence order (single class, single image).

    Each ground truth matches at most one prediction; confidence ties keep
    input order, IoU ties go to the lowest ground-truth index.
    """
    ordered = _sort_by_confidence(preds)
    rows = [[iou(p.box, g.box) for g in gts] for p in ordered]
    return _greedy_match(rows, iou_threshold)


def average_precision(
    tp_fp_sequence: list[bool],
    n_ground_truth: int,
    recall_levels: tuple[float, ...] = DEFAULT_RECALL_LEVELS,
) -> float:
    """101-point interpolated AP from a confidence-ordered TP/FP sequence."""
    if n_ground_truth < 0:
        raise ValueError("negative ground-truth count")
    if n_ground_truth == 0:
        return 0.0
    recalls: list[float] = []
    precisions: list[float] = []
    tp = 0
    for k, is_tp in enumerate(tp_fp_sequence, start=1):
        tp += int(is_tp)
        recalls.append(tp / n_ground_truth)
        precisions.append(tp / k)
    # right-max envelope: precision at recall r is the best achievable beyond r
    for k in range(len(precisions) - 2, -1, -1):
        precisions[k] = max(precisions[k], precisions[k + 1])
    total = 0.0
    for level in recall_levels:
        idx = _first_index_at_least(recalls, level)
        if idx is not None:
            total += precisions[idx]
    return total / len(recall_levels)


def _first_index_at_least(sorted_values: list[float], threshold: float) -> int | None:
    lo, hi = 0, len(sorted_values)
    while lo < hi:
        mid = (lo + hi) // 2
        if sorted_values[mid] < threshold:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo < len(sorted_values) else None


class _ClassEvalData:
    """Per-image confidence-ordered IoU matrices for one class and size bucket."""

    def __init__(self, preds_by_image, gts_by_image, cls, cfg, bucket):
        self.images = []  # (scores, iou_rows) per image
        self.n_gt = 0
        for image_id in sorted(gts_by_image):
            gts = [g for g in gts_by_image[image_id] if g.cls == cls]
            preds = [p for p in preds_by_image.get(image_id, []) if p.cls == cls]
            if bucket is not None:
                gts = [g for g in gts if classify_size(g.box) == bucket]
                preds = [p for p in preds if classify_size(p.box) == bucket]
            preds = _sort_by_confidence(preds)[: cfg.max_detections_per_image]
            self.n_gt += len(gts)
            rows = [[iou(p.box, g.box) for g in gts] for p in preds]
            self.images.append(([p.score for p in preds], rows))
        self.n_preds = sum(len(scores) for scores, _ in self.images)

    @property
    def empty(self) -> bool:
        return self.n_gt == 0 and self.n_preds == 0

    def ap_at(self, threshold: float, recall_levels) -> float:
        scored: list[tuple[float, bool]] = []
        for scores, rows in self.images:
            labels = _greedy_match(rows, threshold)
            scored.extend(zip(scores, labels))
        scored.sort(key=lambda pair: -pair[0])
        return average_precision([tp for _, tp in scored], self.n_gt, recall_levels)


def evaluate_corpus(
    preds_by_image: dict,
    gts_by_image: dict,
    cfg: MatchConfig | None = None,
) -> ApReport:
    """Aggregate AP metrics over a corpus of per-image instance lists.

    Classes with no ground truth and no predictions anywhere are excluded
    from every mean; a size bucket nothing falls into reports None.
    """
    cfg = cfg or MatchConfig()
    missing = set(preds_by_image) - set(gts_by_image)
    if missing:
        raise CorpusError(
            f"predictions for images absent from ground truth: {sorted(missing)[:5]}"
        )

    classes = sorted(
        {i.cls for insts in gts_by_image.values() for i in insts}
        | {i.cls for insts in preds_by_image.values() for i in insts}
    )

    def bucket_mean(bucket: SizeBucket | None, thresholds) -> float | None:
        class_aps = []
        for cls in classes:
            data = _ClassEvalData(preds_by_image, gts_by_image, cls, cfg, bucket)
            if data.empty:
                continue
            aps = [data.ap_at(t, cfg.recall_levels) for t in thresholds]
            class_aps.append(sum(aps) / len(aps))
        if not class_aps:
            return None
        return sum(class_aps) / len(class_aps)

    per_class: dict[ComponentClass, float] = {}
    mean_ap_acc = []
    ap50_acc = []
    ap75_acc = []
    for cls in classes:
        data = _ClassEvalData(preds_by_image, gts_by_image, cls, cfg, None)
        if data.empty:
            continue
        aps = [data.ap_at(t, cfg.recall_levels) for t in cfg.iou_thresholds]
        per_class[cls] = sum(aps) / len(aps)
        mean_ap_acc.append(per_class[cls])
        ap50_acc.append(data.ap_at(0.5, cfg.recall_levels))
        ap75_acc.append(data.ap_at(0.75, cfg.recall_levels))

    def mean_or_none(values):
        return sum(values) / len(values) if values else None

    return ApReport(
        mean_ap=mean_or_none(mean_ap_acc),
        ap50=mean_or_none(ap50_acc),
        ap75=mean_or_none(ap75_acc),
        ap_small=bucket_mean(SizeBucket.SMALL, cfg.iou_thresholds),
        ap_medium=bucket_mean(SizeBucket.MEDIUM, cfg.iou_thresholds),
        ap_large=bucket_mean(SizeBucket.LARGE, cfg.iou_thresholds),
        per_class=per_class,
    )
