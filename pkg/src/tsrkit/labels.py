"""Table-component classes and the pseudo-class label transform.

Ground truth for table structure detection is multi-label: a Projected Row
Header is always also a Row, and a one-row Column Header shares its box with
that Row. The single-label form removes Rows coincident with Projected Row
Headers and folds coincident Row/Column-Header pairs into a seventh pseudo
class, so that no two instances with different classes share a box. The
inverse transform duplicates predictions back into the multi-label form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import LabelConsistencyError, LabelModeError
from .geometry import BBox


class ComponentClass(enum.IntEnum):
    TABLE = 0
    COLUMN = 1
    ROW = 2
    SPANNING_CELL = 3
    PROJECTED_ROW_HEADER = 4
    COLUMN_HEADER = 5
    PSEUDO_HEADER_ROW = 6  # single-label mode only

    @property
    def display_name(self) -> str:
        return self.name.replace("_", " ").title()


# Classes legal in the multi-label formulation.
MULTI_LABEL_CLASSES = tuple(c for c in ComponentClass if c.value <= 5)


class LabelMode(enum.Enum):
    MULTI = "multi"
    SINGLE = "single"


@dataclass(frozen=True)
class ComponentInstance:
    """One detected or annotated table component.

    ``score`` is absent for ground truth. ``content_box`` is the minimum box
    covering the component's content, carried only by synthetic fixtures that
    feed the metric-misalignment experiments.
    """

    box: BBox
    cls: ComponentClass
    score: float | None = None
    content_box: BBox | None = None

    def __post_init__(self):
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"confidence {self.score} outside [0, 1]")


@dataclass(frozen=True)
class AnnotationSet:
    image_id: str
    instances: tuple[ComponentInstance, ...]
    mode: LabelMode = LabelMode.MULTI

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))

    def by_class(self, cls: ComponentClass) -> list[ComponentInstance]:
        return [inst for inst in self.instances if inst.cls == cls]

    def as_pairs(self) -> set[tuple[tuple[float, float, float, float], ComponentClass]]:
        """The (box, class) set; collapses duplicates, which the transforms never emit."""
        return {(inst.box.as_tuple(), inst.cls) for inst in self.instances}


def boxes_match(a: BBox, b: BBox, tolerance: float) -> bool:
    """True when all four coordinates differ by at most ``tolerance`` px."""
    return (
        abs(a.x1 - b.x1) <= tolerance
        and abs(a.y1 - b.y1) <= tolerance
        and abs(a.x2 - b.x2) <= tolerance
        and abs(a.y2 - b.y2) <= tolerance
    )


def _check_single_label_invariants(instances, tolerance: float):
    for i, a in enumerate(instances):
        for b in instances[i + 1 :]:
            if a.cls != b.cls and boxes_match(a.box, b.box, tolerance):
                raise LabelConsistencyError(
                    f"distinct classes {a.cls.name} and {b.cls.name} share box "
                    f"{a.box.as_tuple()} after pseudo-class encoding"
                )


def encode_pseudo(gt: AnnotationSet, box_match_tolerance: float = 1.0) -> AnnotationSet:
    """Multi-label ground truth to the single-label formulation.

    Rules, applied in order:
      1. drop every Row whose box matches a Projected Row Header box;
      2. replace each remaining Row/Column-Header pair with matching boxes by
         a single pseudo-header-row instance at the Row's box.

    A box shared by three or more classes has no sanctioned reading and is
    rejected.
    """
    if gt.mode is LabelMode.SINGLE:
        raise LabelModeError(f"{gt.image_id}: input already in single-label mode")

    tol = box_match_tolerance
    instances = list(gt.instances)

    # Reject box sharing beyond the two sanctioned two-class patterns.
    for i, a in enumerate(instances):
        sharers = {a.cls}
        for j, b in enumerate(instances):
            if i != j and b.cls != a.cls and boxes_match(a.box, b.box, tol):
                sharers.add(b.cls)
        if len(sharers) > 2:
            names = ", ".join(sorted(c.name for c in sharers))
            raise LabelConsistencyError(
                f"{gt.image_id}: box {a.box.as_tuple()} shared by classes {{{names}}}"
            )

    prh_boxes = [inst.box for inst in instances if inst.cls == ComponentClass.PROJECTED_ROW_HEADER]
    consumed_headers: set[int] = set()

    out: list[tuple[int, ComponentInstance]] = []
    for idx, inst in enumerate(instances):
        if inst.cls == ComponentClass.ROW:
            if any(boxes_match(inst.box, p, tol) for p in prh_boxes):
                continue
            header_idx = next(
                (
                    j
                    for j, other in enumerate(instances)
                    if other.cls == ComponentClass.COLUMN_HEADER
                    and j not in consumed_headers
                    and boxes_match(inst.box, other.box, tol)
                ),
                None,
            )
            if header_idx is not None:
                consumed_headers.add(header_idx)
                out.append((idx, replace(inst, cls=ComponentClass.PSEUDO_HEADER_ROW)))
                continue
        out.append((idx, inst))

    result = [inst for idx, inst in out if idx not in consumed_headers]
    _check_single_label_invariants(result, tol)
    return AnnotationSet(gt.image_id, tuple(result), LabelMode.SINGLE)


def decode_pseudo(pred: AnnotationSet) -> AnnotationSet:
    """Single-label predictions back to the multi-label formulation.

    Each projected row header is duplicated once into a Row at the same box
    and confidence; each pseudo header row is replaced by a Row plus a Column
    Header at its box and confidence.
    """
    if pred.mode is not LabelMode.SINGLE:
        raise LabelModeError(f"{pred.image_id}: input not in single-label mode")

    out: list[ComponentInstance] = []
    for inst in pred.instances:
        if inst.cls == ComponentClass.PROJECTED_ROW_HEADER:
            out.append(inst)
            out.append(replace(inst, cls=ComponentClass.ROW))
        elif inst.cls == ComponentClass.PSEUDO_HEADER_ROW:
            out.append(replace(inst, cls=ComponentClass.ROW))
            out.append(replace(inst, cls=ComponentClass.COLUMN_HEADER))
        else:
            out.append(inst)
    return AnnotationSet(pred.image_id, tuple(out), LabelMode.MULTI)
