"""Rule-based post-processing: detected components to a logical grid to HTML.

The lattice comes from Row and Column boxes (rows sorted by top edge, columns
by left edge). Spanning Cells absorb grid cells they overlap sufficiently and
the absorbed set is rectangularized. Column Header boxes mark header rows by
row-center containment; a Projected Row Header collapses its matching row
into one full-width cell. The HTML output is structure-only: lowercase tags,
double-quoted span attributes, no whitespace, no text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyStructureError, LabelModeError
from .geometry import BBox, intersection_area, iou
from .labels import AnnotationSet, ComponentClass, ComponentInstance, LabelMode, boxes_match


@dataclass(frozen=True)
class MergedCell:
    row_start: int
    col_start: int
    row_span: int
    col_span: int

    def __post_init__(self):
        if self.row_span < 1 or self.col_span < 1:
            raise ValueError(f"merge spans must be >= 1: {self}")

    @property
    def rows(self) -> range:
        return range(self.row_start, self.row_start + self.row_span)

    @property
    def cols(self) -> range:
        return range(self.col_start, self.col_start + self.col_span)


@dataclass(frozen=True)
class TableGrid:
    """Logical r x c lattice with merges, header rows, and projected rows."""

    n_rows: int
    n_cols: int
    merges: tuple[MergedCell, ...] = ()
    header_rows: frozenset[int] = frozenset()
    projected_rows: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "merges", tuple(self.merges))
        object.__setattr__(self, "header_rows", frozenset(self.header_rows))
        object.__setattr__(self, "projected_rows", frozenset(self.projected_rows))
        self._validate()

    def _validate(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("grid needs at least one row and one column")
        for r in self.header_rows | self.projected_rows:
            if not 0 <= r < self.n_rows:
                raise ValueError(f"row index {r} outside grid")
        owner = [[None] * self.n_cols for _ in range(self.n_rows)]
        for r in self.projected_rows:
            for c in range(self.n_cols):
                owner[r][c] = ("projected", r)
        for m in self.merges:
            if m.row_start + m.row_span > self.n_rows or m.col_start + m.col_span > self.n_cols:
                raise ValueError(f"merge {m} exceeds grid bounds")
            header_overlap = [r in self.header_rows for r in m.rows]
            if any(header_overlap) and not all(header_overlap):
                raise ValueError(f"merge {m} crosses the header/body boundary")
            for r in m.rows:
                for c in m.cols:
                    if owner[r][c] is not None:
                        raise ValueError(f"cell ({r},{c}) claimed twice")
                    owner[r][c] = ("merge", m)

    def cell_matrix(self) -> list[list[tuple[int, int]]]:
        """Anchor (row, col) of the logical cell owning each grid position."""
        anchors = [[(r, c) for c in range(self.n_cols)] for r in range(self.n_rows)]
        for r in self.projected_rows:
            anchors[r] = [(r, 0)] * self.n_cols
        for m in self.merges:
            for r in m.rows:
                for c in m.cols:
                    anchors[r][c] = (m.row_start, m.col_start)
        return anchors

    def logical_cells(self) -> list[tuple[int, int, int, int]]:
        """(row, col, row_span, col_span) per logical cell, reading order."""
        cells = []
        matrix = self.cell_matrix()
        merge_at = {(m.row_start, m.col_start): m for m in self.merges}
        for r in range(self.n_rows):
            if r in self.projected_rows:
                cells.append((r, 0, 1, self.n_cols))
                continue
            for c in range(self.n_cols):
                if matrix[r][c] != (r, c):
                    continue
                m = merge_at.get((r, c))
                if m is None:
                    cells.append((r, c, 1, 1))
                else:
                    cells.append((r, c, m.row_span, m.col_span))
        return cells


@dataclass(frozen=True)
class ReconstructionConfig:
    score_thresholds: Mapping[ComponentClass, float] | float = 0.5
    span_overlap_threshold: float = 0.5
    nms_iou: float = 0.5
    box_match_tolerance: float = 1.0

    def threshold_for(self, cls: ComponentClass) -> float:
        if isinstance(self.score_thresholds, Mapping):
            return self.score_thresholds.get(cls, 0.5)
        return self.score_thresholds


def _canonical_order(instances: Iterable[ComponentInstance]) -> list[ComponentInstance]:
    return sorted(
        instances,
        key=lambda inst: (
            int(inst.cls),
            -(inst.score if inst.score is not None else 1.0),
            inst.box.as_tuple(),
        ),
    )


def _greedy_nms(instances: list[ComponentInstance], threshold: float) -> list[ComponentInstance]:
    kept: list[ComponentInstance] = []
    for inst in instances:
        if all(iou(inst.box, k.box) < threshold for k in kept):
            kept.append(inst)
    return kept


def build_grid(detections: AnnotationSet, cfg: ReconstructionConfig | None = None) -> TableGrid:
    """Assemble the logical grid from multi-label component detections.

    Pipeline: per-class score thresholds, class-wise greedy NMS, clipping of
    rows/columns to the Table box when one survives, then lattice assembly.
    """
    cfg = cfg or ReconstructionConfig()
    if detections.mode is not LabelMode.MULTI:
        raise LabelModeError(
            f"{detections.image_id}: build_grid expects multi-label detections "
            "(apply decode_pseudo first)"
        )

    survivors = [
        inst
        for inst in _canonical_order(detections.instances)
        if inst.score is None or inst.score >= cfg.threshold_for(inst.cls)
    ]
    by_class: dict[ComponentClass, list[ComponentInstance]] = {}
    for cls in ComponentClass:
        by_class[cls] = _greedy_nms(
            [i for i in survivors if i.cls == cls], cfg.nms_iou
        )

    table_box = by_class[ComponentClass.TABLE][0].box if by_class[ComponentClass.TABLE] else None

    def clipped(instances):
        if table_box is None:
            return [i.box for i in instances]
        boxes = []
        for inst in instances:
            inter = inst.box.intersect(table_box)
            if inter is not None and inter.area > 0.0:
                boxes.append(inter)
        return boxes

    row_boxes = sorted(clipped(by_class[ComponentClass.ROW]), key=lambda b: (b.y1, b.x1))
    col_boxes = sorted(clipped(by_class[ComponentClass.COLUMN]), key=lambda b: (b.x1, b.y1))
    if not row_boxes or not col_boxes:
        raise EmptyStructureError(
            f"{detections.image_id}: {len(row_boxes)} rows and {len(col_boxes)} columns "
            "survive thresholding"
        )
    n_rows, n_cols = len(row_boxes), len(col_boxes)

    projected_rows: set[int] = set()
    for prh in by_class[ComponentClass.PROJECTED_ROW_HEADER]:
        for r, row in enumerate(row_boxes):
            if boxes_match(row, prh.box, cfg.box_match_tolerance):
                projected_rows.add(r)

    header_rows: set[int] = set()
    for r, row in enumerate(row_boxes):
        cx, cy = row.center
        if any(h.box.contains_point(cx, cy) for h in by_class[ComponentClass.COLUMN_HEADER]):
            header_rows.add(r)

    def cell_box(r: int, c: int) -> BBox | None:
        return row_boxes[r].intersect(col_boxes[c])

    merges: list[MergedCell] = []
    taken = [[r in projected_rows for _ in range(n_cols)] for r in range(n_rows)]
    for span in by_class[ComponentClass.SPANNING_CELL]:
        covered = []
        for r in range(n_rows):
            for c in range(n_cols):
                cell = cell_box(r, c)
                if cell is None or cell.area <= 0.0:
                    continue
                if intersection_area(span.box, cell) / cell.area >= cfg.span_overlap_threshold:
                    covered.append((r, c))
        if not covered:
            continue
        r0 = min(r for r, _ in covered)
        r1 = max(r for r, _ in covered)
        c0 = min(c for _, c in covered)
        c1 = max(c for _, c in covered)
        if r0 == r1 and c0 == c1:
            continue
        in_header = [r in header_rows for r in range(r0, r1 + 1)]
        if any(in_header) and not all(in_header):
            continue
        if any(taken[r][c] for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)):
            continue
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                taken[r][c] = True
        merges.append(MergedCell(r0, c0, r1 - r0 + 1, c1 - c0 + 1))

    return TableGrid(
        n_rows=n_rows,
        n_cols=n_cols,
        merges=tuple(merges),
        header_rows=frozenset(header_rows),
        projected_rows=frozenset(projected_rows),
    )


def _emit_row(grid: TableGrid, r: int, matrix, merge_at) -> str:
    if r in grid.projected_rows:
        span_attr = f' colspan="{grid.n_cols}"' if grid.n_cols > 1 else ""
        return f"<tr><td{span_attr}></td></tr>"
    cells = []
    for c in range(grid.n_cols):
        if matrix[r][c] != (r, c):
            continue
        m = merge_at.get((r, c))
        attrs = ""
        if m is not None:
            if m.col_span != 1:
                attrs += f' colspan="{m.col_span}"'
            if m.row_span != 1:
                attrs += f' rowspan="{m.row_span}"'
        cells.append(f"<td{attrs}></td>")
    return "<tr>" + "".join(cells) + "</tr>"


def grid_to_html(grid: TableGrid) -> str:
    """Structure-only HTML: thead holds exactly the header rows, tbody the rest."""
    matrix = grid.cell_matrix()
    merge_at = {(m.row_start, m.col_start): m for m in grid.merges}
    header = [r for r in range(grid.n_rows) if r in grid.header_rows]
    body = [r for r in range(grid.n_rows) if r not in grid.header_rows]
    parts = ["<table>"]
    if header:
        parts.append("<thead>")
        parts.extend(_emit_row(grid, r, matrix, merge_at) for r in header)
        parts.append("</thead>")
    parts.append("<tbody>")
    parts.extend(_emit_row(grid, r, matrix, merge_at) for r in body)
    parts.append("</tbody>")
    parts.append("</table>")
    return "".join(parts)


def classify_complexity(grid: TableGrid) -> str:
    """'complex' when merges exist or a projected row spans multiple columns."""
    if grid.merges or (grid.projected_rows and grid.n_cols > 1):
        return "complex"
    return "simple"
