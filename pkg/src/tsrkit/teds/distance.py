"""Tree-edit-distance similarity over table structure trees.

The distance kernel exists twice: a compiled Cython extension for corpus
scoring (the DP dominates evaluation runtime) and a pure-Python fallback
with the same recurrence. Selection happens at import; set TSRKIT_PURE_PYTHON=1
to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import CorpusError, HtmlParseError
from . import _ted_py
from .tree import TableTree, parse_table_html

try:
    from . import _speedup
except ImportError:
    _speedup = None


def backend_name() -> str:
    """Which distance kernel is active: 'compiled' or 'python'."""
    if _speedup is not None and not os.environ.get("TSRKIT_PURE_PYTHON"):
        return "compiled"
    return "python"


@dataclass(frozen=True)
class EditCosts:
    """Unit-cost model of the structure-only similarity.

    Renaming is free between nodes with equal tags (and, for cells, equal
    colspan and rowspan) and costs ``rename_mismatch_cost`` otherwise.
    """

    insert_cost: float = 1.0
    delete_cost: float = 1.0
    rename_mismatch_cost: float = 1.0

    def rename_cost(self, u: TableTree, v: TableTree) -> float:
        if _label_key(u) == _label_key(v):
            return 0.0
        return self.rename_mismatch_cost


def _label_key(node: TableTree):
    if node.tag == "td":
        return ("td", node.colspan, node.rowspan)
    return (node.tag,)


def _flatten(root: TableTree, interner: dict):
    """Postorder arrays: leftmost-leaf-descendant index, label id, keyroots."""
    lmld: list[int] = []
    labels: list[int] = []

    def visit(node: TableTree) -> int:
        first_child_lml = -1
        for child_index, child in enumerate(node.children):
            ci = visit(child)
            if child_index == 0:
                first_child_lml = lmld[ci]
        idx = len(labels)
        labels.append(interner.setdefault(_label_key(node), len(interner)))
        lmld.append(first_child_lml if node.children else idx)
        return idx

    visit(root)
    last_for_lml: dict[int, int] = {}
    for i, value in enumerate(lmld):
        last_for_lml[value] = i
    keyroots = sorted(last_for_lml.values())
    return lmld, labels, keyroots


def tree_edit_distance(
    a: TableTree, b: TableTree, costs: EditCosts | None = None
) -> float:
    """Minimal edit cost transforming ``a`` into ``b`` (ordered-tree semantics)."""
    costs = costs or EditCosts()
    interner: dict = {}
    lmld1, labels1, keyroots1 = _flatten(a, interner)
    lmld2, labels2, keyroots2 = _flatten(b, interner)

    if backend_name() == "compiled":
        def as_arr(seq):
            return np.ascontiguousarray(seq, dtype=np.int64)

        return _speedup.tree_distance(
            as_arr(lmld1),
            as_arr(labels1),
            as_arr(keyroots1),
            as_arr(lmld2),
            as_arr(labels2),
            as_arr(keyroots2),
            costs.insert_cost,
            costs.delete_cost,
            costs.rename_mismatch_cost,
        )
    return _ted_py.tree_distance(
        lmld1,
        labels1,
        keyroots1,
        lmld2,
        labels2,
        keyroots2,
        costs.insert_cost,
        costs.delete_cost,
        costs.rename_mismatch_cost,
    )


def teds(a: TableTree, b: TableTree, costs: EditCosts | None = None) -> float:
    """Similarity 1 - distance / max(|a|, |b|), clamped into [0, 1].

    Two empty operands (degenerate construction only) score 1.0.
    """
    size = max(a.size(), b.size())
    if size == 0:
        return 1.0
    value = 1.0 - tree_edit_distance(a, b, costs) / size
    return min(1.0, max(0.0, value))


def tree_is_complex(t: TableTree) -> bool:
    """A table is complex when any cell spans multiple rows or columns."""
    return any(
        node.tag == "td" and (node.colspan > 1 or node.rowspan > 1)
        for node in t.iter_postorder()
    )


@dataclass(frozen=True)
class PairScore:
    index: int
    score: float
    complex: bool
    prediction_error: str | None = None


@dataclass(frozen=True)
class CorpusTedsReport:
    simple_mean: float | None
    complex_mean: float | None
    overall_mean: float | None
    pairs: tuple[PairScore, ...]

    def format_lines(self) -> list[str]:
        def fmt(value):
            return "n/a" if value is None else f"{value:.4f}"

        return [
            f"TEDS simple = {fmt(self.simple_mean)}",
            f"TEDS complex = {fmt(self.complex_mean)}",
            f"TEDS overall = {fmt(self.overall_mean)}",
        ]


def corpus_teds(pairs) -> CorpusTedsReport:
    """Score (predicted html, ground-truth html) pairs and aggregate.

    Complexity is classified from the ground-truth tree. Predictions that
    fail to parse score 0 for their pair; an unparsable ground truth aborts
    the whole corpus.
    """
    scores: list[PairScore] = []
    for index, (pred_html, gt_html) in enumerate(pairs):
        try:
            gt_tree = parse_table_html(gt_html)
        except HtmlParseError as exc:
            raise CorpusError(f"ground truth of pair {index} unparsable: {exc}") from exc
        is_complex = tree_is_complex(gt_tree)
        try:
            pred_tree = parse_table_html(pred_html)
        except HtmlParseError as exc:
            scores.append(PairScore(index, 0.0, is_complex, str(exc)))
            continue
        scores.append(PairScore(index, teds(pred_tree, gt_tree), is_complex))

    def mean_of(values):
        values = list(values)
        if not values:
            return None
        return sum(values) / len(values)

    return CorpusTedsReport(
        simple_mean=mean_of(p.score for p in scores if not p.complex),
        complex_mean=mean_of(p.score for p in scores if p.complex),
        overall_mean=mean_of(p.score for p in scores),
        pairs=tuple(scores),
    )
