"""tsrkit: table-component detections to HTML structure, plus the metrics.

Converts multi-label table-component detections (table, column, row, spanning
cell, projected row header, column header) into logical grids and HTML
sequences, and evaluates corpora with COCO-style average precision and
structure-only tree-edit-distance similarity.
"""

__version__ = "0.1.0"
