"""CSV formats for observations, trees and score matrices.

Observation matrices: a header of node labels, one row per observation, an
empty cell for a missing value. Floats are written with ``repr`` so they
read back bit for bit.

Trees: ``# root=<label>`` and ``# nodes=<l1;l2;...>`` comment lines, then a
``source,target`` header and one row per edge ``j -> i`` written ``j,i``.

Score matrices: ``# key=value`` metadata lines (kind, alpha, r_low, r_high,
floor), then a labelled square table; forbidden cells are written ``inf``.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .model import ObservationMatrix, RootedTree
from .scores import ScoreMatrix


class FormatError(ValueError):
    """Malformed input file; the message carries the location."""


def _fmt(v: float) -> str:
    return repr(float(v))


def write_observations(data: ObservationMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(data.labels)
        for row, mask in zip(data.values, data.mask):
            w.writerow([_fmt(v) if ok else "" for v, ok in zip(row, mask)])


def read_observations(path) -> ObservationMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError(f"{path}: empty file")
    labels = [s.strip() for s in rows[0]]
    d = len(labels)
    values = np.full((len(rows) - 1, d), np.nan)
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != d:
            raise FormatError(f"{path}:{line}: expected {d} fields, got {len(row)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                continue
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise FormatError(
                    f"{path}:{line}: column {labels[c]!r}: not a number: {cell!r}") from None
    if values.shape[0] == 0:
        raise FormatError(f"{path}: no observation rows")
    return ObservationMatrix.from_array(values, labels)


def tree_to_csv(tree: RootedTree) -> str:
    buf = _io.StringIO()
    buf.write(f"# root={tree.labels[tree.root]}\n")
    buf.write(f"# nodes={';'.join(tree.labels)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target"])
    for j in range(tree.d):
        if tree.child[j] != -1:
            w.writerow([tree.labels[j], tree.labels[tree.child[j]]])
    return buf.getvalue()


def write_tree(tree: RootedTree, path) -> None:
    Path(path).write_text(tree_to_csv(tree))


def read_tree(path, labels=None) -> RootedTree:
    """Read an edge-list tree.

    Node order comes from ``labels`` if given, else from the ``# nodes``
    comment, else from first appearance.
    """
    root = None
    listed = None
    edges = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, value = s[1:].strip().partition("=")
            if key.strip() == "root":
                root = value.strip()
            elif key.strip() == "nodes":
                listed = [v for v in value.strip().split(";") if v]
            continue
        row = next(csv.reader([s]))
        if not header_seen:
            header_seen = True
            if [c.strip() for c in row] == ["source", "target"]:
                continue
        if len(row) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'source,target'")
        edges.append((row[0].strip(), row[1].strip()))
    if root is None:
        raise FormatError(f"{path}: missing '# root=<label>' line")
    if labels is None:
        if listed is not None:
            labels = listed
        else:
            labels = []
            for v in [root] + [v for e in edges for v in e]:
                if v not in labels:
                    labels.append(v)
    labels = list(labels)
    unknown = {v for e in edges for v in e} - set(labels)
    if unknown or root not in labels:
        raise FormatError(f"{path}: labels not in node set: {sorted(unknown | ({root} - set(labels)))}")
    try:
        tree = RootedTree.from_label_edges(edges, labels)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if tree.labels[tree.root] != root:
        raise FormatError(f"{path}: root comment {root!r} disagrees with the edge list")
    return tree


def write_scores(scores: ScoreMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={scores.kind}\n")
        for key in ("alpha", "r_low", "r_high", "floor"):
            if key in scores.params:
                fh.write(f"# {key}={scores.params[key]}\n")
        w = csv.writer(fh)
        w.writerow([""] + list(scores.labels))
        for lab, row in zip(scores.labels, scores.w):
            w.writerow([lab] + [_fmt(v) for v in row])


def read_scores(path) -> ScoreMatrix:
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif line.strip():
                rows.append(next(csv.reader([line])))
    labels = tuple(rows[0][1:])
    w = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    params = {}
    for key in ("alpha", "r_low", "r_high"):
        if key in meta and meta[key] != "None":
            params[key] = float(meta[key])
    if "floor" in meta:
        params["floor"] = int(meta["floor"])
    counts = np.zeros(w.shape, dtype=int)
    return ScoreMatrix(w, counts, meta.get("kind", "qtm"), labels, params)
