"""Dataset loaders, the attributed SBM generator, and result serialization."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import Partition
from .errors import DatasetParseError, StructuralError
from .filters import FilterCoefficients, filter_response
from .graph import AttributedGraph
from .metrics import MetricReport
from .pipeline import IterationRecord, RunResult

log = logging.getLogger(__name__)


def _labels_by_first_appearance(raw):
    index = {}
    labels = np.array([index.setdefault(x, len(index)) for x in raw], dtype=np.int64)
    return labels, list(index)


def _read_lines(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetParseError(path, None, f"cannot read file: {exc}") from exc
    return [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]


def load_content_cites(content_path, cites_path, normalize_rows: bool = False) -> AttributedGraph:
    """Load a citation network in the ``.content`` / ``.cites`` layout.

    ``content``: ``<id>\\t<f_1>...\\t<f_p>\\t<label>`` per node.
    ``cites``: ``<cited_id>\\t<citing_id>`` per edge. Citations naming ids
    absent from the content file are skipped; their count is stored in
    ``graph.info["skipped_citations"]``.
    """
    lines = _read_lines(content_path)
    if not lines:
        raise DatasetParseError(content_path, None, "empty content file")
    ids, feats, raw_labels = [], [], []
    width = None
    seen = {}
    for lineno, line in lines:
        parts = line.rstrip("\n").split("\t") if "\t" in line else line.split()
        if width is None:
            width = len(parts)
            if width < 3:
                raise DatasetParseError(content_path, lineno, "expected id, features and label")
        if len(parts) != width:
            raise DatasetParseError(
                content_path, lineno, f"expected {width} columns, got {len(parts)}"
            )
        node = parts[0].strip()
        if node in seen:
            raise DatasetParseError(content_path, lineno, f"duplicate node id {node!r}")
        seen[node] = len(ids)
        try:
            feats.append([float(x) for x in parts[1:-1]])
        except ValueError as exc:
            raise DatasetParseError(content_path, lineno, f"non-numeric feature: {exc}") from exc
        ids.append(node)
        raw_labels.append(parts[-1].strip())

    edges = []
    skipped = 0
    for lineno, line in _read_lines(cites_path):
        parts = line.split()
        if len(parts) != 2:
            raise DatasetParseError(cites_path, lineno, f"expected 2 columns, got {len(parts)}")
        a, b = seen.get(parts[0]), seen.get(parts[1])
        if a is None or b is None:
            skipped += 1
            continue
        edges.append((a, b))
    if skipped:
        log.warning("%s: skipped %d citations with unknown ids", cites_path, skipped)

    attrs = np.asarray(feats, dtype=np.float64)
    if normalize_rows:
        attrs = _row_normalize(attrs)
    labels, classes = _labels_by_first_appearance(raw_labels)
    return AttributedGraph.from_edges(
        len(ids), edges, attrs, labels=labels, node_ids=ids,
        info={"skipped_citations": skipped, "classes": classes},
    )


def _row_normalize(attrs):
    norms = np.linalg.norm(attrs, axis=1, keepdims=True)
    return attrs / np.where(norms > 0, norms, 1.0)


def load_csv_dataset(nodes_path, edges_path, normalize_rows: bool = False) -> AttributedGraph:
    """Load ``nodes.csv`` (``id[,label],f1..fp``) and ``edges.csv`` (``src,dst[,weight]``)."""
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    try:
        with nodes_path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DatasetParseError(nodes_path, None, f"cannot read file: {exc}") from exc
    if not rows:
        raise DatasetParseError(nodes_path, None, "empty node file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id":
        raise DatasetParseError(nodes_path, 1, "header must start with 'id'")
    has_label = len(header) > 1 and header[1] == "label"
    first_feat = 2 if has_label else 1
    ids, feats, raw_labels, index = [], [], [], {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetParseError(
                nodes_path, lineno, f"ragged row: expected {len(header)} fields, got {len(row)}"
            )
        node = row[0].strip()
        if node in index:
            raise DatasetParseError(nodes_path, lineno, f"duplicate node id {node!r}")
        index[node] = len(ids)
        ids.append(node)
        if has_label:
            raw_labels.append(row[1].strip())
        try:
            feats.append([float(x) for x in row[first_feat:]])
        except ValueError as exc:
            raise DatasetParseError(nodes_path, lineno, f"non-numeric feature: {exc}") from exc
    if not ids:
        raise DatasetParseError(nodes_path, None, "no nodes")

    try:
        with edges_path.open(newline="", encoding="utf-8") as fh:
            erows = list(csv.reader(fh))
    except OSError as exc:
        raise DatasetParseError(edges_path, None, f"cannot read file: {exc}") from exc
    eheader = [h.strip() for h in erows[0]] if erows else []
    if eheader[:2] != ["src", "dst"]:
        raise DatasetParseError(edges_path, 1, "header must be 'src,dst[,weight]'")
    weighted = len(eheader) > 2 and eheader[2] == "weight"
    edges, weights = [], []
    for lineno, row in enumerate(erows[1:], start=2):
        if not row:
            continue
        if len(row) != len(eheader):
            raise DatasetParseError(edges_path, lineno, "ragged row")
        src, dst = row[0].strip(), row[1].strip()
        for end in (src, dst):
            if end not in index:
                raise DatasetParseError(edges_path, lineno, f"unknown node id {end!r}")
        edges.append((index[src], index[dst]))
        if weighted:
            try:
                weights.append(float(row[2]))
            except ValueError as exc:
                raise DatasetParseError(edges_path, lineno, f"bad weight: {exc}") from exc

    attrs = np.asarray(feats, dtype=np.float64).reshape(len(ids), -1)
    if normalize_rows:
        attrs = _row_normalize(attrs)
    labels = None
    info = {}
    if has_label:
        labels, info["classes"] = _labels_by_first_appearance(raw_labels)
    return AttributedGraph.from_edges(
        len(ids), edges, attrs, labels=labels, node_ids=ids,
        weights=weights if weighted else None, info=info,
    )


def write_csv_dataset(graph: AttributedGraph, out_dir) -> tuple[Path, Path]:
    """Write ``nodes.csv`` and ``edges.csv``; floats use ``repr`` so they reload exactly."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = graph.node_ids or tuple(str(i) for i in range(graph.n_nodes))
    nodes_path, edges_path = out / "nodes.csv", out / "edges.csv"
    p = graph.attributes.shape[1]
    with nodes_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["id"] + (["label"] if graph.labels is not None else []) + [f"f{j + 1}" for j in range(p)]
        w.writerow(head)
        for i in range(graph.n_nodes):
            row = [ids[i]]
            if graph.labels is not None:
                row.append(str(int(graph.labels[i])))
            row.extend(repr(float(x)) for x in graph.attributes[i])
            w.writerow(row)
    coo = graph.adjacency.tocoo()
    upper = coo.row < coo.col
    r, c, v = coo.row[upper], coo.col[upper], coo.data[upper]
    order = np.lexsort((c, r))
    weighted = not np.all(v == 1.0)
    with edges_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"] + (["weight"] if weighted else []))
        for idx in order:
            row = [ids[r[idx]], ids[c[idx]]]
            if weighted:
                row.append(repr(float(v[idx])))
            w.writerow(row)
    return nodes_path, edges_path


@dataclass(frozen=True)
class SbmParams:
    """Attributed stochastic block model parameters."""

    n_nodes: int
    k: int
    p_in: float
    p_out: float
    attr_dim: int | None = None
    center_separation: float = 5.0
    attr_noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 1 or not 1 <= self.k <= self.n_nodes:
            raise StructuralError("need 1 <= k <= n_nodes")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise StructuralError("need 0 <= p_out <= p_in <= 1")
        if self.attr_noise_sigma < 0 or self.center_separation < 0:
            raise StructuralError("sigma and separation must be nonnegative")
        if self.dim < max(self.k - 1, 1):
            raise StructuralError("attr_dim must be at least k - 1")

    @property
    def dim(self) -> int:
        return self.k if self.attr_dim is None else self.attr_dim


def _simplex_centers(k, dim, separation):
    """k points with all pairwise distances equal to ``separation``."""
    if k == 1:
        return np.zeros((1, dim))
    eye = np.eye(k) * (separation / math.sqrt(2.0))
    if dim >= k:
        return np.hstack([eye, np.zeros((k, dim - k))])
    centered = eye - eye.mean(axis=0)
    # orthonormal basis of the (k-1)-dim span of the centered vertices
    _, _, vt = np.linalg.svd(centered)
    coords = centered @ vt[: k - 1].T
    return np.hstack([coords, np.zeros((k, dim - (k - 1)))])


def generate_sbm(params: SbmParams) -> AttributedGraph:
    """Sample an attributed SBM; labels are the planted blocks.

    Block sizes differ by at most one. Attribute rows are the block's
    center plus isotropic Gaussian noise.
    """
    rng = np.random.default_rng(params.seed)
    n, k = params.n_nodes, params.k
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    labels = np.repeat(np.arange(k), sizes)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], params.p_in, params.p_out)
    keep = rng.random(iu.size) < prob
    edges = np.column_stack([iu[keep], ju[keep]])

    centers = _simplex_centers(k, params.dim, params.center_separation)
    attrs = centers[labels] + params.attr_noise_sigma * rng.standard_normal((n, params.dim))
    return AttributedGraph.from_edges(
        n, edges, attrs, labels=labels, node_ids=[str(i) for i in range(n)]
    )


def _float_or_none(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) or math.isinf(x) else x


def result_to_dict(result: RunResult) -> dict:
    metrics = None
    if result.metrics is not None:
        metrics = {k: _float_or_none(v) for k, v in result.metrics.as_dict().items()}
    return {
        "method": result.method,
        "config": result.config,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "gamma": _float_or_none(result.gamma),
        "k": int(result.partition.k),
        "labels": [int(x) for x in result.partition.labels],
        "h": None if result.h is None else [float(x) for x in result.h.coeffs],
        "metrics": metrics,
        "history": [
            {
                "iteration": r.iteration,
                "gamma": r.gamma,
                "metrics": [_float_or_none(m) for m in r.metrics],
                "costs": [_float_or_none(c) for c in r.costs],
                "chosen": r.chosen,
                "s_eigenvalues": list(r.s_eigenvalues),
                "h": list(r.h),
            }
            for r in result.history
        ],
    }


def result_from_dict(doc: dict) -> RunResult:
    m = doc.get("metrics")
    metrics = None
    if m is not None:
        nan = float("nan")
        metrics = MetricReport(
            nan if m["nmi"] is None else m["nmi"],
            nan if m["ari"] is None else m["ari"],
            m.get("cost"),
        )
    history = [
        IterationRecord(
            iteration=r["iteration"],
            gamma=r["gamma"],
            metrics=tuple(-math.inf if x is None else x for x in r["metrics"]),
            costs=tuple(r["costs"]),
            chosen=r["chosen"],
            s_eigenvalues=tuple(r["s_eigenvalues"]),
            h=tuple(r["h"]),
        )
        for r in doc.get("history", [])
    ]
    return RunResult(
        partition=Partition(np.asarray(doc["labels"], dtype=np.int64), doc["k"]),
        h=None if doc.get("h") is None else FilterCoefficients(np.asarray(doc["h"])),
        history=history,
        metrics=metrics,
        converged=doc["converged"],
        iterations=doc["iterations"],
        gamma=doc.get("gamma"),
        method=doc.get("method", "grafica"),
        config=doc.get("config", {}),
    )


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(doc, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(doc), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_results(result: RunResult, path, extra: dict | None = None) -> Path:
    """Write a run as a sorted-key JSON document (no timestamps, byte-stable)."""
    doc = result_to_dict(result)
    if extra:
        doc.update(extra)
    return write_json(doc, path)


def read_results(path) -> RunResult:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetParseError(path, None, f"cannot read result document: {exc}") from exc
    return result_from_dict(doc)


def write_filter_response(h, grid, path) -> Path:
    """Two-column text file ``lambda response``, one grid point per line."""
    grid = np.asarray(grid, dtype=np.float64)
    resp = filter_response(h, grid)
    path = Path(path)
    lines = [f"{lam!r} {float(r)!r}" for lam, r in zip(grid.tolist(), resp.tolist())]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_filter_response(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)
