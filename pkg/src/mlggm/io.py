"""File formats and run manifests.

Formats (all plain text; numeric values written with repr so they round-trip
exactly):

- data CSV: header row of variable names, one row per observation;
- layer TSV: (vertex_name, layer_index), defining both the vertex order
  (stable sort by layer index, file order within a layer) and the partition;
- graph TSV: (src, dst, kind) with kind "dir" (src -> dst) or "undir";
- PPI TSV: square matrix with a vertex header row and leading name column;
- edge TSV: (src, dst, kind, ppi[, sign, sign_prob]);
- params JSON: dense B and K with the layer partition;
- manifest JSON: config snapshot, seed, input/output checksums, timings.

Every writer stamps the file with a leading "# manifest: <id>" comment when a
manifest id is given; readers skip comment lines.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import Dataset
from .datagen import MlggmParameters
from .errors import (
    ConfigInvalidError,
    MissingColumnInLayerMapError,
    MissingValueError,
    NonNumericCellError,
)
from .graph import DIRECTED, UNDIRECTED, ChainGraphSpec, Edge, validate

MISSING_TOKENS = {"", "na", "nan", "null", "none"}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _open_rows(path) -> list[list[str]]:
    rows = []
    with open(path, newline="") as fh:
        for raw in fh:
            if raw.startswith("#"):
                continue
            rows.append(raw.rstrip("\n"))
    dialect_sep = "\t" if str(path).endswith((".tsv", ".txt")) else ","
    return [row.split(dialect_sep) for row in rows if row != ""]


def write_table(
    path, header: Sequence[str], rows: Iterable[Sequence], manifest_id: str | None = None,
    sep: str = "\t",
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if manifest_id:
            fh.write(f"# manifest: {manifest_id}\n")
        fh.write(sep.join(header) + "\n")
        for row in rows:
            fh.write(sep.join(_fmt(x) for x in row) + "\n")


# layer map

def write_layers_tsv(path, names: Sequence[str], layers, manifest_id=None) -> None:
    layer_of = {}
    for k, layer in enumerate(layers, start=1):
        for v in layer:
            layer_of[v] = k
    rows = [(names[v - 1], layer_of[v]) for v in range(1, len(names) + 1)]
    write_table(path, ["vertex_name", "layer_index"], rows, manifest_id)


def read_layers_tsv(path) -> tuple[tuple[str, ...], tuple[tuple[int, ...], ...]]:
    """Returns (names in vertex order, layer partition over 1..p).

    Vertex order is the stable sort of the file rows by layer index, so names
    sharing a layer keep their file order and earlier layers come first.
    """
    rows = _open_rows(path)
    if not rows or [c.lower() for c in rows[0][:2]] != ["vertex_name", "layer_index"]:
        raise ConfigInvalidError(f"{path}: expected header vertex_name<TAB>layer_index")
    entries = []
    for row in rows[1:]:
        if len(row) < 2:
            raise ConfigInvalidError(f"{path}: malformed row {row}")
        try:
            entries.append((row[0], int(row[1])))
        except ValueError as exc:
            raise ConfigInvalidError(f"{path}: bad layer index in row {row}") from exc
    entries = sorted(enumerate(entries), key=lambda it: it[1][1])
    names = tuple(name for _, (name, _) in entries)
    layer_ids = [lid for _, (_, lid) in entries]
    layers: list[list[int]] = []
    prev = None
    for pos, lid in enumerate(layer_ids, start=1):
        if lid != prev:
            layers.append([])
            prev = lid
        layers[-1].append(pos)
    return names, tuple(tuple(layer) for layer in layers)


# data matrix

def write_data_csv(path, data: Dataset, manifest_id=None) -> None:
    write_table(path, data.names, data.values, manifest_id, sep=",")


def ingest(
    data_csv, layer_tsv, center: bool = True, standardize: bool = False
) -> Dataset:
    """Load a data CSV against a layer map.

    Columns are reordered to the vertex order the layer map defines; every
    data column must be mapped and every mapped name present. Missing or
    non-numeric cells and constant columns are rejected.
    """
    names, layers = read_layers_tsv(layer_tsv)
    rows = _open_rows(data_csv)
    if not rows:
        raise ConfigInvalidError(f"{data_csv}: empty file")
    header = rows[0]
    col_of = {name: j for j, name in enumerate(header)}
    missing = [name for name in header if name not in names]
    if missing:
        raise MissingColumnInLayerMapError(f"columns not in layer map: {missing}")
    absent = [name for name in names if name not in col_of]
    if absent:
        raise MissingColumnInLayerMapError(f"layer map names missing from data: {absent}")
    values = np.empty((len(rows) - 1, len(names)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise NonNumericCellError(f"{data_csv}: row {i + 2} has {len(row)} cells")
        for j, name in enumerate(names):
            cell = row[col_of[name]].strip()
            if cell.lower() in MISSING_TOKENS:
                raise MissingValueError(f"{data_csv}: missing value at row {i + 2}, column {name}")
            try:
                values[i, j] = float(cell)
            except ValueError as exc:
                raise NonNumericCellError(
                    f"{data_csv}: non-numeric cell {cell!r} at row {i + 2}, column {name}"
                ) from exc
    if not np.all(np.isfinite(values)):
        raise MissingValueError(f"{data_csv}: non-finite value in data")
    ds = Dataset(values=values, names=names, layers=layers)
    ds.check_no_constant_columns()
    if standardize:
        return ds.standardized()
    if center:
        return ds.centered()
    return ds


# graphs and edge lists

def write_graph_tsv(path, spec: ChainGraphSpec, names: Sequence[str], manifest_id=None) -> None:
    rows = [(names[e.src - 1], names[e.dst - 1], e.kind) for e in spec.edges()]
    write_table(path, ["src", "dst", "kind"], rows, manifest_id)


def read_graph_tsv(path, names: Sequence[str], layers) -> ChainGraphSpec:
    index = {name: i + 1 for i, name in enumerate(names)}
    rows = _open_rows(path)
    if not rows or [c.lower() for c in rows[0][:3]] != ["src", "dst", "kind"]:
        raise ConfigInvalidError(f"{path}: expected header src<TAB>dst<TAB>kind")
    directed = set()
    undirected = set()
    for row in rows[1:]:
        src, dst, kind = row[0], row[1], row[2]
        if src not in index or dst not in index:
            raise ConfigInvalidError(f"{path}: unknown vertex in row {row}")
        if kind == DIRECTED:
            directed.add((index[src], index[dst]))
        elif kind == UNDIRECTED:
            undirected.add((index[src], index[dst]))
        else:
            raise ConfigInvalidError(f"{path}: unknown edge kind {kind!r}")
    return validate(
        ChainGraphSpec(
            p=len(names), layers=layers,
            directed_edges=frozenset(directed), undirected_edges=frozenset(undirected),
        )
    )


def write_edges_tsv(
    path, edges: Iterable[Edge], names: Sequence[str],
    ppi: Mapping[Edge, float] | None = None,
    signs: Mapping[Edge, str] | None = None,
    sign_prob: Mapping[Edge, float] | None = None,
    manifest_id=None,
) -> None:
    header = ["src", "dst", "kind", "ppi", "sign", "sign_prob"]
    rows = []
    for e in edges:
        rows.append(
            (
                names[e.src - 1], names[e.dst - 1], e.kind,
                _fmt(ppi.get(e, "")) if ppi else "",
                signs.get(e, "") if signs else "",
                _fmt(sign_prob.get(e, "")) if sign_prob else "",
            )
        )
    write_table(path, header, rows, manifest_id)


def read_edges_tsv(path, names: Sequence[str]) -> tuple[list[Edge], dict[Edge, float], dict[Edge, float]]:
    """Returns (edges, scores keyed by edge, sign probabilities keyed by edge).

    Scores come from the "ppi" column when present; rows without one get no
    score entry.
    """
    index = {name: i + 1 for i, name in enumerate(names)}
    rows = _open_rows(path)
    if not rows:
        raise ConfigInvalidError(f"{path}: empty edge file")
    header = [c.lower() for c in rows[0]]
    cols = {name: header.index(name) for name in header}
    for req in ("src", "dst", "kind"):
        if req not in cols:
            raise ConfigInvalidError(f"{path}: missing column {req}")
    edges: list[Edge] = []
    scores: dict[Edge, float] = {}
    sign_probs: dict[Edge, float] = {}
    for row in rows[1:]:
        src, dst, kind = row[cols["src"]], row[cols["dst"]], row[cols["kind"]]
        if src not in index or dst not in index:
            raise ConfigInvalidError(f"{path}: unknown vertex in row {row}")
        e = Edge(index[src], index[dst], kind)
        edges.append(e)
        for col, store in (("ppi", scores), ("sign_prob", sign_probs)):
            if col in cols and cols[col] < len(row) and row[cols[col]] != "":
                store[e] = float(row[cols[col]])
    return edges, scores, sign_probs


# PPI matrix

def write_ppi_tsv(path, g: np.ndarray, names: Sequence[str], manifest_id=None) -> None:
    header = ["vertex"] + list(names)
    rows = [[names[i]] + [g[i, j] for j in range(len(names))] for i in range(len(names))]
    write_table(path, header, rows, manifest_id)


def read_ppi_tsv(path) -> tuple[tuple[str, ...], np.ndarray]:
    rows = _open_rows(path)
    names = tuple(rows[0][1:])
    g = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    if g.shape != (len(names), len(names)):
        raise ConfigInvalidError(f"{path}: matrix shape {g.shape} does not match header")
    return names, g


# generating parameters

def write_params_json(path, params: MlggmParameters, names: Sequence[str], manifest_id=None) -> None:
    payload = {
        "manifest": manifest_id,
        "names": list(names),
        "layers": [list(layer) for layer in params.layers],
        "B": [[repr(float(x)) for x in row] for row in params.B],
        "K": [[repr(float(x)) for x in row] for row in params.K],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=1))


def read_params_json(path) -> tuple[MlggmParameters, tuple[str, ...]]:
    payload = json.loads(Path(path).read_text())
    B = np.array([[float(x) for x in row] for row in payload["B"]])
    K = np.array([[float(x) for x in row] for row in payload["K"]])
    layers = tuple(tuple(layer) for layer in payload["layers"])
    return MlggmParameters(B=B, K=K, layers=layers), tuple(payload["names"])


# manifests

def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record for one command invocation.

    The manifest id is a hash of the command, configuration, seed, and input
    checksums, so re-running the same configuration on the same inputs stamps
    byte-identical outputs.
    """

    command: str
    config: dict
    seed: int | None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    output_checksums: dict[str, str] = field(default_factory=dict)
    wall_clock_s: float | None = None
    version: str = ""

    @property
    def manifest_id(self) -> str:
        body = json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "seed": self.seed,
                "inputs": self.inputs,
            },
            sort_keys=True,
        )
        return hashlib.sha256(body.encode()).hexdigest()[:12]

    def add_input(self, name: str, path) -> None:
        self.inputs[name] = file_checksum(path)

    def finish(self, outputs: Mapping[str, Path], started: float) -> None:
        self.wall_clock_s = time.time() - started
        for name, path in outputs.items():
            self.outputs[name] = str(path)
            self.output_checksums[name] = file_checksum(path)

    def write(self, path) -> None:
        from . import __version__

        payload = {
            "manifest": self.manifest_id,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version or __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "output_checksums": self.output_checksums,
            "wall_clock_s": self.wall_clock_s,
        }
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(payload, indent=1))


def write_trace_summary(path, trace, manifest_id=None) -> None:
    payload = {
        "manifest": manifest_id,
        "mode": trace.mode,
        "symmetrize": trace.symmetrize,
        "n": trace.n,
        "n_iter": trace.n_iter,
        "burn_in": trace.burn_in,
        "thin": trace.thin,
        "n_stored": trace.n_stored,
        "seed": trace.seed,
        "edge_count_trace": [float(x) for x in trace.edge_count_trace],
        "loglik_trace": [float(x) for x in trace.loglik_trace],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload))
