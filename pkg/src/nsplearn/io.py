"""Line-delimited text storage for datasets, fitted models and estimates.

A dataset file starts with ``dims x=<n> u=<m> gt=<0|1>`` and holds one
observation per line: comma-separated floats in the order x, u and, with
ground truth, flattened A, b, pi, u_ts, u_ns. Floats are written with
``repr`` so a round trip is bit-exact. Metadata, including the record count
and trajectory boundaries, lives in a JSON sidecar ``<path>.meta.json``.

Models and estimates use the same float encoding: a header line naming the
kind and its dimensions, followed by numeric rows.
"""
import json
from pathlib import Path

import numpy as np

from . import arm as armlib
from .constraints import FixedRows, RbfAngleModel, SelectionEstimate, StateDependentRows
from .data import Dataset
from .errors import InvalidInputError, ParseError
from .nullspace import RbfFeatureMap, RbfVectorModel


def _fmt(values):
    return ",".join(repr(float(v)) for v in np.ravel(values))


def _floats(text, lineno):
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", line=lineno) from None


def _header(line, kind, lineno=1):
    parts = line.split()
    if not parts or parts[0] != kind:
        raise ParseError(f"expected a '{kind}' header", line=lineno)
    fields = {}
    for tok in parts[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            fields.setdefault("_tags", []).append(tok)
        else:
            fields[key] = value
    return fields


def _int_field(fields, key, lineno=1):
    try:
        return int(fields[key])
    except (KeyError, ValueError):
        raise ParseError(f"header field '{key}' missing or not an integer", line=lineno) from None


def _read_lines(path):
    text = Path(path).read_text()
    if not text:
        raise ParseError("empty file", line=1)
    lines = text.split("\n")
    if lines[-1] != "":
        raise ParseError("last record is not newline-terminated (truncated file?)", line=len(lines))
    return lines[:-1]


def meta_path(path):
    return Path(str(path) + ".meta.json")


# --- datasets ---------------------------------------------------------------


def write_dataset(dataset, path):
    """Write ``dataset`` to ``path`` plus its metadata sidecar."""
    path = Path(path)
    n, m = dataset.state_dim, dataset.action_dim
    gt = int(dataset.has_ground_truth)
    cols = [dataset.x, dataset.u]
    if gt:
        cols += [dataset.A.reshape(len(dataset), -1), dataset.b, dataset.pi, dataset.u_ts, dataset.u_ns]
    rows = np.concatenate(cols, axis=1)
    with path.open("w") as fh:
        fh.write(f"dims x={n} u={m} gt={gt}\n")
        for row in rows:
            fh.write(_fmt(row) + "\n")
    meta = dict(dataset.meta, n_records=len(dataset))
    meta_path(path).write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def read_dataset(path):
    """Read a dataset written by :func:`write_dataset`.

    Raises
    ------
    ParseError
        On a malformed header or record, a truncated file, or a record count
        that disagrees with the sidecar.
    """
    path = Path(path)
    lines = _read_lines(path)
    fields = _header(lines[0], "dims")
    n, m, gt = (_int_field(fields, k) for k in ("x", "u", "gt"))
    if gt not in (0, 1) or n < 1 or m < 1:
        raise ParseError("invalid dimensions in header", line=1)
    records = [_floats(line, i + 2) for i, line in enumerate(lines[1:])]
    width = len(records[0]) if records else n + m
    if gt:
        # record = x, u, A (k*m), b (k), pi, u_ts, u_ns
        k, rem = divmod(width - n - 4 * m, m + 1)
        if rem or k < 0:
            raise ParseError("record width does not match the declared dimensions", line=2)
    elif width != n + m:
        raise ParseError("record width does not match the declared dimensions", line=2)
    for i, rec in enumerate(records):
        if len(rec) != width:
            raise ParseError(f"expected {width} fields, found {len(rec)}", line=i + 2)
    try:
        meta = json.loads(meta_path(path).read_text())
    except FileNotFoundError:
        raise ParseError(f"missing metadata sidecar {meta_path(path)}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad metadata sidecar: {exc}") from None
    count = meta.pop("n_records", None)
    if count is not None and count != len(records):
        raise ParseError(f"expected {count} records, found {len(records)}", line=len(records) + 1)
    data = np.array(records, dtype=float).reshape(len(records), width)
    x, u = data[:, :n], data[:, n:n + m]
    if not gt:
        return Dataset(x, u, meta=meta)
    pos = n + m
    A = data[:, pos:pos + k * m].reshape(-1, k, m)
    pos += k * m
    b = data[:, pos:pos + k]
    pos += k
    pi, u_ts, u_ns = (data[:, pos + i * m:pos + (i + 1) * m] for i in range(3))
    return Dataset(x, u, A, b, pi, u_ts, u_ns, meta)


# --- models and estimates ---------------------------------------------------


def _feature_lines(fmap):
    return [_fmt([fmap.bandwidth])] + [_fmt(c) for c in fmap.centres]


def write_model(model, path):
    fmap = model.feature_map
    m, phi = model.weights.shape
    lines = [f"model rbf_vector x={fmap.centres.shape[1]} u={m} phi={phi}"]
    lines += _feature_lines(fmap)
    lines += [_fmt(w) for w in model.weights]
    Path(path).write_text("\n".join(lines) + "\n")


class _Cursor:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 1

    def take(self, count, width):
        out = []
        for _ in range(count):
            if self.pos >= len(self.lines):
                raise ParseError("unexpected end of file", line=self.pos + 1)
            row = _floats(self.lines[self.pos], self.pos + 1)
            if len(row) != width:
                raise ParseError(f"expected {width} fields, found {len(row)}", line=self.pos + 1)
            out.append(row)
            self.pos += 1
        return np.array(out, dtype=float).reshape(count, width)

    def done(self):
        if self.pos != len(self.lines):
            raise ParseError("trailing content", line=self.pos + 1)


def _read_feature_map(cur, n, phi):
    bw = cur.take(1, 1)[0, 0]
    centres = cur.take(phi, n)
    try:
        return RbfFeatureMap(centres, bw)
    except InvalidInputError as exc:
        raise ParseError(str(exc), line=cur.pos) from None


def read_model(path):
    lines = _read_lines(path)
    fields = _header(lines[0], "model")
    n, m, phi = (_int_field(fields, k) for k in ("x", "u", "phi"))
    cur = _Cursor(lines)
    fmap = _read_feature_map(cur, n, phi)
    W = cur.take(m, phi)
    cur.done()
    return RbfVectorModel(fmap, W)


def _links_of(provider):
    owner = getattr(provider, "__self__", None)
    if isinstance(owner, armlib.ArmModel):
        return owner.link_lengths
    raise InvalidInputError("only arm Jacobian providers (ArmModel.jacobian) can be stored")


def write_estimate(estimate, path):
    """Store a constraint estimate as its variant tag plus numeric rows."""
    U = estimate.action_dim
    k = estimate.n_rows
    if isinstance(estimate, FixedRows):
        lines = [f"estimate fixed_rows u={U} k={k}"] + [_fmt(r) for r in estimate.rows]
    elif isinstance(estimate, SelectionEstimate):
        links = ",".join(repr(v) for v in _links_of(estimate.jacobian))
        lines = [f"estimate selection u={U} r={estimate.task_dim} k={k} links={links}"]
        lines += [_fmt(r) for r in estimate.rows]
    elif isinstance(estimate, StateDependentRows):
        fmap = estimate.feature_map
        lines = [f"estimate state_dependent u={U} x={fmap.centres.shape[1]} k={k} phi={fmap.n_features}"]
        lines += _feature_lines(fmap)
        for model in estimate.models:
            lines += [_fmt(w) for w in model.weights]
    else:
        raise InvalidInputError(f"cannot store estimate of type {type(estimate).__name__}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_estimate(path):
    lines = _read_lines(path)
    fields = _header(lines[0], "estimate")
    tags = fields.get("_tags", [])
    if len(tags) != 1:
        raise ParseError("estimate header needs exactly one variant tag", line=1)
    variant = tags[0]
    U, k = _int_field(fields, "u"), _int_field(fields, "k")
    cur = _Cursor(lines)
    if variant == "fixed_rows":
        rows = cur.take(k, U)
        cur.done()
        return FixedRows(rows, U)
    if variant == "selection":
        R = _int_field(fields, "r")
        try:
            arm = armlib.ArmModel(tuple(float(v) for v in fields["links"].split(",")))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad arm description ({exc})", line=1) from None
        rows = cur.take(k, R)
        cur.done()
        return SelectionEstimate(rows, arm.jacobian, U)
    if variant == "state_dependent":
        n, phi = _int_field(fields, "x"), _int_field(fields, "phi")
        fmap = _read_feature_map(cur, n, phi)
        models = [RbfAngleModel(fmap, cur.take(U - 1, phi)) for _ in range(k)]
        cur.done()
        return StateDependentRows(models, U, fmap)
    raise ParseError(f"unknown estimate variant '{variant}'", line=1)
