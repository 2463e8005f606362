"""CSV tables and JSON archives.

Floats are written with ``repr`` so every file round-trips bit for bit;
complex numbers are stored as ``[re, im]`` pairs and undefined values
(NaN) as ``null`` in JSON and ``nan`` in CSV.  Output is deterministic:
sorted keys, no timestamps.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import Trajectory

__all__ = [
    "Table", "write_csv", "read_csv", "table_to_csv_text",
    "trajectory_to_dict", "trajectory_from_dict", "dump_archive",
    "load_archive", "write_text",
]


class Table:
    """Named columns of equal length.

    Parameters
    ----------
    columns : sequence of str
    data : array_like, shape (n_rows, n_columns)
    """

    def __init__(self, columns, data):
        self.columns = tuple(columns)
        self.data = np.asarray(data, dtype=float).reshape(-1, len(self.columns))

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def __len__(self):
        return self.data.shape[0]

    def to_dict(self):
        return {"columns": list(self.columns),
                "data": [[_num(x) for x in row] for row in self.data]}

    @classmethod
    def from_dict(cls, d):
        data = [[math.nan if x is None else x for x in row] for row in d["data"]]
        return cls(d["columns"], np.asarray(data, dtype=float).reshape(-1, len(d["columns"])))


def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def _fmt(x):
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def table_to_csv_text(table):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.data:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_csv(path, table):
    return write_text(path, table_to_csv_text(table))


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return Table(rows[0], np.array([[float(x) for x in r] for r in rows[1:]], dtype=float))


def _complex_array(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def trajectory_to_dict(tr):
    """Times, states and cached observables of a trajectory."""
    return {
        "variant": tr.variant,
        "times": [float(t) for t in tr.times],
        "states": _complex_array(tr.states),
        "observables": {k: [_num(x) for x in v] for k, v in sorted(tr.observables.items())},
    }


def trajectory_from_dict(d):
    s = np.asarray(d["states"], dtype=float)
    tr = Trajectory(times=np.asarray(d["times"], dtype=float),
                    states=s[..., 0] + 1j * s[..., 1], variant=d.get("variant"))
    for k, v in d.get("observables", {}).items():
        tr.observables[k] = np.array([math.nan if x is None else x for x in v], dtype=float)
    return tr


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_archive(doc):
    """Serialize an archive document to deterministic JSON text."""
    return json.dumps(doc, sort_keys=True, default=_default, allow_nan=False, indent=1)


def load_archive(text):
    """Parse an archive and rebuild its tables and trajectories.

    Returns the document with ``tables`` values as :class:`Table` and
    ``trajectories`` values as :class:`~qubitpair.dynamics.Trajectory`.
    """
    doc = json.loads(text)
    doc["tables"] = {k: Table.from_dict(v) for k, v in doc.get("tables", {}).items()}
    doc["trajectories"] = {k: trajectory_from_dict(v)
                           for k, v in doc.get("trajectories", {}).items()}
    return doc
