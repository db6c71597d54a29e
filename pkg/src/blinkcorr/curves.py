"""Correlation-curve container and the plain-text table format.

Every part of the package that produces or consumes g(tau) samples speaks
this format: a CSV body (comma separator, LF line endings, 15 significant
digits) preceded by ``#``-prefixed metadata lines of the form
``# key = value``.  Times are in units of 1/A3, rates in units of A3.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CorrelationCurve",
    "write_table",
    "read_table",
    "format_value",
]


def format_value(x) -> str:
    """Format a scalar for the table format (deterministic, round-trippable)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)) and not isinstance(x, float):
        return f"{complex(x).real:.15g}{complex(x).imag:+.15g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15g}"
    return str(x)


def _parse_value(s: str):
    s = s.strip()
    if s == "true":
        return True
    if s == "false":
        return False
    for cast in (int, float, complex):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def write_table(path_or_file, columns: dict, metadata: dict | None = None) -> None:
    """Write named columns as CSV with leading ``# key = value`` metadata lines.

    ``columns`` maps header names to equal-length 1-d arrays; insertion order
    is preserved, which keeps output byte-identical for identical inputs.
    """
    cols = {k: np.asarray(v) for k, v in columns.items()}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) != 1:
        raise ValueError(f"columns have unequal lengths: {lengths}")
    n = lengths.pop()

    buf = io.StringIO()
    for key, val in (metadata or {}).items():
        buf.write(f"# {key} = {format_value(val)}\n")
    buf.write(",".join(cols.keys()) + "\n")
    names = list(cols)
    for i in range(n):
        buf.write(",".join(format_value(cols[k][i]) for k in names) + "\n")

    text = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="\n") as fh:
            fh.write(text)


def read_table(path_or_file) -> tuple[dict, dict]:
    """Read a table written by :func:`write_table`.

    Returns ``(metadata, columns)`` with columns as float arrays where
    possible (non-numeric columns come back as object arrays).
    """
    if hasattr(path_or_file, "read"):
        lines = path_or_file.read().splitlines()
    else:
        with open(path_or_file) as fh:
            lines = fh.read().splitlines()

    metadata = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            stripped = line.lstrip("#").strip()
            if "=" in stripped:
                key, _, val = stripped.partition("=")
                metadata[key.strip()] = _parse_value(val)
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("table has no header row")

    names = [c.strip() for c in body[0].split(",")]
    rows = [line.split(",") for line in body[1:]]
    columns = {}
    for j, name in enumerate(names):
        raw = [_parse_value(r[j]) for r in rows]
        try:
            columns[name] = np.array([float(x) for x in raw])
        except (TypeError, ValueError):
            columns[name] = np.array(raw, dtype=object)
    return metadata, columns


@dataclass(frozen=True)
class CorrelationCurve:
    """A sampled correlation function: tau grid, g values, optional errors.

    The tau grid must be strictly increasing and nonnegative; g must be
    finite everywhere.  ``model`` and ``params`` record where the samples
    came from and ride along through the CSV round trip.
    """

    tau: np.ndarray
    g: np.ndarray
    errors: np.ndarray | None = None
    model: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "g", g)
        if tau.ndim != 1 or g.shape != tau.shape:
            raise ValueError("tau and g must be 1-d arrays of equal length")
        if len(tau) and tau[0] < 0:
            raise ValueError("tau grid must be nonnegative")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("tau grid must be strictly increasing")
        if not np.all(np.isfinite(g)):
            raise ValueError("g must be finite at every grid point")
        if self.errors is not None:
            err = np.atleast_1d(np.asarray(self.errors, dtype=float))
            if err.shape != tau.shape:
                raise ValueError("errors must match the tau grid")
            if not np.all(np.isfinite(err)) or np.any(err < 0):
                raise ValueError("errors must be finite and nonnegative")
            object.__setattr__(self, "errors", err)

    def __len__(self):
        return len(self.tau)

    def to_csv(self, path_or_file) -> None:
        cols = {"tau": self.tau, "g": self.g}
        if self.errors is not None:
            cols["err"] = self.errors
        meta = {"model": self.model, **self.params}
        write_table(path_or_file, cols, meta)

    @classmethod
    def from_csv(cls, path_or_file) -> "CorrelationCurve":
        meta, cols = read_table(path_or_file)
        model = str(meta.pop("model", ""))
        return cls(
            tau=cols["tau"],
            g=cols["g"],
            errors=cols.get("err"),
            model=model,
            params=meta,
        )
