"""Datasets and their CSV representation.

CSV layout (header required): coordinate columns first, then covariates,
then the observation in the last column.  Coordinates are ``lon,lat``
(spherical), ``x[,y[,z]]`` (Euclidean) or ``x[,y[,z]],t`` (space-time).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .geometry import EARTH_RADIUS_KM, Sites

__all__ = ["Dataset", "parse_dataset", "read_dataset", "format_float", "write_dataset"]

_SPATIAL = ("x", "y", "z")
_MISSING = ("", "na", "nan")


def format_float(v):
    """17 significant digits, enough to round-trip any double."""
    return format(float(v), ".17g")


@dataclass
class Dataset:
    """Observations at a set of sites.

    Parameters
    ----------
    sites : Sites
    covariates : ndarray, shape (n, k)
        Covariate columns as stored in the file (no intercept).
    y : ndarray, shape (n,)
        Observations; NaN marks a missing value (prediction targets).
    intercept : bool
        Whether the design matrix gets a leading column of ones.
    names : tuple of str
        Covariate column names.
    """

    sites: Sites
    covariates: np.ndarray
    y: np.ndarray
    intercept: bool = True
    names: tuple = ()

    def __post_init__(self):
        self.covariates = np.asarray(self.covariates, dtype=float).reshape(len(self.sites), -1)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.y.shape[0] != len(self.sites):
            raise DataError("observation count does not match site count")
        if not self.names:
            self.names = tuple(f"x{i + 1}" for i in range(self.covariates.shape[1]))

    def __len__(self):
        return self.y.shape[0]

    @property
    def X(self):
        """Design matrix of the mean."""
        if self.intercept:
            return np.column_stack([np.ones(len(self)), self.covariates])
        return self.covariates

    @property
    def kind(self):
        return self.sites.kind

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.sites.subset(idx), self.covariates[idx], self.y[idx],
                       self.intercept, self.names)

    def with_y(self, y):
        return Dataset(self.sites, self.covariates, y, self.intercept, self.names)

    def coord_names(self):
        if self.kind == "spherical":
            return ["lon", "lat"]
        names = list(_SPATIAL[: self.sites.dim])
        return names + ["t"] if self.kind == "spacetime" else names

    def to_csv(self, y_name="y"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.coord_names() + list(self.names) + [y_name])
        times = self.sites.times
        for i in range(len(self)):
            row = [format_float(c) for c in self.sites.coords[i]]
            if times is not None:
                row.append(format_float(times[i]))
            row += [format_float(c) for c in self.covariates[i]]
            row.append("" if math.isnan(self.y[i]) else format_float(self.y[i]))
            w.writerow(row)
        return buf.getvalue()


def _split_header(header):
    cols = [c.strip() for c in header]
    if len(cols) < 2:
        raise DataError("line 1: need at least one coordinate and an observation column")
    low = [c.lower() for c in cols]
    body = low[:-1]
    if body[:2] == ["lon", "lat"]:
        kind, nc = "spherical", 2
    else:
        nc = 0
        while nc < len(body) and nc < 3 and body[nc] == _SPATIAL[nc]:
            nc += 1
        if nc == 0:
            raise DataError(f"line 1: unrecognised coordinate columns in {cols}")
        kind = "euclidean"
        if nc < len(body) and body[nc] == "t":
            kind = "spacetime"
    rest = body[nc + (kind == "spacetime"):]
    for c in rest:
        if c in ("lon", "lat", "t"):
            raise DataError(f"line 1: coordinate column {c!r} mixed with covariates")
    if "lon" in body[nc:] or "lat" in body[nc:]:
        raise DataError("line 1: mixed planar and spherical coordinates")
    return kind, nc, cols[nc + (kind == "spacetime"):-1]


def read_dataset(text, *, allow_missing=False, intercept=True, radius=EARTH_RADIUS_KM,
                 source="<string>"):
    """Parse CSV text into a :class:`Dataset`."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{source}: empty file")
    _, header = rows[0]
    kind, nc, cov_names = _split_header(header)
    width = len(header)
    n_time = kind == "spacetime"
    coords, times, covs, ys = [], [], [], []
    for line, r in rows[1:]:
        if len(r) != width:
            raise DataError(f"{source}: line {line}: expected {width} fields, got {len(r)}")
        vals = []
        for j, c in enumerate(r):
            c = c.strip()
            if j == width - 1 and c.lower() in _MISSING:
                if not allow_missing:
                    raise DataError(f"{source}: line {line}: missing observation")
                vals.append(math.nan)
                continue
            try:
                v = float(c)
            except ValueError:
                raise DataError(f"{source}: line {line}: cannot parse {c!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{source}: line {line}: non-finite value {c!r}")
            vals.append(v)
        coords.append(vals[:nc])
        if n_time:
            times.append(vals[nc])
        covs.append(vals[nc + n_time:-1])
        ys.append(vals[-1])
    if not ys:
        raise DataError(f"{source}: no data rows")
    coords = np.array(coords, dtype=float)
    if kind == "spherical" and (np.any(np.abs(coords[:, 0]) > 180)
                                or np.any(np.abs(coords[:, 1]) > 90)):
        bad = int(np.flatnonzero((np.abs(coords[:, 0]) > 180) | (np.abs(coords[:, 1]) > 90))[0])
        raise DataError(f"{source}: line {rows[bad + 1][0]}: lon/lat out of range")
    sites = Sites(coords, kind, times if n_time else None, radius)
    return Dataset(sites, np.array(covs, dtype=float).reshape(len(ys), -1),
                   np.array(ys), intercept, tuple(cov_names))


def parse_dataset(path, *, allow_missing=False, intercept=True, radius=EARTH_RADIUS_KM):
    """Read a dataset CSV file; see the module docstring for the layout."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    return read_dataset(text, allow_missing=allow_missing, intercept=intercept,
                        radius=radius, source=str(path))


def write_dataset(path, ds: Dataset):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(ds.to_csv())
