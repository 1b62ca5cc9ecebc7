"""Index sets and distances for planar, spherical and space-time domains."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError

__all__ = ["EARTH_RADIUS_KM", "Site", "Lag", "Sites", "distance",
           "great_circle", "pairwise_lags"]

EARTH_RADIUS_KM = 6371.0
KINDS = ("euclidean", "spherical", "spacetime")


@dataclass(frozen=True)
class Site:
    """A single location.

    Parameters
    ----------
    kind : {'euclidean', 'spherical', 'spacetime'}
    coords : tuple of float
        Planar coordinates, or ``(lon_deg, lat_deg)`` for spherical sites.
    t : float
        Time stamp; only meaningful for space-time sites.
    """

    kind: str
    coords: tuple
    t: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown site kind {self.kind!r}")
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        object.__setattr__(self, "coords", coords)
        if not all(np.isfinite(coords)) or not np.isfinite(self.t):
            raise DomainError("site coordinates must be finite")
        if self.kind == "spherical":
            if len(coords) != 2:
                raise DomainError("spherical sites take (lon, lat)")
            lon, lat = coords
            if not (-180 <= lon <= 180 and -90 <= lat <= 90):
                raise DomainError(f"lon/lat out of range: {coords}")

    @classmethod
    def euclidean(cls, *coords):
        return cls("euclidean", coords)

    @classmethod
    def spherical(cls, lon_deg, lat_deg):
        return cls("spherical", (lon_deg, lat_deg))

    @classmethod
    def spacetime(cls, coords, t):
        return cls("spacetime", tuple(np.atleast_1d(coords)), float(t))


class Lag(NamedTuple):
    """Separation between two sites: spatial modulus and temporal difference."""

    spatial: float
    temporal: float = 0.0


def great_circle(lon1, lat1, lon2, lat2, radius=EARTH_RADIUS_KM):
    """Great-circle distance (degrees in, ``radius`` units out).

    The arccos argument is clamped to [-1, 1] so numerically identical
    points give exactly zero.
    """
    a1, a2 = np.radians(lat1), np.radians(lat2)
    db = np.radians(np.asarray(lon1) - np.asarray(lon2))
    c = np.sin(a1) * np.sin(a2) + np.cos(a1) * np.cos(a2) * np.cos(db)
    return radius * np.arccos(np.clip(c, -1.0, 1.0))


def distance(a: Site, b: Site, radius=EARTH_RADIUS_KM) -> Lag:
    """Lag between two sites of the same kind."""
    if a.kind != b.kind:
        raise DomainError(f"cannot mix {a.kind} and {b.kind} sites")
    if a.kind == "spherical":
        if a.coords == b.coords:
            return Lag(0.0, 0.0)
        return Lag(float(great_circle(*a.coords, *b.coords, radius=radius)), 0.0)
    if len(a.coords) != len(b.coords):
        raise DomainError("sites have different coordinate dimensions")
    h = float(np.linalg.norm(np.subtract(a.coords, b.coords)))
    return Lag(h, float(a.t - b.t) if a.kind == "spacetime" else 0.0)


class Sites:
    """A collection of sites of one kind stored as arrays.

    Parameters
    ----------
    coords : array_like, shape (n, d)
        Planar coordinates, or columns (lon, lat) in degrees.
    kind : str
    times : array_like, shape (n,), optional
        Required for ``kind='spacetime'``.
    radius : float
        Sphere radius for spherical sites.
    """

    def __init__(self, coords, kind="euclidean", times=None, radius=EARTH_RADIUS_KM):
        if kind not in KINDS:
            raise DomainError(f"unknown site kind {kind!r}")
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise DomainError("coords must be a non-empty (n, d) array")
        if not np.all(np.isfinite(coords)):
            raise DomainError("site coordinates must be finite")
        if kind == "spherical":
            if coords.shape[1] != 2:
                raise DomainError("spherical sites need (lon, lat) columns")
            if (np.any(np.abs(coords[:, 0]) > 180) or np.any(np.abs(coords[:, 1]) > 90)):
                raise DomainError("lon/lat out of range")
        if kind == "spacetime":
            if times is None:
                raise DomainError("space-time sites need times")
            times = np.asarray(times, dtype=float).ravel()
            if times.shape[0] != coords.shape[0] or not np.all(np.isfinite(times)):
                raise DomainError("times must be finite and match coords")
        else:
            times = None
        self.coords = coords
        self.kind = kind
        self.times = times
        self.radius = float(radius)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        """Spatial dimension (2 for the sphere)."""
        return self.coords.shape[1]

    @classmethod
    def from_sites(cls, sites: Sequence[Site], radius=EARTH_RADIUS_KM):
        kinds = {s.kind for s in sites}
        if len(kinds) != 1:
            raise DomainError("all sites must share one kind")
        kind = kinds.pop()
        times = [s.t for s in sites] if kind == "spacetime" else None
        return cls([s.coords for s in sites], kind, times, radius)

    def subset(self, idx):
        idx = np.asarray(idx)
        return Sites(self.coords[idx], self.kind,
                     None if self.times is None else self.times[idx], self.radius)

    def site(self, i) -> Site:
        t = 0.0 if self.times is None else float(self.times[i])
        return Site(self.kind, tuple(self.coords[i]), t)

    def cross(self, other: "Sites"):
        """Spatial and temporal lag matrices between two collections.

        Returns
        -------
        h : ndarray, shape (n, m)
        u : ndarray, shape (n, m)
            Absolute temporal lags (zeros unless space-time).
        """
        if other.kind != self.kind:
            raise DomainError(f"cannot mix {self.kind} and {other.kind} sites")
        if other.dim != self.dim:
            raise DomainError("coordinate dimensions differ")
        a, b = self.coords, other.coords
        if self.kind == "spherical":
            h = great_circle(a[:, None, 0], a[:, None, 1], b[None, :, 0], b[None, :, 1],
                             radius=self.radius)
            same = np.all(a[:, None, :] == b[None, :, :], axis=2)
            h = np.where(same, 0.0, h)
        else:
            diff = a[:, None, :] - b[None, :, :]
            h = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if self.kind == "spacetime":
            u = np.abs(self.times[:, None] - other.times[None, :])
        else:
            u = np.zeros_like(h)
        return h, u


def pairwise_lags(sites: Sites):
    """Upper-triangle pair indices with their spatial and temporal lags.

    Returns
    -------
    i, j : ndarray of int
        Pair indices with ``i < j`` in row-major order.
    h, u : ndarray
    """
    n = len(sites)
    i, j = np.triu_indices(n, k=1)
    if sites.kind == "spherical":
        a, b = sites.coords[i], sites.coords[j]
        h = great_circle(a[:, 0], a[:, 1], b[:, 0], b[:, 1], radius=sites.radius)
        h = np.where(np.all(a == b, axis=1), 0.0, h)
    else:
        d = sites.coords[i] - sites.coords[j]
        h = np.sqrt(np.einsum("ij,ij->i", d, d))
    u = (np.abs(sites.times[i] - sites.times[j]) if sites.kind == "spacetime"
         else np.zeros_like(h))
    return i, j, h, u
