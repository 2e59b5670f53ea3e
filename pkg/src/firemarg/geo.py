"""Spherical geometry: great-circle distance, grid-cell surface area,
and rescaling of burnt area to a proportion of burnable cell area.

All distances are kilometres, all areas square kilometres, all angles
degrees at the API boundary (radians internally).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, GeometryError

# Default matches the WGS84 equatorial radius used by common geodesic tools.
EARTH_RADIUS_KM = 6378.137

# Acres per square kilometre: burnt-area inputs default to acres.
ACRES_PER_KM2 = 247.105381

# Relative slack allowed when a burnt fraction exceeds 1 from rounding alone.
BAP_CLAMP_RTOL = 1e-9


def haversine_km(lon1, lat1, lon2, lat2, radius_km: float = EARTH_RADIUS_KM):
    """Great-circle distance between two points, in km.

    Accepts scalars or numpy arrays (broadcasting applies). Symmetric,
    nonnegative, zero only for coincident points.
    """
    if radius_km <= 0:
        raise GeometryError(f"radius_km must be positive, got {radius_km}")
    lon1, lat1, lon2, lat2 = (np.asarray(a, dtype=float) for a in (lon1, lat1, lon2, lat2))
    if not (np.all(np.isfinite(lon1)) and np.all(np.isfinite(lat1))
            and np.all(np.isfinite(lon2)) and np.all(np.isfinite(lat2))):
        raise GeometryError("non-finite coordinate")
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2.0) ** 2
    d = 2.0 * radius_km * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    return float(d) if d.ndim == 0 else d


def zone_area_km2(lon_center: float, lat_center: float,
                  lon_width_deg: float, lat_height_deg: float,
                  radius_km: float = EARTH_RADIUS_KM) -> float:
    """Surface area of a lon/lat-aligned cell on a sphere.

    Uses the spherical-zone identity: the area between two parallels is
    proportional to the difference of their sines, so the cell area is
    R^2 * dlam * (sin(lat_top) - sin(lat_bottom)).
    """
    if lon_width_deg <= 0 or lat_height_deg <= 0:
        raise GeometryError("cell widths must be positive")
    if not (math.isfinite(lon_center) and math.isfinite(lat_center)):
        raise GeometryError("non-finite cell center")
    lat_lo = lat_center - lat_height_deg / 2.0
    lat_hi = lat_center + lat_height_deg / 2.0
    if lat_lo < -90.0 or lat_hi > 90.0:
        raise GeometryError(
            f"cell [{lat_lo}, {lat_hi}] crosses a pole; latitudes must stay in [-90, 90]")
    dlam = math.radians(lon_width_deg)
    return radius_km ** 2 * dlam * (math.sin(math.radians(lat_hi)) - math.sin(math.radians(lat_lo)))


@dataclass(frozen=True)
class CellGeometry:
    """Geometry of one grid cell plus the fraction of it inside the study
    region.

    ``area_km2`` is the full spherical cell area; ``true_area_km2`` is the
    burnable part (area times the in-region fraction).
    """

    lon_center: float
    lat_center: float
    lon_width_deg: float = 0.5
    lat_height_deg: float = 0.5
    area_fraction: float = 1.0
    radius_km: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not 0.0 < self.area_fraction <= 1.0:
            raise GeometryError(
                f"area_fraction must lie in (0, 1], got {self.area_fraction}")

    @property
    def area_km2(self) -> float:
        return zone_area_km2(self.lon_center, self.lat_center,
                             self.lon_width_deg, self.lat_height_deg, self.radius_km)

    @property
    def true_area_km2(self) -> float:
        return self.area_km2 * self.area_fraction


def burnt_area_proportion(ba: float, true_area_km2: float,
                          unit_scale: float = ACRES_PER_KM2) -> float:
    """Burnt area as a fraction of the cell's burnable capacity, in [0, 1].

    ``unit_scale`` converts km^2 to the unit of ``ba`` (default acres).
    A value marginally above 1 (within rounding) is clamped with a warning;
    anything larger is a data inconsistency.
    """
    if ba < 0:
        raise DataError(f"burnt area must be nonnegative, got {ba}")
    if true_area_km2 <= 0 or unit_scale <= 0:
        raise DataError("true_area_km2 and unit_scale must be positive")
    value = ba / (true_area_km2 * unit_scale)
    if value > 1.0 + BAP_CLAMP_RTOL:
        raise DataError(
            f"burnt area {ba} exceeds cell capacity {true_area_km2 * unit_scale:.6g}")
    if value > 1.0:
        warnings.warn("burnt fraction marginally above 1; clamped", stacklevel=2)
        value = 1.0
    return value


def rescaled_thresholds(thresholds, capacity: float):
    """Rescale absolute burnt-area thresholds to the proportion scale.

    ``capacity`` is the burnable capacity in burnt-area units
    (true area times unit scale). Returns ``(scaled, forced_one)`` where
    ``forced_one`` flags every strictly positive threshold at or above the
    proportion bound of 1: no observation can exceed capacity, so the
    predicted probability there is exactly 1.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if capacity <= 0:
        raise DataError(f"capacity must be positive, got {capacity}")
    scaled = thresholds / capacity
    forced_one = (scaled >= 1.0) & (thresholds > 0)
    return scaled, forced_one
