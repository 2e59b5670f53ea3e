"""Dataset representation, default threshold grids, and CSV ingestion.

A Dataset holds one row per (grid cell, month, year) as parallel numpy
columns. Counts and burnt areas use NaN for missing; everything else is
required. Derived geometry (cell areas, burnt-area capacity, burnt-area
proportion) and a per-(month, year) spatial index are computed once at
construction, after which the object is read-only and safe to share
across worker processes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, IngestError
from .geo import ACRES_PER_KM2, BAP_CLAMP_RTOL, EARTH_RADIUS_KM, zone_area_km2

N_LAND_COVER = 18

DEFAULT_MONTH_RANGE = (3, 9)
DEFAULT_YEAR_RANGE = (1993, 2015)


def default_cnt_thresholds() -> np.ndarray:
    """Count thresholds: 0..9, then 10..30 by 2, then 40..100 by 10."""
    return np.concatenate([
        np.arange(0, 10),
        np.arange(10, 31, 2),
        np.arange(40, 101, 10),
    ]).astype(float)


def default_ba_thresholds() -> np.ndarray:
    """Burnt-area thresholds from 0 to 100000 (in BA units, e.g. acres)."""
    return np.array([
        0, 1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100,
        150, 200, 250, 300, 400, 500, 1000, 1500, 2000,
        5000, 10000, 20000, 30000, 40000, 50000, 100000,
    ], dtype=float)


def default_thresholds() -> tuple[np.ndarray, np.ndarray]:
    return default_cnt_thresholds(), default_ba_thresholds()


@dataclass(frozen=True)
class SliceIndex:
    """Latitude-sorted view of one (month, year) slice for radius queries."""

    ids: np.ndarray   # observation indices, ordered by latitude
    lat: np.ndarray   # sorted latitudes
    lon: np.ndarray   # longitudes aligned with ids


@dataclass(frozen=True)
class Dataset:
    lon: np.ndarray
    lat: np.ndarray
    month: np.ndarray
    year: np.ndarray
    area_fraction: np.ndarray
    cnt: np.ndarray            # float with NaN = missing
    ba: np.ndarray             # float with NaN = missing
    land_cover: np.ndarray     # (n, 18)
    climate: np.ndarray        # (n, n_climate)
    climate_names: tuple[str, ...]
    altitude: np.ndarray
    cnt_thresholds: np.ndarray
    ba_thresholds: np.ndarray
    radius_km: float
    unit_scale: float
    lon_width: float
    lat_height: float
    # derived at build time
    total_area: np.ndarray = field(repr=False, default=None)
    true_area: np.ndarray = field(repr=False, default=None)
    capacity: np.ndarray = field(repr=False, default=None)
    bap: np.ndarray = field(repr=False, default=None)
    cnt_missing: np.ndarray = field(repr=False, default=None)
    ba_missing: np.ndarray = field(repr=False, default=None)
    spatial_index: dict = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.lon.size

    def covariate(self, name: str) -> np.ndarray:
        """Resolve a covariate column by name: climate names, altitude,
        or lc1..lc18."""
        if name == "altitude":
            return self.altitude
        if name in self.climate_names:
            return self.climate[:, self.climate_names.index(name)]
        if name.startswith("lc"):
            k = int(name[2:])
            if 1 <= k <= N_LAND_COVER:
                return self.land_cover[:, k - 1]
        raise DataError(f"unknown covariate {name!r}")


def build_dataset(lon, lat, month, year, area_fraction, cnt, ba, land_cover,
                  climate, altitude, climate_names=(),
                  cnt_thresholds=None, ba_thresholds=None,
                  radius_km: float = EARTH_RADIUS_KM,
                  unit_scale: float = ACRES_PER_KM2,
                  lon_width: float = 0.5, lat_height: float = 0.5,
                  month_range=DEFAULT_MONTH_RANGE,
                  year_range=DEFAULT_YEAR_RANGE) -> Dataset:
    """Assemble and validate a Dataset from parallel columns."""
    lon = np.asarray(lon, dtype=float)
    n = lon.size
    lat = np.asarray(lat, dtype=float)
    month = np.asarray(month, dtype=np.int64)
    year = np.asarray(year, dtype=np.int64)
    area_fraction = np.asarray(area_fraction, dtype=float)
    cnt = np.asarray(cnt, dtype=float)
    ba = np.asarray(ba, dtype=float)
    land_cover = np.asarray(land_cover, dtype=float).reshape(n, -1)
    climate = np.asarray(climate, dtype=float).reshape(n, -1)
    altitude = np.asarray(altitude, dtype=float)
    climate_names = tuple(climate_names) if climate_names else tuple(
        f"clim{k + 1}" for k in range(climate.shape[1]))

    for name, col in (("lat", lat), ("month", month), ("year", year),
                      ("area", area_fraction), ("cnt", cnt), ("ba", ba),
                      ("altitude", altitude)):
        if col.shape != (n,):
            raise DataError(f"column {name} has shape {col.shape}, expected ({n},)")
    if land_cover.shape != (n, N_LAND_COVER):
        raise DataError(f"land cover must have {N_LAND_COVER} columns")
    if len(climate_names) != climate.shape[1]:
        raise DataError("climate names do not match climate columns")

    if not (np.all(np.isfinite(lon)) and np.all(np.isfinite(lat))):
        raise DataError("non-finite coordinate")
    bad = (month < month_range[0]) | (month > month_range[1])
    if np.any(bad):
        raise DataError(f"month outside {month_range} at index {int(np.argmax(bad))}")
    bad = (year < year_range[0]) | (year > year_range[1])
    if np.any(bad):
        raise DataError(f"year outside {year_range} at index {int(np.argmax(bad))}")
    bad = ~((area_fraction > 0.0) & (area_fraction <= 1.0))
    if np.any(bad):
        raise DataError(f"area fraction outside (0,1] at index {int(np.argmax(bad))}")
    observed_cnt = ~np.isnan(cnt)
    if np.any((cnt[observed_cnt] < 0) | (cnt[observed_cnt] != np.floor(cnt[observed_cnt]))):
        raise DataError("counts must be nonnegative integers or missing")
    observed_ba = ~np.isnan(ba)
    if np.any(ba[observed_ba] < 0):
        raise DataError("burnt area must be nonnegative or missing")
    if np.any((land_cover < 0) | (land_cover > 1)):
        raise DataError("land-cover fractions must lie in [0,1]")

    cnt_t = default_cnt_thresholds() if cnt_thresholds is None else np.asarray(cnt_thresholds, float)
    ba_t = default_ba_thresholds() if ba_thresholds is None else np.asarray(ba_thresholds, float)
    for grid, label in ((cnt_t, "cnt"), (ba_t, "ba")):
        if np.any(np.diff(grid) <= 0):
            raise DataError(f"{label} thresholds must be strictly increasing")

    total_area = np.array([
        zone_area_km2(lo, la, lon_width, lat_height, radius_km)
        for lo, la in zip(lon, lat)])
    true_area = total_area * area_fraction
    capacity = true_area * unit_scale

    bap = np.full(n, np.nan)
    bap[observed_ba] = ba[observed_ba] / capacity[observed_ba]
    over = observed_ba & (bap > 1.0 + BAP_CLAMP_RTOL)
    if np.any(over):
        i = int(np.argmax(over))
        raise DataError(
            f"burnt area exceeds cell capacity at index {i}: "
            f"{ba[i]} > {capacity[i]:.6g}")
    np.clip(bap, None, 1.0, out=bap)

    index: dict = {}
    for key in {(int(m), int(y)) for m, y in zip(month, year)}:
        mask = (month == key[0]) & (year == key[1])
        ids = np.flatnonzero(mask)
        order = np.argsort(lat[ids], kind="stable")
        ids = ids[order]
        index[key] = SliceIndex(ids=ids, lat=lat[ids], lon=lon[ids])

    ds = Dataset(
        lon=lon, lat=lat, month=month, year=year, area_fraction=area_fraction,
        cnt=cnt, ba=ba, land_cover=land_cover, climate=climate,
        climate_names=climate_names, altitude=altitude,
        cnt_thresholds=cnt_t, ba_thresholds=ba_t,
        radius_km=radius_km, unit_scale=unit_scale,
        lon_width=lon_width, lat_height=lat_height,
        total_area=total_area, true_area=true_area, capacity=capacity,
        bap=bap,
        cnt_missing=np.flatnonzero(np.isnan(cnt)),
        ba_missing=np.flatnonzero(np.isnan(ba)),
        spatial_index=index,
    )
    for arr in (ds.lon, ds.lat, ds.month, ds.year, ds.area_fraction, ds.cnt,
                ds.ba, ds.land_cover, ds.climate, ds.altitude, ds.total_area,
                ds.true_area, ds.capacity, ds.bap):
        arr.setflags(write=False)
    return ds


# Canonical column names; a schema config remaps source headers onto them.
BASE_COLUMNS = ("lon", "lat", "month", "year", "area", "cnt", "ba", "altitude")
MISSING_TOKENS = {"", "NA"}


def _parse_value(raw: str, column: str, line: int) -> float:
    raw = raw.strip()
    if raw in MISSING_TOKENS:
        if column in ("cnt", "ba"):
            return math.nan
        raise IngestError(f"column {column} may not be missing", row=line)
    try:
        return float(raw)
    except ValueError:
        raise IngestError(f"cannot parse {column}={raw!r}", row=line) from None


def ingest(path, schema: dict | None = None, **dataset_kwargs) -> Dataset:
    """Read a CSV into a Dataset.

    schema maps canonical column names (lon, lat, month, year, area, cnt,
    ba, lc1..lc18, altitude) to the file's header names; unmapped names
    are used as-is. Climate covariates are every remaining column
    starting with "clim". Missing cnt/ba cells are empty or "NA".
    Row numbers in errors are 1-based file lines (header is line 1).
    """
    schema = schema or {}

    def source(name):
        return schema.get(name, name)

    columns = {name: [] for name in BASE_COLUMNS}
    lc_names = [f"lc{k}" for k in range(1, N_LAND_COVER + 1)]
    for name in lc_names:
        columns[name] = []
    climate_cols: list[str] = []
    seen_keys: dict = {}

    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError("empty file")
        mapped = {source(n) for n in list(columns)}
        missing_headers = mapped - set(reader.fieldnames)
        if missing_headers:
            raise IngestError(f"missing columns: {sorted(missing_headers)}")
        climate_cols = [h for h in reader.fieldnames
                        if h not in mapped and h.startswith("clim")]
        for name in climate_cols:
            columns[name] = []

        for record in reader:
            line = reader.line_num
            if None in record or any(v is None for v in record.values()):
                raise IngestError("wrong number of fields", row=line)
            for name in list(columns):
                src = source(name) if name not in climate_cols else name
                columns[name].append(_parse_value(record[src], name, line))
            key = (columns["lon"][-1], columns["lat"][-1],
                   columns["month"][-1], columns["year"][-1])
            if key in seen_keys:
                raise IngestError(
                    f"duplicate (lon, lat, month, year) key {key}, "
                    f"first seen at row {seen_keys[key]}", row=line)
            seen_keys[key] = line
            if not (columns["area"][-1] > 0.0):
                raise IngestError(
                    f"area fraction must be positive, got {columns['area'][-1]}",
                    row=line)

    if not columns["lon"]:
        raise IngestError("no data rows")

    n = len(columns["lon"])
    land_cover = np.column_stack([columns[name] for name in lc_names])
    climate = (np.column_stack([columns[c] for c in climate_cols])
               if climate_cols else np.empty((n, 0)))
    try:
        return build_dataset(
            lon=columns["lon"], lat=columns["lat"],
            month=columns["month"], year=columns["year"],
            area_fraction=columns["area"], cnt=columns["cnt"], ba=columns["ba"],
            land_cover=land_cover, climate=climate,
            altitude=columns["altitude"], climate_names=tuple(climate_cols),
            **dataset_kwargs)
    except DataError as exc:
        raise IngestError(str(exc)) from exc


def write_csv(dataset: Dataset, path) -> None:
    """Export a Dataset in the canonical column layout (round-trippable)."""
    lc_names = [f"lc{k}" for k in range(1, N_LAND_COVER + 1)]
    header = list(BASE_COLUMNS) + lc_names + list(dataset.climate_names)

    def fmt(x):
        return "NA" if isinstance(x, float) and math.isnan(x) else f"{x:.17g}"

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [fmt(float(dataset.lon[i])), fmt(float(dataset.lat[i])),
                   int(dataset.month[i]), int(dataset.year[i]),
                   fmt(float(dataset.area_fraction[i])),
                   fmt(float(dataset.cnt[i])), fmt(float(dataset.ba[i])),
                   fmt(float(dataset.altitude[i]))]
            row += [fmt(float(v)) for v in dataset.land_cover[i]]
            row += [fmt(float(v)) for v in dataset.climate[i]]
            writer.writerow(row)


@dataclass(frozen=True)
class PredictionTable:
    """Predicted CDF rows for the missing indices of one variable."""

    variable: str              # "cnt" or "ba"
    indices: np.ndarray        # missing observation ids, ascending
    thresholds: np.ndarray
    rows: np.ndarray           # (len(indices), len(thresholds))

    def __post_init__(self):
        if self.rows.shape != (self.indices.size, self.thresholds.size):
            raise DataError("prediction table shape mismatch")

    def row_for(self, index: int) -> np.ndarray:
        pos = np.searchsorted(self.indices, index)
        if pos >= self.indices.size or self.indices[pos] != index:
            raise DataError(f"index {index} not in table")
        return self.rows[pos]
