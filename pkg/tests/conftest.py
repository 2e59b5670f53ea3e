import numpy as np
import pytest

from firemarg.data import build_dataset


def make_grid_columns(nx=8, ny=8, months=(6,), years=(2000,),
                      lon0=-120.0, lat0=35.0, spacing=0.5, seed=0,
                      cnt_missing_frac=0.0, ba_missing_frac=0.0):
    """Columns for a regular lon/lat grid replicated over (month, year)."""
    rng = np.random.default_rng(seed)
    cell_lon, cell_lat = np.meshgrid(lon0 + spacing * np.arange(nx),
                                     lat0 + spacing * np.arange(ny))
    cell_lon = cell_lon.ravel()
    cell_lat = cell_lat.ravel()
    blocks = [(m, y) for y in years for m in months]
    n = cell_lon.size * len(blocks)
    lon = np.tile(cell_lon, len(blocks))
    lat = np.tile(cell_lat, len(blocks))
    month = np.repeat([m for m, _ in blocks], cell_lon.size)
    year = np.repeat([y for _, y in blocks], cell_lon.size)
    cnt = rng.poisson(2.0, n).astype(float)
    ba = rng.exponential(50.0, n)
    ba[cnt == 0] = 0.0
    if cnt_missing_frac:
        cnt[rng.random(n) < cnt_missing_frac] = np.nan
    if ba_missing_frac:
        ba[rng.random(n) < ba_missing_frac] = np.nan
    return {
        "lon": lon, "lat": lat, "month": month, "year": year,
        "area_fraction": rng.uniform(0.5, 1.0, n),
        "cnt": cnt, "ba": ba,
        "land_cover": rng.uniform(0.0, 0.05, (n, 18)),
        "climate": np.column_stack([rng.normal(15.0, 5.0, n),
                                    rng.normal(80.0, 20.0, n)]),
        "climate_names": ("clim_temp", "clim_precip"),
        "altitude": rng.uniform(0.0, 2000.0, n),
    }


@pytest.fixture
def grid_ds():
    return build_dataset(**make_grid_columns())
