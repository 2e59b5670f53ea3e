"""Deterministic inference rules for missing values.

Two sources of certainty exist before any model is fitted: the paired
variable (zero burnt area forces a zero count and vice versa; a
positive value forces the other variable positive) and water cells
(land-cover class 18 above a cut is practically certain to be zero for
both variables). A third, geometric rule marks every rescaled
burnt-area threshold at or above the cell capacity as probability 1.

Rule outputs are overrides applied to predicted rows after model
fitting; deduced values are never inserted into neighborhood samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset, PredictionTable
from .errors import DataError
from .geo import rescaled_thresholds

log = logging.getLogger(__name__)

ALL_ONE = "all_one"
ZERO_AT_ZERO = "zero_at_zero"
TAIL_ONE = "tail_one"

DEFAULT_WATER_CUT = 0.94
DEFAULT_WATER_TARGET = 0.999
WATER_LC = 18


@dataclass(frozen=True)
class ForcedPrediction:
    index: int
    variable: str              # "cnt" or "ba"
    kind: str                  # ALL_ONE | ZERO_AT_ZERO | TAIL_ONE
    source: str                # "pair" | "water" | "saturation"
    tail_flags: np.ndarray | None = None   # TAIL_ONE only


def deduce_from_pair(ds: Dataset) -> list[ForcedPrediction]:
    """Cross-variable deduction where exactly one of the pair is known.

    A known zero on either side forces the other to zero (CDF is 1
    everywhere); a known positive forces the other positive (CDF is 0
    at threshold 0). Indices missing both variables yield nothing.
    """
    forced = []
    for i in ds.cnt_missing:
        bap = ds.bap[i]
        if np.isnan(bap):
            continue
        kind = ALL_ONE if bap == 0.0 else ZERO_AT_ZERO
        forced.append(ForcedPrediction(int(i), "cnt", kind, "pair"))
    for i in ds.ba_missing:
        cnt = ds.cnt[i]
        if np.isnan(cnt):
            continue
        kind = ALL_ONE if cnt == 0.0 else ZERO_AT_ZERO
        forced.append(ForcedPrediction(int(i), "ba", kind, "pair"))
    return forced


def deduce_from_water(ds: Dataset, water_cut: float = DEFAULT_WATER_CUT) -> list[ForcedPrediction]:
    """Force zeros for missing values on water cells: lc18 strictly
    above the cut."""
    water = ds.land_cover[:, WATER_LC - 1] > water_cut
    forced = []
    for i in ds.cnt_missing:
        if water[i]:
            forced.append(ForcedPrediction(int(i), "cnt", ALL_ONE, "water"))
    for i in ds.ba_missing:
        if water[i]:
            forced.append(ForcedPrediction(int(i), "ba", ALL_ONE, "water"))
    return forced


def saturation_flags(ds: Dataset) -> list[ForcedPrediction]:
    """TAIL_ONE overrides for burnt-area thresholds at or above capacity."""
    forced = []
    for i in ds.ba_missing:
        _, flags = rescaled_thresholds(ds.ba_thresholds, float(ds.capacity[i]))
        if np.any(flags):
            forced.append(ForcedPrediction(int(i), "ba", TAIL_ONE, "saturation",
                                           tail_flags=flags))
    return forced


def anomalous_rows(ds: Dataset) -> np.ndarray:
    """Indices where both variables are observed but disagree about zero
    (positive count with zero burnt area, or the reverse). These are
    aggregation artefacts; they are logged and kept out of calibration."""
    both = ~np.isnan(ds.cnt) & ~np.isnan(ds.bap)
    bad = both & (((ds.cnt > 0) & (ds.bap == 0.0)) | ((ds.cnt == 0) & (ds.bap > 0.0)))
    return np.flatnonzero(bad)


def default_water_grid() -> np.ndarray:
    return np.round(np.arange(0.50, 1.00, 0.01), 2)


def calibrate_water_cut(ds: Dataset, target_prob: float = DEFAULT_WATER_TARGET,
                        grid=None) -> float:
    """Smallest grid cut whose above-cut cells are almost surely zero.

    Scans the cut grid in increasing order and returns the first cut c
    such that, among non-missing non-anomalous observations with
    lc18 > c, the zero fraction strictly exceeds target_prob for both
    variables. Falls back to the conventional 0.94 when no cut
    qualifies.
    """
    grid = default_water_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DataError("cut grid must be nonempty")
    exclude = np.zeros(ds.n, dtype=bool)
    anomalies = anomalous_rows(ds)
    if anomalies.size:
        log.warning("excluding %d anomalous rows from water calibration",
                    anomalies.size)
        exclude[anomalies] = True
    lc18 = ds.land_cover[:, WATER_LC - 1]
    cnt_ok = ~np.isnan(ds.cnt) & ~exclude
    ba_ok = ~np.isnan(ds.bap) & ~exclude
    for cut in np.sort(grid):
        above = lc18 > cut
        cnt_sel = above & cnt_ok
        ba_sel = above & ba_ok
        if not (np.any(cnt_sel) and np.any(ba_sel)):
            continue
        cnt_zero = np.count_nonzero(ds.cnt[cnt_sel] == 0) / np.count_nonzero(cnt_sel)
        ba_zero = np.count_nonzero(ds.bap[ba_sel] == 0) / np.count_nonzero(ba_sel)
        if cnt_zero > target_prob and ba_zero > target_prob:
            return float(cut)
    return DEFAULT_WATER_CUT


def resolve_forced(*rule_lists) -> dict[tuple[int, str], ForcedPrediction]:
    """Merge rule outputs; earlier lists take precedence on conflicts.

    Callers pass the pair deductions before the water rule: the pair
    rule is a logical certainty while the water rule is empirical, so a
    ZERO_AT_ZERO from the pair beats an ALL_ONE from water. TAIL_ONE is
    orthogonal and kept alongside under its own key.
    """
    resolved: dict[tuple[int, str], ForcedPrediction] = {}
    for rules in rule_lists:
        for fp in rules:
            key = (fp.index, fp.variable, TAIL_ONE if fp.kind == TAIL_ONE else "value")
            if key in resolved:
                if resolved[key].kind != fp.kind:
                    log.warning(
                        "conflicting rules at index %d (%s): keeping %s from %s, "
                        "dropping %s from %s", fp.index, fp.variable,
                        resolved[key].kind, resolved[key].source, fp.kind, fp.source)
                continue
            resolved[key] = fp
    return resolved


def apply_overrides(table: PredictionTable, resolved: dict) -> PredictionTable:
    """Return a copy of the table with forced rows written in.

    ALL_ONE replaces the whole row with ones; ZERO_AT_ZERO pins the
    zero-threshold entry to 0; TAIL_ONE pins flagged entries to 1. All
    three preserve row monotonicity.
    """
    rows = table.rows.copy()
    zero_pos = np.flatnonzero(table.thresholds == 0.0)
    for (index, variable, _), fp in resolved.items():
        if variable != table.variable:
            continue
        pos = np.searchsorted(table.indices, index)
        if pos >= table.indices.size or table.indices[pos] != index:
            continue
        if fp.kind == ALL_ONE:
            rows[pos] = 1.0
        elif fp.kind == ZERO_AT_ZERO:
            if zero_pos.size:
                rows[pos, zero_pos[0]] = 0.0
        else:
            rows[pos, fp.tail_flags] = 1.0
    return PredictionTable(variable=table.variable, indices=table.indices,
                           thresholds=table.thresholds, rows=rows)
