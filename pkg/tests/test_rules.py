"""Inference-rule tests."""

import numpy as np
import pytest

from firemarg.data import PredictionTable, build_dataset
from firemarg.rules import (
    ALL_ONE,
    TAIL_ONE,
    ZERO_AT_ZERO,
    ForcedPrediction,
    anomalous_rows,
    apply_overrides,
    calibrate_water_cut,
    deduce_from_pair,
    deduce_from_water,
    resolve_forced,
    saturation_flags,
)

from conftest import make_grid_columns


def _ds(**tweaks):
    cols = make_grid_columns(nx=4, ny=4, seed=20)
    for key, edits in tweaks.items():
        col = cols[key].copy()
        for idx, value in edits.items():
            col[idx] = value
        cols[key] = col
    return build_dataset(**cols)


class TestPairRule:
    def test_zero_ba_forces_zero_cnt(self):
        ds = _ds(cnt={2: np.nan}, ba={2: 0.0})
        forced = deduce_from_pair(ds)
        assert any(f.index == 2 and f.variable == "cnt" and f.kind == ALL_ONE
                   for f in forced)

    def test_positive_ba_forces_positive_cnt(self):
        ds = _ds(cnt={3: np.nan}, ba={3: 40.0})
        forced = deduce_from_pair(ds)
        match = [f for f in forced if f.index == 3]
        assert match[0].kind == ZERO_AT_ZERO and match[0].variable == "cnt"

    def test_symmetric_for_ba(self):
        ds = _ds(ba={5: np.nan}, cnt={5: 0.0, 6: 4.0}, **{})
        ds2 = _ds(ba={5: np.nan, 6: np.nan}, cnt={5: 0.0, 6: 4.0})
        forced = {f.index: f for f in deduce_from_pair(ds2)}
        assert forced[5].kind == ALL_ONE and forced[5].variable == "ba"
        assert forced[6].kind == ZERO_AT_ZERO

    def test_both_missing_no_deduction(self):
        ds = _ds(cnt={7: np.nan}, ba={7: np.nan})
        assert all(f.index != 7 for f in deduce_from_pair(ds))


class TestWaterRule:
    def test_strict_cut(self):
        cols = make_grid_columns(nx=4, ny=1, seed=21)
        cols["cnt"] = np.array([np.nan, np.nan, np.nan, 2.0])
        lc = cols["land_cover"].copy()
        lc[0, 17] = 0.95
        lc[1, 17] = 0.94
        lc[2, 17] = 0.0
        cols["land_cover"] = lc
        ds = build_dataset(**cols)
        forced = deduce_from_water(ds, water_cut=0.94)
        assert [f.index for f in forced] == [0]
        assert forced[0].kind == ALL_ONE

    def test_covers_both_variables(self):
        cols = make_grid_columns(nx=3, ny=1, seed=22)
        cols["cnt"] = np.array([np.nan, 1.0, 0.0])
        cols["ba"] = np.array([np.nan, np.nan, 0.0])
        lc = cols["land_cover"].copy()
        lc[:, 17] = 0.99
        cols["land_cover"] = lc
        ds = build_dataset(**cols)
        forced = deduce_from_water(ds)
        assert {(f.index, f.variable) for f in forced} == {(0, "cnt"), (0, "ba"), (1, "ba")}


class TestCalibration:
    def _water_ds(self):
        cols = make_grid_columns(nx=6, ny=6, seed=23)
        lc = cols["land_cover"].copy()
        water = np.arange(12)
        lc[:, 17] = 0.0
        lc[water, 17] = 0.92
        cols["land_cover"] = lc
        cols["cnt"][water] = 0.0
        cols["ba"][water] = 0.0
        # keep some dry-land zeros too so the signal is specific to water
        return build_dataset(**cols)

    def test_finds_planted_cut(self):
        ds = self._water_ds()
        cut = calibrate_water_cut(ds, target_prob=0.999)
        assert cut <= 0.91
        # everything above the returned cut really is all-zero
        above = ds.land_cover[:, 17] > cut
        assert np.all(ds.cnt[above] == 0)

    def test_no_qualifying_cut_returns_default(self):
        cols = make_grid_columns(nx=4, ny=4, seed=24)
        cols["cnt"] = np.maximum(cols["cnt"], 1.0)  # zeros nowhere
        ds = build_dataset(**cols)
        assert calibrate_water_cut(ds, target_prob=0.999) == 0.94

    def test_zero_target_returns_smallest_cut(self):
        ds = self._water_ds()
        grid = np.array([0.5, 0.7, 0.9])
        assert calibrate_water_cut(ds, target_prob=0.0, grid=grid) == 0.5

    def test_anomalies_detected(self):
        ds = _ds(cnt={1: 3.0}, ba={1: 0.0})
        assert 1 in anomalous_rows(ds)


class TestResolveAndApply:
    def test_pair_beats_water(self):
        pair = [ForcedPrediction(4, "cnt", ZERO_AT_ZERO, "pair")]
        water = [ForcedPrediction(4, "cnt", ALL_ONE, "water")]
        resolved = resolve_forced(pair, water)
        assert resolved[(4, "cnt", "value")].kind == ZERO_AT_ZERO
        assert len(resolved) == 1

    def test_tail_one_kept_alongside(self):
        pair = [ForcedPrediction(4, "ba", ZERO_AT_ZERO, "pair")]
        sat = [ForcedPrediction(4, "ba", TAIL_ONE, "saturation",
                                tail_flags=np.array([False, False, True]))]
        resolved = resolve_forced(pair, sat)
        assert len(resolved) == 2

    def test_apply_all_one(self):
        table = PredictionTable("cnt", np.array([2, 5]), np.array([0.0, 1.0, 5.0]),
                                np.full((2, 3), 0.3))
        resolved = resolve_forced([ForcedPrediction(5, "cnt", ALL_ONE, "pair")])
        out = apply_overrides(table, resolved)
        np.testing.assert_allclose(out.rows[1], 1.0)
        np.testing.assert_allclose(out.rows[0], 0.3)
        # original untouched
        np.testing.assert_allclose(table.rows[1], 0.3)

    def test_apply_zero_at_zero(self):
        table = PredictionTable("cnt", np.array([2]), np.array([0.0, 1.0, 5.0]),
                                np.array([[0.4, 0.6, 0.9]]))
        resolved = resolve_forced([ForcedPrediction(2, "cnt", ZERO_AT_ZERO, "pair")])
        out = apply_overrides(table, resolved)
        np.testing.assert_allclose(out.rows[0], [0.0, 0.6, 0.9])
        assert np.all(np.diff(out.rows[0]) >= 0)

    def test_apply_tail_one(self):
        flags = np.array([False, False, True, True])
        table = PredictionTable("ba", np.array([7]), np.array([0.0, 1.0, 50.0, 100.0]),
                                np.array([[0.2, 0.5, 0.8, 0.9]]))
        resolved = resolve_forced([ForcedPrediction(7, "ba", TAIL_ONE, "saturation",
                                                    tail_flags=flags)])
        out = apply_overrides(table, resolved)
        np.testing.assert_allclose(out.rows[0], [0.2, 0.5, 1.0, 1.0])

    def test_wrong_variable_ignored(self):
        table = PredictionTable("ba", np.array([2]), np.array([0.0, 1.0]),
                                np.array([[0.4, 0.6]]))
        resolved = resolve_forced([ForcedPrediction(2, "cnt", ALL_ONE, "pair")])
        out = apply_overrides(table, resolved)
        np.testing.assert_allclose(out.rows, table.rows)


def test_saturation_flags_small_capacity():
    cols = make_grid_columns(nx=3, ny=1, seed=25)
    cols["ba"] = np.array([np.nan, np.nan, 10.0])
    # shrink one cell's burnable area so high thresholds exceed capacity
    cols["area_fraction"] = np.array([1e-4, 0.9, 0.9])
    ds = build_dataset(**cols)
    forced = {f.index: f for f in saturation_flags(ds)}
    assert 0 in forced
    flags = forced[0].tail_flags
    assert flags[-1]
    assert not flags[0]
    scaled = ds.ba_thresholds / ds.capacity[0]
    np.testing.assert_array_equal(flags, (scaled >= 1.0) & (ds.ba_thresholds > 0))
    assert 1 not in forced
