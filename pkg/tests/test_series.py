import numpy as np
import pytest

from triocast import DataError, FeatureTable, TimeSeries, series_from_values


class TestTimeSeries:
    def test_defaults_to_all_observed(self):
        s = series_from_values([1.0, 2.0, 3.0])
        assert s.is_complete and s.n_missing == 0

    def test_rejects_non_monotone_index(self):
        with pytest.raises(DataError, match="non-monotone"):
            TimeSeries([2005, 2005, 2006], [1.0, 2.0, 3.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError, match="equal lengths"):
            TimeSeries([2005, 2006], [1.0, 2.0, 3.0])

    def test_rejects_empty(self):
        with pytest.raises(DataError, match="at least one point"):
            TimeSeries([], [])

    def test_rejects_non_finite_observed_value(self):
        with pytest.raises(DataError, match="finite"):
            TimeSeries([2005, 2006], [1.0, np.inf])

    def test_nan_allowed_when_masked(self):
        s = TimeSeries([2005, 2006], [1.0, np.nan], observed=[True, False])
        assert s.n_missing == 1
        with pytest.raises(DataError, match="missing"):
            s.require_complete()


class TestFeatureTable:
    def _table(self):
        years = np.arange(2005, 2008)
        cols = {
            "a": TimeSeries(years, [1.0, 2.0, 3.0]),
            "b": TimeSeries(years, [4.0, 5.0, 6.0]),
        }
        return FeatureTable(years, cols, {"a": "indicator", "b": "target"})

    def test_role_views(self):
        t = self._table()
        assert t.indicator_names == ["a"] and t.target_names == ["b"]

    def test_matrix_stacks_columns(self):
        t = self._table()
        assert t.matrix(["a", "b"]).shape == (3, 2)

    def test_rejects_disjoint_index(self):
        years = np.arange(2005, 2008)
        cols = {
            "a": TimeSeries(years, [1.0, 2.0, 3.0]),
            "b": TimeSeries(np.arange(2006, 2009), [4.0, 5.0, 6.0]),
        }
        with pytest.raises(DataError, match="share"):
            FeatureTable(years, cols, {"a": "indicator", "b": "target"})

    def test_rejects_missing_role(self):
        years = np.arange(2005, 2008)
        cols = {"a": TimeSeries(years, [1.0, 2.0, 3.0])}
        with pytest.raises(DataError, match="without a role"):
            FeatureTable(years, cols, {})

    def test_rejects_unknown_role_name(self):
        years = np.arange(2005, 2008)
        cols = {"a": TimeSeries(years, [1.0, 2.0, 3.0])}
        with pytest.raises(DataError, match="unknown column"):
            FeatureTable(years, cols, {"a": "indicator", "zz": "target"})

    def test_head_slices_all_columns(self):
        t = self._table().head(2)
        assert t.n_rows == 2
        assert list(t.column("b").values) == [4.0, 5.0]

    def test_missing_rate_counts_cells(self):
        years = np.arange(2005, 2008)
        cols = {
            "a": TimeSeries(years, [1.0, np.nan, 3.0], observed=[True, False, True]),
            "b": TimeSeries(years, [4.0, 5.0, 6.0]),
        }
        t = FeatureTable(years, cols, {"a": "indicator", "b": "target"})
        assert t.missing_rate == pytest.approx(1 / 6)
