"""
Tests for the design matrix code.
"""
import math

import numpy as np
import pytest

from option.features import assemble, input_configs, sliding_window, sort_by_date, surviving_row_count
from utility import ConfigError, DataError


class TestAssemble:
    def test_columns_follow_the_configuration(self, record_factory):
        record = record_factory(spot=110.0, strike=100.0)
        for name, columns in input_configs.items():
            assert assemble([record], name).columns == columns

    def test_feature_values(self, record_factory):
        matrix = assemble([record_factory(spot=110.0, strike=100.0, price=12.5)], 'STANDARD')
        assert matrix.X[0] == pytest.approx([1.1, 0.25, 0.02, 0.2, 0.024])
        assert matrix.y[0] == 12.5

    def test_explicit_feature_list(self, record_factory):
        matrix = assemble([record_factory(delta=0.61)], ['delta', 'K'])
        assert matrix.X.tolist() == [[0.61, 100.0]]

    def test_empty_record_list(self):
        matrix = assemble([], 'In1')
        assert matrix.X.shape == (0, 4)
        assert matrix.rows == 0

    def test_missing_sigma_names_the_record(self, record_factory):
        records = [record_factory(), record_factory(contract_id='P7', sigma=math.nan)]
        assemble(records, 'In1')
        with pytest.raises(DataError, match='Record 2 \\(P7\\).*sigma'):
            assemble(records, 'In3')

    def test_unknown_names_are_rejected(self, record_factory):
        with pytest.raises(ConfigError):
            assemble([record_factory()], 'In9')
        with pytest.raises(ConfigError):
            assemble([record_factory()], ['S', 'gamma'])


class TestSlidingWindow:
    def setup_method(self):
        self.window_size = 2

    def records(self, record_factory):
        # Interleaved contracts: A has 5 quotes, B has 3, C has 1.
        days = [('A', 1), ('B', 1), ('A', 2), ('C', 2), ('B', 2), ('A', 3), ('A', 4), ('B', 3), ('A', 5)]
        return [record_factory(contract_id=contract_id, day=day, spot=100.0 + day,
                               strike=90.0 if contract_id == 'A' else 95.0)
                for contract_id, day in days]

    def test_lags_come_from_the_same_contract(self, record_factory):
        matrix = sliding_window(assemble(self.records(record_factory), ['S', 'K']), self.window_size)
        assert matrix.columns == ['S', 'K', 'S_lag1', 'K_lag1', 'S_lag2', 'K_lag2']
        keys = [(contract_id, date.day) for contract_id, date in matrix.keys]
        assert keys == [('A', 4), ('A', 5), ('A', 6), ('B', 4)]
        a_row = matrix.X[keys.index(('A', 6))]
        assert a_row.tolist() == [105.0, 90.0, 104.0, 90.0, 103.0, 90.0]
        b_row = matrix.X[keys.index(('B', 4))]
        assert b_row.tolist() == [103.0, 95.0, 102.0, 95.0, 101.0, 95.0]

    def test_targets_and_records_follow_their_rows(self, record_factory):
        matrix = sliding_window(assemble(self.records(record_factory), ['S']), self.window_size)
        assert [record.spot for record in matrix.records] == matrix.X[:, 0].tolist()
        assert len(matrix.y) == matrix.rows

    def test_surviving_row_count(self, record_factory):
        matrix = assemble(self.records(record_factory), ['S'])
        assert surviving_row_count(matrix, self.window_size) == sliding_window(matrix, self.window_size).rows == 4
        assert sliding_window(matrix, 5).rows == 0

    def test_window_size_must_be_positive(self, record_factory):
        with pytest.raises(ConfigError):
            sliding_window(assemble(self.records(record_factory), ['S']), 0)

    def test_sort_by_date_is_stable(self, record_factory):
        matrix = sort_by_date(sliding_window(assemble(self.records(record_factory), ['S']), 1))
        dates = [key[1] for key in matrix.keys]
        assert dates == sorted(dates)
        assert [key[0] for key in matrix.keys] == ['A', 'B', 'A', 'B', 'A', 'A']

    def test_windowed_synthetic_matrix_has_no_gaps(self, synthetic_records):
        matrix = sliding_window(assemble(synthetic_records, 'STANDARD'), 5)
        assert matrix.rows == surviving_row_count(assemble(synthetic_records, 'STANDARD'), 5)
        assert not np.any(np.isnan(matrix.X))
