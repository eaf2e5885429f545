"""
Tests for the error metrics and the score rate evaluation mechanism.
"""
import math
import os

import numpy as np
import pandas as pd
import pytest

from evaluation import (ErrorTable, ScoreReport, WeightVector, best_models, error_increase_pct, fixtures_directory,
                        load_fixture, load_published_scores, mse, noise_increase_table, rmse, score_rate_bs,
                        score_rate_ml, score_table, weighted_score)
from utility import ConfigError, DataError, NumericalError

input_weights = {'In1': 1, 'In2': 1, 'In3': 2, 'In4': 2, 'In5': 1, 'In6': 1}
moneyness_weights = {'ALL': 1, 'ITM': 1, 'ATM': 1, 'OTM': 1}


def table_from(rows, **designations):
    table = ErrorTable(**designations)
    for model, errors in rows.items():
        for sub, error in errors.items():
            table.set_error(model, sub, error)
    return table


class TestMetrics:
    def test_mse_and_rmse(self):
        assert mse([1.0, 2.0], [1.0, 4.0]) == 2.0
        assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(math.sqrt(2.0))

    def test_mismatched_lengths_are_rejected(self):
        with pytest.raises(DataError):
            rmse([1.0, 2.0], [1.0])
        with pytest.raises(DataError):
            mse([], [])

    def test_score_rates(self):
        assert score_rate_bs(0.09, 0.12) == pytest.approx(25.0)
        assert score_rate_bs(0.15, 0.12) == pytest.approx(-25.0)
        assert score_rate_ml(0.05, 0.2) == pytest.approx(75.0)

    def test_zero_reference_errors_are_numerical_failures(self):
        with pytest.raises(NumericalError):
            score_rate_bs(0.1, 0.0)
        with pytest.raises(NumericalError):
            score_rate_ml(0.1, 0.0)
        with pytest.raises(NumericalError):
            error_increase_pct(0.0, 0.1)


class TestWeights:
    def test_weighted_mean(self):
        assert weighted_score({'a': 10.0, 'b': 40.0}, {'a': 2, 'b': 1}) == pytest.approx(20.0)

    def test_absent_rates_are_left_out(self, capsys):
        assert weighted_score({'a': 10.0, 'b': math.nan}, {'a': 2, 'b': 1}, 'RF') == pytest.approx(10.0)
        assert 'RF has no rate for b' in capsys.readouterr().out

    def test_weights_must_be_positive(self):
        with pytest.raises(ConfigError):
            WeightVector({'a': 0})

    def test_parse_in_sub_experiment_order(self):
        weights = WeightVector.parse('1, 1,2,2,1,1', list(input_weights))
        assert weights.weights == {sub: float(weight) for sub, weight in input_weights.items()}

    @pytest.mark.parametrize('text', ['1,1', '1,1,2,2,1,x'])
    def test_bad_weight_text_is_rejected(self, text):
        with pytest.raises(ConfigError):
            WeightVector.parse(text, list(input_weights))

    def test_weights_must_cover_the_sub_experiments(self):
        with pytest.raises(ConfigError):
            weighted_score({'a': 1.0, 'b': 2.0}, {'a': 1})


class TestScoreTable:
    def test_scores_against_bs_and_worst_learned_model(self):
        table = table_from({'BS': {'x': 0.2, 'y': 0.1}, 'BSM': {'x': 0.3, 'y': 0.3},
                            'A': {'x': 0.1, 'y': 0.05}, 'B': {'x': 0.15, 'y': 0.1}})
        report = score_table(table, {'x': 1, 'y': 3})
        assert list(report.scores.index) == ['A', 'B']
        # A: rates_bs (50, 50); rates_ml against B (33.33.., 50).
        assert report.score('A') == pytest.approx((50.0, (100 / 3 + 3 * 50) / 4))
        assert report.score('B') == pytest.approx(((25.0 + 0.0) / 4, 0.0))

    def test_missing_bs_row_is_a_config_error(self):
        table = table_from({'A': {'x': 0.1}})
        with pytest.raises(ConfigError):
            score_table(table, {'x': 1})

    def test_absent_cells_are_skipped(self, capsys):
        table = table_from({'BS': {'x': 0.2, 'y': 0.2}, 'A': {'x': 0.1, 'y': math.nan}, 'B': {'x': 0.2, 'y': 0.1}})
        report = score_table(table, {'x': 1, 'y': 1})
        assert report.score('A')[0] == pytest.approx(50.0)
        assert 'A has no rate for y' in capsys.readouterr().out

    def test_best_models_ignore_absent_cells(self):
        table = table_from({'A': {'x': 0.1, 'y': math.nan}, 'B': {'x': 0.2, 'y': 0.3}})
        assert best_models(table) == {'x': 'A', 'y': 'B'}

    def test_negative_errors_are_rejected(self):
        with pytest.raises(DataError):
            ErrorTable().set_error('A', 'x', -0.1)


class TestPublishedTables:
    @pytest.mark.parametrize('name, weights', [('input_experiment', input_weights),
                                               ('moneyness_experiment', moneyness_weights)])
    def test_published_scores_are_reproduced(self, name, weights):
        report = score_table(load_fixture(f'{name}_rmse'), weights)
        published = load_published_scores(f'{name}_scores')
        assert len(published.scores) == 9
        for model, row in published.scores.iterrows():
            score_bs, score_ml = report.score(model)
            assert score_bs == pytest.approx(row['score_bs'], abs=0.01)
            assert score_ml == pytest.approx(row['score_ml'], abs=0.01)

    def test_named_published_values(self):
        input_report = score_table(load_fixture('input_experiment_rmse'), input_weights)
        assert input_report.score('XGBoost') == pytest.approx((36.2008, 44.3921), abs=0.01)
        assert input_report.score('LGBM') == pytest.approx((34.8425, 43.6664), abs=0.01)
        assert input_report.score('CatBoost') == pytest.approx((-3.2677, 10.9929), abs=0.01)
        moneyness_report = score_table(load_fixture('moneyness_experiment_rmse'), moneyness_weights)
        assert moneyness_report.score('LGBM') == pytest.approx((67.0907, 69.7089), abs=0.01)

    @pytest.mark.parametrize('name, weights', [('input_experiment', input_weights),
                                               ('moneyness_experiment', moneyness_weights)])
    def test_including_bs_lowers_every_score(self, name, weights):
        report = score_table(load_fixture(f'{name}_rmse'), weights)
        assert (report.scores['score_bs'] < report.scores['score_ml']).all()

    def test_noise_increase_is_reproduced(self):
        increases = noise_increase_table(load_fixture('noise_experiment_mse'))
        published = pd.read_csv(os.path.join(fixtures_directory, 'noise_experiment_increase.csv'), comment='#',
                                index_col='model')['increase_pct']
        assert set(increases.index) == set(published.index)
        for model, increase in published.items():
            assert increases[model] == pytest.approx(increase, abs=0.02)
        assert increases['NGBoost'] == pytest.approx(410.17, abs=0.02)
        assert increases['MLP'] == pytest.approx(-66.59, abs=0.02)

    def test_fixture_designations_come_from_the_sidecar(self):
        assert load_fixture('input_experiment_rmse').excluded_from_ml_max == ['BS', 'BSM']
        noise = load_fixture('noise_experiment_mse')
        assert noise.bs_row is None and noise.metric == 'mse'

    def test_unknown_fixture_is_a_config_error(self):
        with pytest.raises(ConfigError):
            load_fixture('no_such_table')


class TestErrorTableFiles:
    def test_designations_survive_a_save(self, tmp_path):
        table = table_from({'Base': {'x': 0.2, 'y': 0.25}, 'A': {'x': 0.1, 'y': math.nan}},
                           bs_row='Base', excluded_from_ml_max=['Base'], metric='mse')
        path = str(tmp_path / 'errors.csv')
        table.to_csv(path)
        loaded = ErrorTable.from_csv(path)
        assert loaded.designations() == table.designations()
        assert loaded.models == ['Base', 'A'] and loaded.sub_experiments == ['x', 'y']
        assert math.isnan(loaded.error('A', 'y'))
        assert loaded.error('Base', 'y') == 0.25

    def test_arguments_override_the_sidecar(self):
        path = os.path.join(fixtures_directory, 'input_experiment_rmse.csv')
        table = ErrorTable.from_csv(path, bs_row='BSM', excluded_from_ml_max=['BSM'])
        assert table.bs_row == 'BSM' and table.excluded_from_ml_max == ['BSM']
        assert 'BS' in table.scored_models()

    def test_duplicate_cells_are_rejected(self, tmp_path):
        path = tmp_path / 'errors.csv'
        path.write_text('model,sub,error\nA,x,0.1\nA,x,0.2\n')
        with pytest.raises(DataError, match='appears twice'):
            ErrorTable.from_csv(str(path))

    def test_non_numeric_error_is_rejected(self, tmp_path):
        path = tmp_path / 'errors.csv'
        path.write_text('model,sub,error\nA,x,abc\n')
        with pytest.raises(DataError, match='Row 1'):
            ErrorTable.from_csv(str(path))

    def test_score_report_file(self, tmp_path):
        report = ScoreReport(pd.DataFrame({'score_bs': [1.5, -2.0], 'score_ml': [3.0, 4.25]},
                                          index=pd.Index(['A', 'B'], name='model')))
        path = str(tmp_path / 'scores.csv')
        report.to_csv(path)
        loaded = ScoreReport.from_csv(path)
        assert np.array_equal(loaded.scores.to_numpy(), report.scores.to_numpy())
        assert list(loaded.scores.index) == ['A', 'B']
