"""
Tests for the experiment harness: plans, parameter transfer, fixture runs, live runs and reports.
"""
import math
import os
from copy import deepcopy

import pytest

from evaluation import ErrorTable, rmse
from experiment import ExperimentPlan, ParameterStore, RunRecord, prepare_data
from option.data import DatasetSplit
from option.experiments import (InputExperiment, MoneynessExperiment, NoiseExperiment, WindowExperiment,
                                experiment_order, experiment_runners, run_all, run_noise_experiment)
from option.presentation import emit_report, error_decimals, preferred_arms
from settings import ExperimentName, Settings
from utility import ConfigError

input_subs = ['In1', 'In2', 'In3', 'In4', 'In5', 'In6']


def fixture_settings(tmp_path):
    return Settings().update({'logs_directory': str(tmp_path), 'fixture_mode': True})


small_hyperparameter_grids = {
    'CART': {'max_depth': [4, 6]},
    'RF': {'n_trees': [5], 'max_depth': [6]},
    'GB1': {'n_rounds': [30], 'learning_rate': [0.3], 'max_depth': [3]},
    'GB2': {'n_rounds': [30], 'learning_rate': [0.3], 'max_depth': [3], 'reg_lambda': [1.0]},
    'GB2-hist': {'n_rounds': [30], 'learning_rate': [0.3], 'max_depth': [3], 'reg_lambda': [1.0], 'n_bins': [16]},
    'NGB': {'n_rounds': [30], 'learning_rate': [0.3], 'max_depth': [3]},
}


def live_settings(tmp_path, **overrides):
    settings = Settings().update({
        'logs_directory': str(tmp_path),
        'generator': {
            'date_ranges': [{'start': '2020-01-01', 'end': '2020-08-31', 'size': 800, 'clean': False},
                            {'start': '2020-09-01', 'end': '2020-12-31', 'size': 300, 'clean': False},
                            {'start': '2021-09-01', 'end': '2021-12-31', 'size': 300, 'clean': True}],
            'strike_grid': [0.9, 0.95, 1.0, 1.05, 1.1],
            'maturities': [21, 42],
        },
        'hyperparameter_grids': deepcopy(small_hyperparameter_grids),
    })
    return settings.update(overrides)


def desk_settings(tmp_path):
    """The default synthetic market with small grids."""
    return Settings().update({'logs_directory': str(tmp_path),
                              'hyperparameter_grids': deepcopy(small_hyperparameter_grids)})


@pytest.fixture(scope='module')
def live_data(tmp_path_factory):
    return prepare_data(live_settings(tmp_path_factory.mktemp('data')))


class TestPlans:
    def test_strategy_sources(self, tmp_path):
        settings = fixture_settings(tmp_path)
        sources = {experiment_class.name: experiment_class(settings).plan().validate().tuning_source
                   for experiment_class in experiment_order}
        assert sources == {ExperimentName.input: ('input', 'In1'), ExperimentName.moneyness: ('moneyness', 'ALL'),
                           ExperimentName.window: ('input', 'In1'), ExperimentName.noise: ('moneyness', 'ALL')}

    def test_exactly_one_tuning_source(self):
        with pytest.raises(ConfigError):
            ExperimentPlan(name=ExperimentName.input, sub_experiments=['In1'], tune_in='In1',
                           inherit_from=('input', 'In1')).validate()
        with pytest.raises(ConfigError):
            ExperimentPlan(name=ExperimentName.input, sub_experiments=['In1']).validate()

    def test_tuning_sub_must_belong_to_the_plan(self):
        with pytest.raises(ConfigError):
            ExperimentPlan(name=ExperimentName.input, sub_experiments=['In1'], tune_in='ALL').validate()

    def test_weights_must_match_the_plan(self):
        with pytest.raises(ConfigError):
            ExperimentPlan(name=ExperimentName.input, sub_experiments=['In1', 'In2'], tune_in='In1',
                           weights={'In1': 1}).validate()

    def test_parameter_store_hands_out_copies(self):
        store = ParameterStore()
        store.put(('input', 'In1'), {'CART': {'max_depth': 4}})
        store.get(('input', 'In1'))['CART']['max_depth'] = 9
        assert store.get(('input', 'In1')) == {'CART': {'max_depth': 4}}
        assert store.has(['input', 'In1']) and not store.has(('moneyness', 'ALL'))


class TestFixtureRuns:
    def test_input_experiment_reproduces_published_scores(self, tmp_path):
        record = InputExperiment(fixture_settings(tmp_path)).run()
        assert record.fixture
        assert record.extras['published_score_deviation'] < 0.01
        assert record.score_report.score('XGBoost') == pytest.approx((36.2008, 44.3921), abs=0.01)
        assert os.path.exists(os.path.join(str(tmp_path), 'base', 'input', 'report.md'))

    def test_moneyness_experiment_reproduces_published_scores(self, tmp_path):
        record = MoneynessExperiment(fixture_settings(tmp_path)).run()
        assert record.extras['published_score_deviation'] < 0.01
        assert record.score_report.score('CatBoost') == pytest.approx((2.3131, 31.5545), abs=0.01)

    def test_window_experiment_reports_preferred_arms(self, tmp_path):
        record = WindowExperiment(fixture_settings(tmp_path)).run()
        assert record.score_report is None
        buckets, preferences = preferred_arms(record.error_table)
        assert buckets == ['ITM', 'ATM', 'OTM']
        assert preferences['CatBoost'] == {'ITM': 'OFF', 'ATM': 'OFF', 'OTM': 'OFF'}
        assert preferences['DeepForest']['ITM'] == 'ON'
        report = emit_report(record)
        assert '## Preferred window arm' in report
        assert error_decimals(record.error_table) == 5

    def test_noise_experiment_reports_the_increase(self, tmp_path):
        record = NoiseExperiment(fixture_settings(tmp_path)).run()
        assert record.error_table.metric == 'mse'
        assert record.extras['increase_pct']['NGBoost'] == pytest.approx(410.17, abs=0.02)
        assert '## Denoised error increase (%)' in emit_report(record)

    def test_saved_run_regenerates_the_same_report(self, tmp_path):
        record = InputExperiment(fixture_settings(tmp_path)).run()
        loaded = RunRecord.load(os.path.join(str(tmp_path), 'base', 'input'))
        for format_ in ('md', 'csv'):
            assert emit_report(loaded, format_) == emit_report(record, format_)

    def test_completed_runs_are_skipped_when_asked(self, tmp_path):
        settings = fixture_settings(tmp_path)
        InputExperiment(settings).run()
        settings.skip_completed_experiment = True
        record = InputExperiment(settings).run()
        assert record.fixture
        assert sorted(os.listdir(os.path.join(str(tmp_path), 'base'))) == ['input']

    def test_named_runners(self, tmp_path):
        settings = fixture_settings(tmp_path)
        records = [runner(settings) for runner in experiment_runners.values()]
        assert [record.plan.name for record in records] == [experiment_class.name
                                                            for experiment_class in experiment_order]
        assert run_noise_experiment(settings).error_table.metric == 'mse'

    def test_repeated_runs_get_new_directories(self, tmp_path):
        settings = fixture_settings(tmp_path)
        InputExperiment(settings).run()
        InputExperiment(settings).run()
        assert sorted(os.listdir(os.path.join(str(tmp_path), 'base'))) == ['input', 'input r1']


class TestReports:
    def test_markdown_marks_the_best_model_and_provenance(self, tmp_path):
        record = InputExperiment(fixture_settings(tmp_path)).run()
        report = emit_report(record, 'markdown')
        assert report.startswith('# input experiment\n')
        assert '- Hyperparameters: published error table (no training)' in report
        assert '| BS | 0.1270 |' in report
        xgboost_row = next(line for line in report.splitlines() if line.startswith('| XGBoost |')
                           and 'Against' not in line and line.count('|') == 4)
        score_bs, score_ml = (float(cell) for cell in xgboost_row.strip('| ').split(' | ')[1:])
        assert (score_bs, score_ml) == pytest.approx((36.2008, 44.3921), abs=0.01)

    def test_csv_report(self, tmp_path):
        record = MoneynessExperiment(fixture_settings(tmp_path)).run()
        lines = emit_report(record, 'csv').splitlines()
        assert lines[0].startswith('# moneyness experiment')
        assert lines[1] == 'section,model,column,value'
        lgbm_score = next(line for line in lines if line.startswith('score,LGBM,score_bs,'))
        assert float(lgbm_score.rsplit(',', 1)[1]) == pytest.approx(67.0907, abs=0.01)

    def test_unknown_format_is_rejected(self, tmp_path):
        record = InputExperiment(fixture_settings(tmp_path)).run()
        with pytest.raises(ConfigError):
            emit_report(record, 'html')

    def test_empty_roster_gives_a_header_only_document(self):
        plan = ExperimentPlan(name=ExperimentName.input, sub_experiments=[], tune_in=None, model_roster=[])
        report = emit_report(RunRecord(plan, error_table=ErrorTable()))
        assert report.startswith('# input experiment\n')
        assert '| Model |' in report
        assert report.count('\n| ') == 1


class TestLiveRuns:
    def test_analytic_baseline_ignores_the_input_configuration(self, tmp_path, live_data):
        settings = live_settings(tmp_path, model_roster=['BS'])
        record = InputExperiment(settings, data=live_data).run()
        errors = [record.error_table.error('BS', sub) for sub in input_subs]
        assert len(set(errors)) == 1 and errors[0] > 0
        assert record.hyperparameters == {'BS': {}}

    def test_window_without_history_leaves_absent_cells(self, tmp_path, live_data):
        settings = live_settings(tmp_path, model_roster=['BS', 'CART'], window_size=500)
        store = ParameterStore()
        store.put(('input', 'In1'), {'BS': {}, 'CART': {'max_depth': 4}})
        record = WindowExperiment(settings, store, data=live_data).run()
        assert math.isnan(record.error_table.error('CART', 'ATM ON'))
        assert not math.isnan(record.error_table.error('CART', 'ATM OFF'))
        assert any('window/ATM ON' in message for message in record.diagnostics)
        assert record.provenance == 'inherited from input/In1'

    def test_inheriting_without_a_source_tunes_it_first(self, tmp_path, live_data):
        settings = live_settings(tmp_path, model_roster=['BS', 'CART'])
        store = ParameterStore()
        record = NoiseExperiment(settings, store, data=live_data).run()
        assert record.provenance == 'inherited from moneyness/ALL (tuned on demand)'
        assert store.get(('moneyness', 'ALL')) == record.hyperparameters
        assert record.error_table.sub_experiments == ['Original', 'Denoised']

    def test_noise_run_needs_denoised_records(self, tmp_path, live_data):
        settings = live_settings(tmp_path, model_roster=['BS'])
        data = DatasetSplit(train=live_data.train, test=live_data.test, denoised_extra=[])
        store = ParameterStore()
        store.put(('moneyness', 'ALL'), {'BS': {}})
        with pytest.raises(ConfigError):
            NoiseExperiment(settings, store, data=data).run()

    @pytest.mark.slow
    def test_full_pipeline(self, tmp_path, live_data):
        settings = live_settings(tmp_path / 'first')
        records = run_all(settings, data=live_data)
        by_name = {record.plan.name: record for record in records}
        input_record, moneyness_record = by_name[ExperimentName.input], by_name[ExperimentName.moneyness]
        window_record, noise_record = by_name[ExperimentName.window], by_name[ExperimentName.noise]
        assert input_record.provenance == 'tuned in input/In1'
        assert moneyness_record.provenance == 'tuned in moneyness/ALL'
        assert window_record.provenance == 'inherited from input/In1'
        assert noise_record.provenance == 'inherited from moneyness/ALL'
        assert window_record.hyperparameters == input_record.hyperparameters
        assert noise_record.hyperparameters == moneyness_record.hyperparameters
        assert input_record.error_table.models == settings.model_roster
        assert input_record.error_table.sub_experiments == input_subs
        assert set(input_record.score_report.scores.index) == set(settings.model_roster) - {'BS', 'BSM'}
        assert input_record.score_report.scores['score_bs'].max() > 0
        assert set(noise_record.extras['increase_pct']) <= set(settings.model_roster)

        experiment = MoneynessExperiment(settings, data=live_data)
        train_targets = experiment.training_matrix('ALL').y
        test_targets = experiment.prepare(live_data.test, 'STANDARD').y
        baseline = rmse([train_targets.mean()] * len(test_targets), test_targets)
        for model in ['CART', 'RF', 'GB1', 'GB2', 'GB2-hist', 'NGB']:
            assert moneyness_record.error_table.error(model, 'ALL') < 0.5 * baseline

        again = run_all(live_settings(tmp_path / 'second'), data=live_data)
        for first, second in zip(records, again):
            assert emit_report(first) == emit_report(second)

    @pytest.mark.slow
    def test_desk_scale_pipeline(self, tmp_path):
        settings = desk_settings(tmp_path / 'first')
        data = prepare_data(settings)
        assert (len(data.train), len(data.test)) == (5000, 2000)
        records = run_all(settings, data=data)
        by_name = {record.plan.name: record for record in records}
        assert by_name[ExperimentName.input].score_report.scores['score_bs'].max() > 0

        experiment = MoneynessExperiment(settings, data=data)
        train_targets = experiment.training_matrix('ALL').y
        test_targets = experiment.prepare(data.test, 'STANDARD').y
        baseline = rmse([train_targets.mean()] * len(test_targets), test_targets)
        for model in ['CART', 'RF', 'GB1', 'GB2', 'GB2-hist', 'NGB']:
            assert by_name[ExperimentName.moneyness].error_table.error(model, 'ALL') < 0.5 * baseline

        again = run_all(desk_settings(tmp_path / 'second'))
        for first, second in zip(records, again):
            assert emit_report(first) == emit_report(second)
