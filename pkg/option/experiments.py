"""
The four major experiments of the option pricing benchmark.
"""
import math

from evaluation import mse, noise_increase_table, rmse
from experiment import Experiment, ExperimentPlan, ParameterStore, prepare_data
from option.data import MoneynessBucket, bucket_records, build_denoised_train, moneyness_bucket
from option.features import assemble, input_experiment_configs, sliding_window, sort_by_date
from settings import ExperimentName, analytic_models
from utility import ConfigError

window_buckets = [MoneynessBucket.itm, MoneynessBucket.atm, MoneynessBucket.otm]
window_arms = ['ON', 'OFF']


class PricingExperiment(Experiment):
    """Shared feature preparation and per model evaluation of the pricing experiments."""
    metric = staticmethod(rmse)

    def prepare(self, records, config, windowed=None):
        """The chronologically ordered design matrix of records, windowed when the settings ask for it."""
        matrix = assemble(records, config)
        if windowed is None:
            windowed = self.settings.window_in_other_experiments
        if windowed:
            matrix = sliding_window(matrix, self.settings.window_size)
        return sort_by_date(matrix)

    def evaluate_matrices(self, sub, hyperparameters, train_matrix, test_matrix):
        """The error of every roster model, NaN with a diagnostic when a matrix is empty."""
        diagnostics = []
        if train_matrix.rows == 0 or test_matrix.rows == 0:
            diagnostics.append(f'{self.name.value}/{sub}: {train_matrix.rows} train and {test_matrix.rows} test rows '
                               f'remain, so its cells are absent.')
            return {model: math.nan for model in self.settings.model_roster}, diagnostics
        errors = {}
        for model_name in self.roster():
            if model_name not in analytic_models and train_matrix.rows < 2:
                errors[model_name.value] = math.nan
                diagnostics.append(f'{self.name.value}/{sub}: too few training rows for {model_name.value}.')
                continue
            errors[model_name.value] = self.fit_and_score(model_name, hyperparameters, train_matrix, test_matrix,
                                                          sub, self.metric)
        return errors, diagnostics

    def plan_roster(self):
        return list(self.settings.model_roster)


class InputExperiment(PricingExperiment):
    """Compares the six input feature configurations with hyperparameters tuned on In1."""
    name = ExperimentName.input
    fixture_name = 'input_experiment_rmse'

    def plan(self):
        return ExperimentPlan(name=self.name, sub_experiments=list(input_experiment_configs),
                              weights=dict(self.settings.input_weights), model_roster=self.plan_roster(),
                              seed=self.settings.seed, tune_in='In1')

    def training_matrix(self, sub):
        return self.prepare(self.dataset().train, sub)

    def evaluate_sub(self, sub, hyperparameters):
        data = self.dataset()
        errors, diagnostics = self.evaluate_matrices(sub, hyperparameters, self.training_matrix(sub),
                                                     self.prepare(data.test, sub))
        return errors, diagnostics, {}


class MoneynessExperiment(PricingExperiment):
    """Evaluates the standard features on each moneyness bucket with hyperparameters tuned on ALL."""
    name = ExperimentName.moneyness
    fixture_name = 'moneyness_experiment_rmse'

    def plan(self):
        return ExperimentPlan(name=self.name, sub_experiments=[bucket.value for bucket in MoneynessBucket],
                              weights=dict(self.settings.moneyness_weights), model_roster=self.plan_roster(),
                              seed=self.settings.seed, tune_in=MoneynessBucket.all.value)

    def bucket(self, records, sub):
        return bucket_records(records, MoneynessBucket(sub), self.settings.swap_moneyness_labels)

    def training_matrix(self, sub):
        records = self.dataset().train
        if self.settings.train_per_bucket:
            records = self.bucket(records, sub)
        return self.prepare(records, 'STANDARD')

    def evaluate_sub(self, sub, hyperparameters):
        test_records = self.bucket(self.dataset().test, sub)
        errors, diagnostics = self.evaluate_matrices(sub, hyperparameters, self.training_matrix(sub),
                                                     self.prepare(test_records, 'STANDARD'))
        return errors, diagnostics, {'test_records': len(test_records)}


class WindowExperiment(PricingExperiment):
    """
    Evaluates each moneyness bucket with the sliding window ON and OFF, using inherited hyperparameters. The window
    is applied to the whole training and test sets before bucketing, so contract histories cross bucket moves.
    """
    name = ExperimentName.window
    fixture_name = 'window_experiment_rmse'

    def plan(self):
        return ExperimentPlan(name=self.name,
                              sub_experiments=[f'{bucket.value} {arm}' for bucket in window_buckets
                                               for arm in window_arms],
                              weights=None, model_roster=self.plan_roster(), seed=self.settings.seed,
                              inherit_from=tuple(self.settings.window_parameter_source))

    def arm_matrix(self, records, bucket, windowed):
        matrix = self.prepare(records, self.settings.window_input_config, windowed=windowed)
        rows = [row for row, record in enumerate(matrix.records)
                if moneyness_bucket(record.spot, record.strike, self.settings.swap_moneyness_labels) == bucket]
        return matrix.take(rows)

    def training_matrix(self, sub):
        bucket_name, arm = sub.split()
        data = self.dataset()
        if self.settings.train_per_bucket:
            return self.arm_matrix(data.train, MoneynessBucket(bucket_name), arm == 'ON')
        return self.prepare(data.train, self.settings.window_input_config, windowed=arm == 'ON')

    def evaluate_sub(self, sub, hyperparameters):
        bucket_name, arm = sub.split()
        bucket = MoneynessBucket(bucket_name)
        data = self.dataset()
        test_matrix = self.arm_matrix(data.test, bucket, arm == 'ON')
        train_matrix = self.training_matrix(sub)
        errors, diagnostics = self.evaluate_matrices(sub, hyperparameters, train_matrix, test_matrix)
        if arm == 'ON':
            plain_rows = self.arm_matrix(data.test, bucket, False).rows
            dropped = plain_rows - test_matrix.rows
            if test_matrix.rows == 0 and plain_rows > 0:
                diagnostics.append(f'window/{sub}: no contract has more than {self.settings.window_size} quotes, '
                                   f'so the window leaves no test rows.')
            return errors, diagnostics, {'dropped_test_rows': int(dropped)}
        return errors, diagnostics, {}


class NoiseExperiment(PricingExperiment):
    """Trains on the original and on the denoised training sets with inherited hyperparameters, scored by MSE."""
    name = ExperimentName.noise
    fixture_name = 'noise_experiment_mse'
    metric = staticmethod(mse)

    def plan(self):
        return ExperimentPlan(name=self.name, sub_experiments=['Original', 'Denoised'], weights=None,
                              model_roster=self.plan_roster(), seed=self.settings.seed,
                              inherit_from=tuple(self.settings.noise_parameter_source))

    def training_matrix(self, sub):
        data = self.dataset()
        if sub == 'Denoised':
            return self.prepare(build_denoised_train(data), 'STANDARD')
        return self.prepare(data.train, 'STANDARD')

    def evaluate_sub(self, sub, hyperparameters):
        errors, diagnostics = self.evaluate_matrices(sub, hyperparameters, self.training_matrix(sub),
                                                     self.prepare(self.dataset().test, 'STANDARD'))
        return errors, diagnostics, {}

    def metric_name(self):
        return 'mse'

    def run_live(self, plan):
        if not self.dataset().denoised_extra:
            raise ConfigError('The noise experiment needs denoised records, but none fall in the denoised ranges.')
        return super().run_live(plan)

    def finish_record(self, record):
        super().finish_record(record)
        record.extras['increase_pct'] = {model: float(increase) for model, increase
                                        in noise_increase_table(record.error_table).items()}


experiment_order = [InputExperiment, MoneynessExperiment, WindowExperiment, NoiseExperiment]


def run_input_experiment(settings, data=None, parameter_store=None):
    return InputExperiment(settings, parameter_store, data=data).run()


def run_moneyness_experiment(settings, data=None, parameter_store=None):
    return MoneynessExperiment(settings, parameter_store, data=data).run()


def run_window_experiment(settings, data=None, parameter_store=None):
    """Runs the window experiment, tuning its inheritance source first when the store lacks it."""
    return WindowExperiment(settings, parameter_store, data=data).run()


def run_noise_experiment(settings, data=None, parameter_store=None):
    """Runs the noise experiment, tuning its inheritance source first when the store lacks it."""
    return NoiseExperiment(settings, parameter_store, data=data).run()


experiment_runners = {ExperimentName.input: run_input_experiment, ExperimentName.moneyness: run_moneyness_experiment,
                      ExperimentName.window: run_window_experiment, ExperimentName.noise: run_noise_experiment}


def run_all(settings, data=None):
    """Runs the four experiments in transfer order, sharing one parameter store and one dataset."""
    parameter_store = ParameterStore()
    if data is None and not settings.fixture_mode:
        data = prepare_data(settings)
    return [experiment_class(settings, parameter_store, data=data).run() for experiment_class in experiment_order]
