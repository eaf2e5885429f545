"""
Benchmark experiment orchestration: plans, the hyperparameter transfer store, run records and the experiment base.
"""
import datetime
import math
import os
from abc import ABC, abstractmethod

import yaml
from joblib import Parallel, delayed
from recordclass import RecordClass

from ensemble.serialization import save_model
from ensemble.tuning import tune
from evaluation import ErrorTable, ScoreReport, WeightVector, load_fixture, load_published_scores, score_table
from option.data import generate_synthetic, load_csv, split_by_dates
from option.models import build_model, learner_family
from option.presentation import emit_report
from settings import ExperimentName, Settings, analytic_models
from utility import ConfigError, SummaryWriter, make_directory_name_unique, seed_all


class ExperimentPlan(RecordClass):
    """
    What a major experiment runs. Hyperparameters are either tuned in one of its own sub-experiments (`tune_in`)
    or inherited from an (experiment, sub-experiment) tuning (`inherit_from`).
    """
    name: ExperimentName
    sub_experiments: list
    weights: dict = None
    model_roster: list = None
    seed: int = 0
    tune_in: str = None
    inherit_from: tuple = None

    def validate(self):
        """Raises a `ConfigError` unless the plan has exactly one tuning source."""
        if (self.tune_in is None) == (self.inherit_from is None):
            raise ConfigError(f'The {self.name.value} plan needs exactly one of a tuning sub-experiment and an '
                              f'inheritance source.')
        if self.tune_in is not None and self.tune_in not in self.sub_experiments:
            raise ConfigError(f'{self.tune_in} is not a sub-experiment of the {self.name.value} plan.')
        if self.inherit_from is not None:
            if len(self.inherit_from) != 2:
                raise ConfigError(f'{self.inherit_from} is not an (experiment, sub-experiment) pair.')
            ExperimentName(self.inherit_from[0])
        if self.weights is not None:
            WeightVector(self.weights).check_keys(self.sub_experiments)
        return self

    @property
    def tuning_source(self):
        """The (experiment, sub-experiment) whose tuning sets the hyperparameters."""
        if self.tune_in is not None:
            return self.name.value, self.tune_in
        return tuple(self.inherit_from)


class ParameterStore:
    """Tuned hyperparameters of each model keyed by the (experiment, sub-experiment) they were tuned in."""
    def __init__(self):
        self.entries = {}

    def put(self, source, hyperparameters):
        self.entries[tuple(source)] = {model: dict(params) for model, params in hyperparameters.items()}

    def get(self, source):
        hyperparameters = self.entries.get(tuple(source))
        if hyperparameters is None:
            return None
        return {model: dict(params) for model, params in hyperparameters.items()}

    def has(self, source):
        return tuple(source) in self.entries


class RunRecord:
    """Everything one experiment run produced, enough to regenerate its reports."""
    def __init__(self, plan, hyperparameters=None, provenance='', error_table=None, score_report=None,
                 wall_clock=0.0, seed=0, fixture=False, diagnostics=None, extras=None, settings_snapshot=None):
        self.plan = plan
        self.hyperparameters = hyperparameters or {}
        self.provenance = provenance
        self.error_table = error_table if error_table is not None else ErrorTable()
        self.score_report = score_report
        self.wall_clock = wall_clock
        self.seed = seed
        self.fixture = fixture
        self.diagnostics = diagnostics or []
        self.extras = extras or {}
        self.settings_snapshot = settings_snapshot or {}

    def save(self, directory):
        """Writes the run directory: configuration, hyperparameters, errors, scores and run summary."""
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, 'config.yaml'), 'w') as config_file:
            yaml.safe_dump(self.settings_snapshot, config_file, sort_keys=True)
        with open(os.path.join(directory, 'hyperparameters.yaml'), 'w') as hyperparameters_file:
            yaml.safe_dump({'provenance': self.provenance, 'models': self.hyperparameters}, hyperparameters_file,
                           sort_keys=False)
        self.error_table.to_csv(os.path.join(directory, 'errors.csv'))
        if self.score_report is not None:
            self.score_report.to_csv(os.path.join(directory, 'scores.csv'))
        summary = {'experiment': self.plan.name.value, 'sub_experiments': list(self.plan.sub_experiments),
                   'weights': self.plan.weights, 'model_roster': list(self.plan.model_roster or []),
                   'seed': self.seed, 'tune_in': self.plan.tune_in,
                   'inherit_from': None if self.plan.inherit_from is None else list(self.plan.inherit_from),
                   'fixture': self.fixture, 'wall_clock': self.wall_clock, 'diagnostics': list(self.diagnostics),
                   'extras': self.extras}
        with open(os.path.join(directory, 'run.yaml'), 'w') as run_file:
            yaml.safe_dump(summary, run_file, sort_keys=False)

    @classmethod
    def load(cls, directory):
        """Reads a run directory written by `save`."""
        run_path = os.path.join(directory, 'run.yaml')
        if not os.path.exists(run_path):
            raise ConfigError(f'`{directory}` is not a run directory (no run.yaml).')
        with open(run_path) as run_file:
            summary = yaml.safe_load(run_file)
        with open(os.path.join(directory, 'hyperparameters.yaml')) as hyperparameters_file:
            hyperparameters = yaml.safe_load(hyperparameters_file)
        config_path = os.path.join(directory, 'config.yaml')
        settings_snapshot = {}
        if os.path.exists(config_path):
            with open(config_path) as config_file:
                settings_snapshot = yaml.safe_load(config_file) or {}
        inherit_from = summary.get('inherit_from')
        plan = ExperimentPlan(name=ExperimentName(summary['experiment']), sub_experiments=summary['sub_experiments'],
                              weights=summary.get('weights'), model_roster=summary.get('model_roster'),
                              seed=summary.get('seed', 0), tune_in=summary.get('tune_in'),
                              inherit_from=None if inherit_from is None else tuple(inherit_from))
        scores_path = os.path.join(directory, 'scores.csv')
        score_report = ScoreReport.from_csv(scores_path) if os.path.exists(scores_path) else None
        return cls(plan, hyperparameters=hyperparameters.get('models') or {},
                   provenance=hyperparameters.get('provenance', ''),
                   error_table=ErrorTable.from_csv(os.path.join(directory, 'errors.csv')), score_report=score_report,
                   wall_clock=summary.get('wall_clock', 0.0), seed=summary.get('seed', 0),
                   fixture=summary.get('fixture', False), diagnostics=summary.get('diagnostics') or [],
                   extras=summary.get('extras') or {}, settings_snapshot=settings_snapshot)


def prepare_data(settings):
    """Loads the option CSV (or generates the synthetic market) and splits it by date."""
    if settings.data_path is not None:
        records = load_csv(settings.data_path)
    else:
        records = generate_synthetic(settings.generator_settings())
    split = split_by_dates(records, settings.train_ranges, settings.test_range, settings.denoised_ranges)
    print(f'{len(split.train)} train, {len(split.test)} test and {len(split.denoised_extra)} denoised records '
          f'({split.dropped} outside every range).')
    return split


class Experiment(ABC):
    """A class to manage one major experiment of the benchmark."""
    name: ExperimentName = None
    fixture_name: str = None
    registry = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.name is not None:
            Experiment.registry[cls.name] = cls

    def __init__(self, settings: Settings, parameter_store: ParameterStore = None, data=None):
        self.settings = settings
        self.parameter_store = parameter_store if parameter_store is not None else ParameterStore()
        self.data = data
        self.trial_directory: str = None
        self.summary_writer: SummaryWriter = None
        self.record: RunRecord = None

    def run(self):
        """Runs the experiment (live or from the published tables) and saves its run directory."""
        self.trial_directory = os.path.join(self.settings.logs_directory, self.settings.trial_name, self.name.value)
        if self.settings.skip_completed_experiment and os.path.exists(os.path.join(self.trial_directory,
                                                                                   'run.yaml')):
            print('`{}` experiment already exists. Skipping...'.format(self.trial_directory))
            self.record = RunRecord.load(self.trial_directory)
            if self.record.hyperparameters and not self.record.fixture and self.record.plan.tune_in is not None:
                self.parameter_store.put(self.record.plan.tuning_source, self.record.hyperparameters)
            return self.record
        self.trial_directory = make_directory_name_unique(self.trial_directory)
        print(self.trial_directory)
        os.makedirs(self.trial_directory, exist_ok=True)
        self.summary_writer = SummaryWriter(self.trial_directory)
        seed_all(self.settings.seed)
        start_time = datetime.datetime.now()
        plan = self.plan().validate()
        if self.settings.fixture_mode:
            self.record = self.run_fixture(plan)
        else:
            self.record = self.run_live(plan)
        self.record.wall_clock = (datetime.datetime.now() - start_time).total_seconds()
        self.record.settings_snapshot = self.settings.snapshot()
        self.record.save(self.trial_directory)
        self.write_report()
        self.summary_writer.close()
        print('Completed {}'.format(self.trial_directory))
        return self.record

    def write_report(self):
        with open(os.path.join(self.trial_directory, 'report.md'), 'w') as report_file:
            report_file.write(emit_report(self.record, 'markdown'))

    def log(self, message):
        """Prints a message and mirrors it into the run's event log."""
        print(message)
        if self.summary_writer is not None:
            self.summary_writer.add_text('Log', message)

    @abstractmethod
    def plan(self):
        """The plan of the experiment under the current settings."""
        pass

    @abstractmethod
    def training_matrix(self, sub):
        """The chronologically ordered training matrix of a sub-experiment, as tuning sees it."""
        pass

    @abstractmethod
    def evaluate_sub(self, sub, hyperparameters):
        """
        Fits and evaluates the roster in one sub-experiment.

        :return: The error of each model, diagnostics and extra per sub-experiment facts.
        :rtype: (dict[str, float], list[str], dict)
        """
        pass

    def dataset(self):
        if self.data is None:
            self.data = prepare_data(self.settings)
        return self.data

    def roster(self):
        return self.settings.models

    def tune_models(self, sub):
        """Tunes every learned model of the roster once, in one sub-experiment, and stores the winners."""
        matrix = self.training_matrix(sub)
        hyperparameters = {}
        for model_name in self.roster():
            if model_name in analytic_models:
                hyperparameters[model_name.value] = {}
                continue
            grid = self.settings.hyperparameter_grids.get(model_name.value)
            if grid is None:
                raise ConfigError(f'There is no hyperparameter grid for {model_name.value}.')
            result = tune(learner_family(model_name, self.settings.number_of_jobs), matrix.X, matrix.y, grid,
                          self.settings.validation_fraction, self.settings.seed)
            self.log(f'{model_name.value} tuned in {self.name.value}/{sub}: {result.params} '
                     f'(validation RMSE {result.validation_rmse:.6f}).')
            hyperparameters[model_name.value] = result.params
        self.parameter_store.put((self.name.value, sub), hyperparameters)
        return hyperparameters

    def resolve_hyperparameters(self, plan):
        """The frozen hyperparameters of the plan with their provenance, tuning the source first if needed."""
        if plan.tune_in is not None:
            return self.tune_models(plan.tune_in), f'tuned in {self.name.value}/{plan.tune_in}'
        source = plan.tuning_source
        provenance = f'inherited from {source[0]}/{source[1]}'
        if not self.parameter_store.has(source):
            self.log(f'No {source[0]}/{source[1]} tuning is available; running it first.')
            source_experiment = Experiment.registry[ExperimentName(source[0])](self.settings, self.parameter_store,
                                                                               data=self.dataset())
            source_experiment.summary_writer = self.summary_writer
            source_experiment.tune_models(source[1])
            provenance += ' (tuned on demand)'
        hyperparameters = self.parameter_store.get(source)
        missing = [model_name.value for model_name in self.roster() if model_name.value not in hyperparameters]
        if missing:
            raise ConfigError(f'The {source[0]}/{source[1]} tuning has no hyperparameters for {missing}.')
        return hyperparameters, provenance

    def fit_and_score(self, model_name, hyperparameters, train_matrix, test_matrix, sub, metric):
        """Fits one model on a training matrix and returns its test error."""
        model = build_model(model_name, hyperparameters.get(model_name.value, {}), seed=self.settings.seed,
                            baseline_volatility=self.settings.baseline_volatility)
        model.fit(train_matrix, summary_writer=self.summary_writer, loss_tag=f'{model_name.value} {sub}')
        if self.settings.should_save_models and not model.is_analytic:
            models_directory = os.path.join(self.trial_directory, 'models')
            os.makedirs(models_directory, exist_ok=True)
            save_model(model.ensemble, os.path.join(models_directory, f'{model_name.value} {sub}.txt'))
        return metric(model.predict(test_matrix), test_matrix.y)

    def run_live(self, plan):
        """Tunes (or inherits), then evaluates every sub-experiment with the frozen hyperparameters."""
        self.dataset()
        hyperparameters, provenance = self.resolve_hyperparameters(plan)
        self.log(f'{self.name.value} hyperparameters {provenance}.')
        results = Parallel(n_jobs=self.settings.number_of_jobs, prefer='threads')(
            delayed(self.evaluate_sub)(sub, hyperparameters) for sub in plan.sub_experiments)
        table = ErrorTable(bs_row=self.settings.bs_row, excluded_from_ml_max=self.settings.excluded_from_ml_max,
                           metric=self.metric_name())
        diagnostics, extras = [], {}
        for model in plan.model_roster:
            for sub, (errors, _, _) in zip(plan.sub_experiments, results):
                table.set_error(model, sub, errors.get(model, math.nan))
        for sub, (errors, sub_diagnostics, sub_extras) in zip(plan.sub_experiments, results):
            diagnostics.extend(sub_diagnostics)
            if sub_extras:
                extras[sub] = sub_extras
            for model, error in errors.items():
                if not math.isnan(error):
                    self.summary_writer.add_scalar(f'Errors/{model}/{sub}', error, global_step=0)
        for message in diagnostics:
            self.log(message)
        record = RunRecord(plan, hyperparameters={model: hyperparameters[model] for model in plan.model_roster},
                           provenance=provenance, error_table=table, seed=self.settings.seed, fixture=False,
                           diagnostics=diagnostics, extras=extras)
        self.finish_record(record)
        return record

    def run_fixture(self, plan):
        """Scores the published error table of the experiment instead of training."""
        table = load_fixture(self.fixture_name)
        plan.model_roster = table.models
        record = RunRecord(plan, provenance='published error table (no training)', error_table=table,
                           seed=self.settings.seed, fixture=True)
        self.finish_record(record)
        published = load_published_scores(self.fixture_name.rsplit('_', 1)[0] + '_scores')
        if record.score_report is not None and published is not None:
            deviation = (record.score_report.scores.loc[published.scores.index] - published.scores).abs().max().max()
            record.extras['published_score_deviation'] = float(deviation)
            self.log(f'Largest deviation from the published scores: {deviation:.6f} percentage points.')
        return record

    def finish_record(self, record):
        """Adds the score report (when the plan is weighted and the BS row exists) and experiment extras."""
        table = record.error_table
        if record.plan.weights is not None and table.bs_row in table.models:
            record.score_report = score_table(table, record.plan.weights)

    def metric_name(self):
        return 'rmse'
