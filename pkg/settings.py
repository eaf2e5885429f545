"""
General settings.
"""
from copy import deepcopy
from enum import Enum

import yaml

from utility import ConfigError


class ExperimentName(Enum):
    """An enum to select the major experiment to run."""
    input = 'input'
    moneyness = 'moneyness'
    window = 'window'
    noise = 'noise'


class ModelName(Enum):
    """An enum to select a model of the roster."""
    bs = 'BS'
    bsm = 'BSM'
    cart = 'CART'
    random_forest = 'RF'
    gradient_boosting = 'GB1'
    second_order_boosting = 'GB2'
    histogram_boosting = 'GB2-hist'
    ngboost = 'NGB'


analytic_models = (ModelName.bs, ModelName.bsm)


class ConfigurableSettings:
    """Shared loading and snapshotting of attribute based settings."""
    def update(self, mapping):
        """Overrides attributes from a mapping, rejecting keys which are not settings."""
        for key, value in mapping.items():
            if not hasattr(self, key):
                raise ConfigError(f'`{key}` is not a known {type(self).__name__} entry.')
            setattr(self, key, value)
        self.validate()
        return self

    def validate(self):
        """Checks the settings are consistent (overridden where there is something to check)."""
        pass

    def snapshot(self):
        """A plain data copy of the settings."""
        return deepcopy(vars(self))

    @classmethod
    def from_file(cls, path):
        """Creates settings from a YAML file of overrides."""
        try:
            with open(path) as settings_file:
                mapping = yaml.safe_load(settings_file) or {}
        except (OSError, yaml.YAMLError) as error:
            raise ConfigError(f'Could not read settings from `{path}`: {error}') from error
        if not isinstance(mapping, dict):
            raise ConfigError(f'`{path}` must contain a mapping of settings.')
        return cls().update(mapping)


class GeneratorSettings(ConfigurableSettings):
    """Represents the configuration of the synthetic option market."""
    def __init__(self):
        self.seed = 0
        # Each range emits at most `size` quotes; `clean` ranges are generated without pricing noise.
        self.date_ranges = [
            {'start': '2020-01-01', 'end': '2020-08-31', 'size': 5000, 'clean': False},
            {'start': '2020-09-01', 'end': '2020-12-31', 'size': 2000, 'clean': False},
            {'start': '2021-09-01', 'end': '2021-12-31', 'size': 2000, 'clean': True},
        ]
        self.strike_grid = [0.8 + 0.025 * index for index in range(17)]  # Strike / spot at listing.
        self.maturities = [21, 42, 63, 126]  # Trading days from listing to expiry.
        self.listing_period = 21  # Trading days between contract listings.
        self.initial_spot = 100.0
        self.gbm_mu = 0.05
        self.gbm_sigma = 0.2
        self.rate = 0.02
        self.q_monthly = 0.002
        self.noise_eta = 0.02
        self.periods_per_year = 252
        self.kinds = ['call']  # Puts are opt in; no input configuration carries the option kind.
        # Market implied volatility is gbm_sigma + vol_premium + smile_skew * k + smile_curvature * k ** 2,
        # with k = ln(K / S), floored at min_market_volatility.
        self.vol_premium = 0.15
        self.smile_skew = -0.4
        self.smile_curvature = 1.0
        self.min_market_volatility = 0.01

    def validate(self):
        """Checks the grids are usable."""
        if not self.date_ranges:
            raise ConfigError('The generator needs at least one date range.')
        if not self.strike_grid:
            raise ConfigError('The generator strike grid is empty.')
        if not self.maturities:
            raise ConfigError('The generator maturities list is empty.')
        if not self.kinds:
            raise ConfigError('The generator needs at least one option kind.')
        if self.noise_eta < 0:
            raise ConfigError(f'Noise scale must be nonnegative, got {self.noise_eta}.')
        if self.min_market_volatility <= 0:
            raise ConfigError(f'The market volatility floor must be positive, got {self.min_market_volatility}.')
        if self.listing_period < 1 or min(self.maturities) < 1:
            raise ConfigError('Listing period and maturities must be at least one trading day.')
        for date_range in self.date_ranges:
            if 'start' not in date_range or 'end' not in date_range:
                raise ConfigError(f'Date range {date_range} needs a `start` and an `end`.')

    def full_scale(self):
        """Switches the range sizes to the full observation counts of the published data."""
        self.date_ranges = [
            {'start': '2020-01-01', 'end': '2020-08-31', 'size': 39191, 'clean': False},
            {'start': '2020-09-01', 'end': '2020-12-31', 'size': 21263, 'clean': False},
            {'start': '2021-09-01', 'end': '2021-12-31', 'size': 20000, 'clean': True},
        ]
        return self


class Settings(ConfigurableSettings):
    """Represents the settings for a given benchmark run."""
    def __init__(self):
        self.trial_name = 'base'
        self.logs_directory = 'logs'
        self.seed = 0
        self.skip_completed_experiment = False
        self.should_save_models = False
        self.number_of_jobs = 1
        self.fixture_mode = False

        # Data.
        self.data_path = None  # Synthetic data is generated when no option CSV is given.
        self.generator = {}  # Overrides of the `GeneratorSettings` defaults.
        self.generator_scale = 'desk'
        self.train_ranges = [['2020-01-01', '2020-08-31']]
        self.test_range = ['2020-09-01', '2020-12-31']
        self.denoised_ranges = [['2021-09-01', '2021-12-31']]
        self.swap_moneyness_labels = False
        self.baseline_volatility = None  # The GARCH sigma feature is used unless overridden.

        # Features.
        self.window_size = 5
        self.window_in_other_experiments = True
        self.window_input_config = 'In1'
        self.train_per_bucket = True

        # Models.
        self.model_roster = [name.value for name in ModelName]
        self.validation_fraction = 0.2
        self.hyperparameter_grids = {
            ModelName.cart.value: {'max_depth': [6, 8, 10], 'min_samples_leaf': [1, 5]},
            ModelName.random_forest.value: {'n_trees': [50], 'max_depth': [8, 12], 'feature_subset_size': [None, 2],
                                            'min_samples_leaf': [1]},
            ModelName.gradient_boosting.value: {'n_rounds': [150], 'learning_rate': [0.1], 'max_depth': [3, 5]},
            ModelName.second_order_boosting.value: {'n_rounds': [150], 'learning_rate': [0.1], 'max_depth': [3, 5],
                                                    'reg_lambda': [1.0], 'gamma': [0.0]},
            ModelName.histogram_boosting.value: {'n_rounds': [150], 'learning_rate': [0.1], 'max_depth': [3, 5],
                                                 'reg_lambda': [1.0], 'gamma': [0.0], 'n_bins': [64]},
            ModelName.ngboost.value: {'n_rounds': [150], 'learning_rate': [0.05, 0.1], 'max_depth': [3]},
        }

        # Evaluation.
        self.input_weights = {'In1': 1, 'In2': 1, 'In3': 2, 'In4': 2, 'In5': 1, 'In6': 1}
        self.moneyness_weights = {'ALL': 1, 'ITM': 1, 'ATM': 1, 'OTM': 1}
        self.bs_row = ModelName.bs.value
        self.excluded_from_ml_max = [ModelName.bs.value, ModelName.bsm.value]

        # Parameter transfer sources (experiment, sub-experiment).
        self.window_parameter_source = [ExperimentName.input.value, 'In1']
        self.noise_parameter_source = [ExperimentName.moneyness.value, 'ALL']

    def validate(self):
        """Checks the settings are consistent."""
        known_models = {name.value for name in ModelName}
        for model_name in self.model_roster:
            if model_name not in known_models:
                raise ConfigError(f'{model_name} is not an available model.')
        if not 0 < self.validation_fraction < 1:
            raise ConfigError(f'Validation fraction must be in (0, 1), got {self.validation_fraction}.')
        if self.window_size < 1:
            raise ConfigError(f'Window size must be at least 1, got {self.window_size}.')
        if self.generator_scale not in ('desk', 'full'):
            raise ConfigError(f'{self.generator_scale} is not a generator scale (desk or full).')

    def generator_settings(self):
        """The synthetic market settings for this run."""
        generator_settings = GeneratorSettings()
        if self.generator_scale == 'full':
            generator_settings.full_scale()
        generator_settings.seed = self.seed
        return generator_settings.update(self.generator)

    @property
    def models(self):
        """The roster as model name enums."""
        return [ModelName(model_name) for model_name in self.model_roster]
