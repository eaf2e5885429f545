"""
The model roster: analytic pricing baselines and the tree ensemble learners behind one interface.
"""
from abc import ABC, abstractmethod
from functools import partial

import numpy as np

from ensemble.boosting import BoostParams, fit_gb_first_order, fit_gb_second_order
from ensemble.forest import ForestParams, fit_random_forest
from ensemble.ngboost import fit_ngb_gaussian
from ensemble.tree import SplitMode, TreeParams, fit_tree
from option.data import annualized_dividend_yield
from option.pricing import OptionKind, price_arrays
from settings import ModelName, analytic_models
from utility import ConfigError, DataError

tree_keys = {'max_depth', 'min_samples_leaf', 'n_bins'}
family_keys = {
    ModelName.cart: tree_keys,
    ModelName.random_forest: tree_keys | {'n_trees', 'feature_subset_size', 'bootstrap'},
    ModelName.gradient_boosting: tree_keys | {'n_rounds', 'learning_rate'},
    ModelName.second_order_boosting: tree_keys | {'n_rounds', 'learning_rate', 'reg_lambda', 'gamma'},
    ModelName.histogram_boosting: tree_keys | {'n_rounds', 'learning_rate', 'reg_lambda', 'gamma'},
    ModelName.ngboost: tree_keys | {'n_rounds', 'learning_rate'},
}


def tree_params_from(model_name, params):
    split_mode = SplitMode.histogram if model_name == ModelName.histogram_boosting else SplitMode.exact
    return TreeParams(max_depth=params.get('max_depth', 3), min_samples_leaf=params.get('min_samples_leaf', 1),
                      split_mode=split_mode, n_bins=params.get('n_bins', 32))


def boost_params_from(model_name, params):
    return BoostParams(n_rounds=params.get('n_rounds', 100), learning_rate=params.get('learning_rate', 0.1),
                       reg_lambda=params.get('reg_lambda', 0.0), gamma=params.get('gamma', 0.0),
                       tree=tree_params_from(model_name, params))


def fit_learner(model_name, X, y, params, seed, number_of_jobs=1, summary_writer=None, loss_tag=None):
    """
    Fits the learner of a roster name from a flat hyperparameter mapping.

    :param model_name: The learned model to fit.
    :type model_name: settings.ModelName
    :param params: Hyperparameters, e.g. {'max_depth': 3, 'n_rounds': 150}.
    :type params: dict
    :param loss_tag: Names the training loss curve in the summary (the model name by default).
    :type loss_tag: str or None
    :return: The fitted ensemble (anything with a `predict` method).
    """
    if model_name not in family_keys:
        raise ConfigError(f'{model_name.value} is not a learned model.')
    unknown_keys = set(params) - family_keys[model_name]
    if unknown_keys:
        raise ConfigError(f'{sorted(unknown_keys)} are not hyperparameters of {model_name.value}.')
    if model_name == ModelName.cart:
        return fit_tree(X, y, tree_params_from(model_name, params))
    if model_name == ModelName.random_forest:
        forest_params = ForestParams(n_trees=params.get('n_trees', 100),
                                     feature_subset_size=params.get('feature_subset_size'),
                                     bootstrap=params.get('bootstrap', True), seed=seed)
        return fit_random_forest(X, y, forest_params, tree_params_from(model_name, params),
                                 number_of_jobs=number_of_jobs)
    boost_params = boost_params_from(model_name, params)
    loss_tag = loss_tag or model_name.value
    if model_name == ModelName.gradient_boosting:
        return fit_gb_first_order(X, y, boost_params, summary_writer=summary_writer, model_name=loss_tag)
    if model_name == ModelName.ngboost:
        return fit_ngb_gaussian(X, y, boost_params, summary_writer=summary_writer, model_name=loss_tag)
    return fit_gb_second_order(X, y, boost_params, summary_writer=summary_writer, model_name=loss_tag)


class Model(ABC):
    """A roster entry that prices the rows of a feature matrix."""
    def __init__(self, name):
        self.name = name
        self.hyperparameters = {}

    @property
    def is_analytic(self):
        return self.name in analytic_models

    @abstractmethod
    def fit(self, matrix, summary_writer=None, loss_tag=None):
        """Fits the model to the rows of a feature matrix."""
        pass

    @abstractmethod
    def predict(self, matrix):
        """The predicted prices of the rows of a feature matrix."""
        pass


class AnalyticModel(Model):
    """The closed form BS (no dividend) or BSM price of each record at its volatility."""
    def __init__(self, name, baseline_volatility=None):
        super().__init__(name)
        self.with_dividend = name == ModelName.bsm
        self.baseline_volatility = baseline_volatility

    def fit(self, matrix, summary_writer=None, loss_tag=None):
        return self

    def predict(self, matrix):
        records = matrix.records
        if self.baseline_volatility is not None:
            volatility = np.full(len(records), float(self.baseline_volatility))
        else:
            volatility = np.array([record.sigma for record in records], dtype=np.float64)
            if np.any(np.isnan(volatility)):
                raise DataError(f'{self.name.value} needs the sigma feature, which some records lack.')
        dividend_yield = [annualized_dividend_yield(record.q_monthly) if self.with_dividend else 0.0
                          for record in records]
        prices, _ = price_arrays([record.spot for record in records], [record.strike for record in records],
                                 [record.tau for record in records], [record.rate for record in records],
                                 dividend_yield, volatility, [record.kind == OptionKind.call for record in records])
        return prices


class LearnedModel(Model):
    """A tree ensemble regressing the market price on the matrix features."""
    def __init__(self, name, hyperparameters, seed=0, number_of_jobs=1):
        super().__init__(name)
        self.hyperparameters = dict(hyperparameters)
        self.seed = seed
        self.number_of_jobs = number_of_jobs
        self.ensemble = None

    def fit(self, matrix, summary_writer=None, loss_tag=None):
        self.ensemble = fit_learner(self.name, matrix.X, matrix.y, self.hyperparameters, self.seed,
                                    number_of_jobs=self.number_of_jobs, summary_writer=summary_writer,
                                    loss_tag=loss_tag)
        return self

    def predict(self, matrix):
        if self.ensemble is None:
            raise ConfigError(f'{self.name.value} must be fit before predicting.')
        return self.ensemble.predict(matrix.X)


def build_model(name, hyperparameters=None, seed=0, baseline_volatility=None, number_of_jobs=1):
    """
    Creates an unfitted roster model.

    :type name: settings.ModelName
    :rtype: Model
    """
    if name in analytic_models:
        return AnalyticModel(name, baseline_volatility=baseline_volatility)
    return LearnedModel(name, hyperparameters or {}, seed=seed, number_of_jobs=number_of_jobs)


def learner_family(name, number_of_jobs=1):
    """The (X, y, params, seed) fitting function grid search evaluates candidates with."""
    return partial(fit_learner, name, number_of_jobs=number_of_jobs)
