"""
Hyperparameter tuning by exhaustive grid search on a chronological validation split.
"""
import math

import numpy as np
from recordclass import RecordClass
from sklearn.model_selection import ParameterGrid

from utility import ConfigError, DataError


class TuningResult(RecordClass):
    """The winning grid point with the validation RMSE of every candidate in grid order."""
    params: dict
    validation_rmse: float
    candidates: list


def expand_grid(grid):
    """The grid points in their deterministic order (sorted names, last name varying fastest)."""
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ConfigError(f'The hyperparameter grid {grid} has no points.')
    return list(ParameterGrid(grid))


def chronological_split(row_count, validation_fraction):
    """The number of leading training rows; the remaining (latest) rows validate."""
    if not 0 < validation_fraction < 1:
        raise ConfigError(f'Validation fraction must be in (0, 1), got {validation_fraction}.')
    validation_count = max(1, int(round(row_count * validation_fraction)))
    train_count = row_count - validation_count
    if train_count < 1:
        raise DataError(f'{row_count} rows are too few to hold out a validation split.')
    return train_count


def tune(family, X, y, grid, validation_fraction=0.2, seed=0):
    """
    Picks the grid point with the lowest validation RMSE. The rows must be in chronological order; the last
    `validation_fraction` of them validate. Ties keep the earlier grid point.

    :param family: Fits a model from (X, y, params, seed); the model has a `predict` method.
    :type family: callable
    :param X: The training features in chronological order.
    :type X: np.ndarray
    :param y: The training targets.
    :type y: np.ndarray
    :param grid: The candidate values per hyperparameter.
    :type grid: dict[str, list]
    :param validation_fraction: The share of latest rows held out.
    :type validation_fraction: float
    :param seed: The seed every candidate fit receives.
    :type seed: int
    :rtype: TuningResult
    """
    points = expand_grid(grid)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    train_count = chronological_split(X.shape[0], validation_fraction)
    best_params, best_rmse, candidates = None, math.inf, []
    for params in points:
        model = family(X[:train_count], y[:train_count], params, seed)
        rmse = float(np.sqrt(np.mean((model.predict(X[train_count:]) - y[train_count:]) ** 2)))
        candidates.append((dict(params), rmse))
        if rmse < best_rmse or best_params is None:
            best_params, best_rmse = dict(params), rmse
    return TuningResult(params=best_params, validation_rmse=best_rmse, candidates=candidates)
