"""
Random forest regression: bagged CART trees with per-node feature subsampling.
"""
import numpy as np
from joblib import Parallel, delayed
from recordclass import RecordClass

from ensemble.tree import fit_tree, split_codes
from utility import ConfigError, DataError


class ForestParams(RecordClass):
    """The ensemble level settings of a random forest. A feature subset size of None searches every feature."""
    n_trees: int = 100
    feature_subset_size: int = None
    bootstrap: bool = True
    seed: int = 0


class RandomForest:
    """An average of regression trees."""
    def __init__(self, trees):
        self.trees = trees

    def predict(self, X):
        return np.mean([tree.predict(X) for tree in self.trees], axis=0)


def fit_random_forest(X, y, params, tree_params, number_of_jobs=1):
    """
    Fits a random forest. Bootstrap resamples and tree seeds are drawn up front from the forest seed, so the
    result does not depend on how the trees are scheduled across jobs.

    :param X: The features.
    :type X: np.ndarray
    :param y: The targets.
    :type y: np.ndarray
    :param params: The ensemble settings.
    :type params: ForestParams
    :param tree_params: The constraints of every tree.
    :type tree_params: ensemble.tree.TreeParams
    :param number_of_jobs: The joblib worker count.
    :type number_of_jobs: int
    :rtype: RandomForest
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f'A forest needs a nonempty feature matrix, got shape {X.shape}.')
    feature_count = X.shape[1]
    subset_size = params.feature_subset_size
    if subset_size is not None and not 1 <= subset_size <= feature_count:
        raise ConfigError(f'Feature subset size must be between 1 and {feature_count}, got {subset_size}.')
    if params.n_trees < 1:
        raise ConfigError(f'A forest needs at least one tree, got {params.n_trees}.')
    tree_params.validate()
    codes = split_codes(X, tree_params)
    random_generator = np.random.default_rng(params.seed)
    tree_seeds = random_generator.integers(0, 2 ** 31 - 1, size=params.n_trees)
    row_count = X.shape[0]
    if params.bootstrap:
        samples = [random_generator.integers(0, row_count, size=row_count) for _ in range(params.n_trees)]
    else:
        samples = [np.arange(row_count)] * params.n_trees
    trees = Parallel(n_jobs=number_of_jobs)(
        delayed(fit_tree)(X[rows], y[rows], tree_params, feature_subset_size=subset_size, seed=int(tree_seed),
                          codes=codes[rows])
        for rows, tree_seed in zip(samples, tree_seeds))
    return RandomForest(list(trees))
