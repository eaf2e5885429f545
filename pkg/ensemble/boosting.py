"""
Gradient boosted regression trees under squared loss, first order and regularized second order.
"""
from enum import Enum

import numpy as np
from recordclass import RecordClass

from ensemble.tree import TreeGrower, TreeParams, split_codes
from utility import ConfigError, DataError


class BoostOrder(Enum):
    """An enum to select the boosting objective expansion."""
    first = 'first'
    second = 'second'


class BoostParams(RecordClass):
    """The settings of a boosted ensemble. The regularization only enters second order boosting."""
    n_rounds: int = 100
    learning_rate: float = 0.1
    reg_lambda: float = 0.0
    gamma: float = 0.0
    tree: TreeParams = None
    order: BoostOrder = BoostOrder.second

    def validate(self):
        """Raises a `ConfigError` for unusable settings."""
        if self.n_rounds < 1:
            raise ConfigError(f'Boosting needs at least one round, got {self.n_rounds}.')
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f'Learning rate must be in (0, 1], got {self.learning_rate}.')
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ConfigError(f'Regularization must be nonnegative, got lambda={self.reg_lambda}, '
                              f'gamma={self.gamma}.')
        self.tree_params().validate()

    def tree_params(self):
        return self.tree if self.tree is not None else TreeParams()


class GradientBoosting:
    """An additive model F(x) = F_0 + learning_rate · Σ tree_m(x)."""
    def __init__(self, initial_value, trees, learning_rate, train_losses=None):
        self.initial_value = initial_value
        self.trees = trees
        self.learning_rate = learning_rate
        self.train_losses = train_losses or []

    def predict(self, X):
        prediction = np.full(np.asarray(X).shape[0], self.initial_value, dtype=np.float64)
        for tree in self.trees:
            prediction += self.learning_rate * tree.predict(X)
        return prediction


def squared_loss_gradients(y, F):
    """The gradient statistics of ½(y − F)²: g = F − y and h = 1."""
    return F - y, np.ones_like(y)


def fit_gradient_boosting(X, y, params, summary_writer=None, model_name='GB'):
    """
    Fits a boosted ensemble of regression trees from F_0 = mean(y).

    First order rounds fit a variance reduction tree to the residuals y − F. Second order rounds grow the tree on
    the gradient statistics (g, h) with the leaf L2 penalty and split penalty of the settings. Under squared loss
    with no regularization the two coincide.

    :param X: The features.
    :type X: np.ndarray
    :param y: The targets.
    :type y: np.ndarray
    :param params: The boosting settings.
    :type params: BoostParams
    :param summary_writer: Receives the per round training loss when given.
    :type summary_writer: utility.SummaryWriter or None
    :param model_name: The name the training loss is logged under.
    :type model_name: str
    :rtype: GradientBoosting
    """
    params.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise DataError(f'Features of shape {X.shape} do not match {y.shape[0]} targets.')
    tree_params = params.tree_params()
    if params.order == BoostOrder.second:
        grower = TreeGrower(tree_params, reg_lambda=params.reg_lambda, gamma=params.gamma)
    else:
        grower = TreeGrower(tree_params)
    codes = split_codes(X, tree_params)
    initial_value = float(np.mean(y))
    F = np.full(y.shape, initial_value)
    trees, losses = [], []
    for round_ in range(params.n_rounds):
        g, h = squared_loss_gradients(y, F)
        tree = grower.grow(X, codes, g, h)
        F = F + params.learning_rate * tree.predict(X)
        trees.append(tree)
        losses.append(float(np.mean((y - F) ** 2)))
        if summary_writer is not None:
            summary_writer.add_scalar(f'Training/{model_name} loss', losses[-1], global_step=round_)
    return GradientBoosting(initial_value, trees, params.learning_rate, losses)


def fit_gb_first_order(X, y, params, summary_writer=None, model_name='GB1'):
    """Fits first order gradient boosting (the regularization settings are ignored)."""
    return fit_gradient_boosting(X, y, BoostParams(n_rounds=params.n_rounds, learning_rate=params.learning_rate,
                                                   reg_lambda=0.0, gamma=0.0, tree=params.tree,
                                                   order=BoostOrder.first),
                                 summary_writer=summary_writer, model_name=model_name)


def fit_gb_second_order(X, y, params, summary_writer=None, model_name='GB2'):
    """Fits regularized second order gradient boosting."""
    return fit_gradient_boosting(X, y, BoostParams(n_rounds=params.n_rounds, learning_rate=params.learning_rate,
                                                   reg_lambda=params.reg_lambda, gamma=params.gamma,
                                                   tree=params.tree, order=BoostOrder.second),
                                 summary_writer=summary_writer, model_name=model_name)
