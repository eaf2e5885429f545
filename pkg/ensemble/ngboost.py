"""
Natural gradient boosting for a Gaussian predictive distribution parameterized by (mu, log sigma).
"""
import math

import numpy as np
from recordclass import RecordClass

from ensemble.tree import TreeGrower, split_codes
from utility import ConfigError, DataError

line_search_halvings = 10


class GaussianPrediction(RecordClass):
    """The predictive Gaussian of one row (or arrays of rows)."""
    mu: float
    log_sigma: float

    @property
    def sigma(self):
        return np.exp(self.log_sigma)


def gaussian_nll(y, mu, log_sigma):
    """The negative log-likelihood log σ + (y − μ)²/(2σ²) + ½ log 2π per row."""
    return log_sigma + (y - mu) ** 2 / (2 * np.exp(2 * log_sigma)) + 0.5 * math.log(2 * math.pi)


def gaussian_gradient(y, mu, log_sigma):
    """The ordinary gradient of the negative log-likelihood in (μ, log σ), one row per observation."""
    variance = np.exp(2 * log_sigma)
    residual = y - mu
    return np.stack([-residual / variance, 1 - residual ** 2 / variance], axis=-1)


def gaussian_fisher(log_sigma):
    """The Fisher information diag(1/σ², 2) in (μ, log σ), one 2x2 matrix per row."""
    log_sigma = np.atleast_1d(np.asarray(log_sigma, dtype=np.float64))
    fisher = np.zeros(log_sigma.shape + (2, 2))
    fisher[..., 0, 0] = np.exp(-2 * log_sigma)
    fisher[..., 1, 1] = 2.0
    return fisher


def gaussian_natural_gradient(y, mu, log_sigma):
    """The Fisher preconditioned gradient (−(y − μ), (1 − (y − μ)²/σ²)/2)."""
    variance = np.exp(2 * log_sigma)
    residual = y - mu
    return np.stack([-residual, (1 - residual ** 2 / variance) / 2], axis=-1)


class NaturalGradientBoosting:
    """Per parameter tree ensembles added to the unconditional Gaussian fit, each round with its own step scale."""
    def __init__(self, initial_parameters, stages, learning_rate, train_losses=None):
        self.initial_parameters = initial_parameters
        self.stages = stages  # (mu tree, log sigma tree, scale) per accepted round.
        self.learning_rate = learning_rate
        self.train_losses = train_losses or []

    def predict_dist(self, X):
        """
        The predictive distribution of each row.

        :rtype: GaussianPrediction
        """
        row_count = np.asarray(X).shape[0]
        mu = np.full(row_count, self.initial_parameters[0])
        log_sigma = np.full(row_count, self.initial_parameters[1])
        for mu_tree, log_sigma_tree, scale in self.stages:
            mu = mu - self.learning_rate * scale * mu_tree.predict(X)
            log_sigma = log_sigma - self.learning_rate * scale * log_sigma_tree.predict(X)
        return GaussianPrediction(mu=mu, log_sigma=log_sigma)

    def predict(self, X):
        """The point prediction μ."""
        return self.predict_dist(X).mu

    def negative_log_likelihood(self, X, y):
        distribution = self.predict_dist(X)
        return float(np.mean(gaussian_nll(np.asarray(y, dtype=np.float64), distribution.mu,
                                          distribution.log_sigma)))


def fit_ngb_gaussian(X, y, params, summary_writer=None, model_name='NGB'):
    """
    Fits Gaussian natural gradient boosting.

    Both parameters start at the unconditional maximum likelihood fit. Each round fits one variance reduction
    tree per parameter to the natural gradient of the negative log-likelihood and takes the learning rate scaled
    step, halved until the training negative log-likelihood does not increase. A round with no improving scale is
    skipped.

    :param X: The features.
    :type X: np.ndarray
    :param y: The targets.
    :type y: np.ndarray
    :param params: The boosting settings (the regularization settings are not used).
    :type params: ensemble.boosting.BoostParams
    :param summary_writer: Receives the per round training negative log-likelihood when given.
    :type summary_writer: utility.SummaryWriter or None
    :param model_name: The name the training loss is logged under.
    :type model_name: str
    :rtype: NaturalGradientBoosting
    """
    params.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise DataError(f'Features of shape {X.shape} do not match {y.shape[0]} targets.')
    deviation = float(np.std(y))
    if not deviation > 0:
        raise ConfigError('Gaussian natural gradient boosting needs targets with nonzero variance.')
    initial_parameters = (float(np.mean(y)), math.log(deviation))
    tree_params = params.tree_params()
    grower = TreeGrower(tree_params)
    codes = split_codes(X, tree_params)
    ones = np.ones_like(y)
    mu = np.full(y.shape, initial_parameters[0])
    log_sigma = np.full(y.shape, initial_parameters[1])
    loss = float(np.mean(gaussian_nll(y, mu, log_sigma)))
    stages, losses = [], []
    for round_ in range(params.n_rounds):
        natural_gradient = gaussian_natural_gradient(y, mu, log_sigma)
        trees = []
        for parameter in range(2):
            target = natural_gradient[:, parameter]
            mean = float(np.mean(target))
            trees.append(grower.grow(X, codes, -(target - mean), ones, offset=mean))
        mu_step, log_sigma_step = trees[0].predict(X), trees[1].predict(X)
        scale = 1.0
        for _ in range(line_search_halvings):
            candidate_mu = mu - params.learning_rate * scale * mu_step
            candidate_log_sigma = log_sigma - params.learning_rate * scale * log_sigma_step
            candidate_loss = float(np.mean(gaussian_nll(y, candidate_mu, candidate_log_sigma)))
            if candidate_loss <= loss:
                mu, log_sigma, loss = candidate_mu, candidate_log_sigma, candidate_loss
                stages.append((trees[0], trees[1], scale))
                break
            scale /= 2
        losses.append(loss)
        if summary_writer is not None:
            summary_writer.add_scalar(f'Training/{model_name} loss', loss, global_step=round_)
    return NaturalGradientBoosting(initial_parameters, stages, params.learning_rate, losses)
