"""
GARCH(1,1) volatility estimation for the underlying index.
"""
import math

import numpy as np
from recordclass import RecordClass
from scipy.optimize import minimize
from scipy.signal import lfilter

from utility import DataError

minimum_fit_length = 100
start_seeds = (0, 1, 2)
minimum_variance = 1e-12  # Per period floor for omega when the returns carry no variance.


class GarchParams(RecordClass):
    """The parameters of a zero mean GARCH(1,1) fit with its log-likelihood."""
    omega: float
    alpha: float
    beta: float
    loglik: float
    degenerate: bool = False


def log_returns(prices):
    """
    The log returns of a price series.

    :param prices: A series of positive prices.
    :type prices: np.ndarray
    :return: ln(p[i+1] / p[i]) for each consecutive pair.
    :rtype: np.ndarray
    """
    prices = np.asarray(prices, dtype=np.float64)
    if prices.shape[0] < 2:
        raise DataError(f'Log returns need at least 2 prices, got {prices.shape[0]}.')
    bad_indexes = np.flatnonzero(~(prices > 0))
    if bad_indexes.size > 0:
        index = bad_indexes[0]
        raise DataError(f'Price at index {index} must be positive, got {prices[index]}.')
    return np.diff(np.log(prices))


def garch_variances(omega, alpha, beta, returns):
    """
    The conditional variance recursion. The squared shock and variance before the first return are both seeded
    with the sample variance.
    """
    returns = np.asarray(returns, dtype=np.float64)
    initial_variance = np.var(returns)
    previous_squared_returns = np.concatenate([[initial_variance], returns[:-1] ** 2])
    variances, _ = lfilter([1.0], [1.0, -beta], omega + alpha * previous_squared_returns,
                           zi=[beta * initial_variance])
    return variances


def garch_log_likelihood(omega, alpha, beta, returns):
    """The Gaussian log-likelihood of the returns under the given parameters."""
    returns = np.asarray(returns, dtype=np.float64)
    variances = garch_variances(omega, alpha, beta, returns)
    if not np.all(variances > 0):
        return -np.inf
    return float(-0.5 * np.sum(np.log(2 * np.pi) + np.log(variances) + returns ** 2 / variances))


def to_unconstrained(omega, alpha, beta):
    """Maps (omega, alpha, beta) to (log omega, a, b) where alpha and beta live on the open simplex."""
    remainder = 1 - alpha - beta
    return np.array([math.log(omega), math.log(alpha / remainder), math.log(beta / remainder)])


def from_unconstrained(parameters):
    """Maps (log omega, a, b) back to (omega, alpha, beta) with alpha + beta < 1."""
    log_omega, a, b = parameters
    largest = max(a, b, 0.0)
    exp_a, exp_b, exp_c = math.exp(a - largest), math.exp(b - largest), math.exp(-largest)
    total = exp_a + exp_b + exp_c
    return math.exp(log_omega), exp_a / total, exp_b / total


def unconstrained_negative_log_likelihood(parameters, returns):
    """The objective the simplex search minimizes."""
    omega, alpha, beta = from_unconstrained(parameters)
    log_likelihood = garch_log_likelihood(omega, alpha, beta, returns)
    if not np.isfinite(log_likelihood):
        return 1e300
    return -log_likelihood


def starting_points(sample_variance):
    """Three fixed-seed starting points for the multi-start search."""
    points = []
    for seed in start_seeds:
        random_generator = np.random.default_rng(seed)
        alpha = random_generator.uniform(0.02, 0.2)
        beta = random_generator.uniform(0.5, 0.97 - alpha)
        omega = sample_variance * (1 - alpha - beta)
        points.append(to_unconstrained(omega, alpha, beta))
    return points


def garch_fit(returns, tolerance=1e-8):
    """
    Fits a zero mean GARCH(1,1) by maximum likelihood with a multi-start Nelder-Mead search.

    A fit that does not improve on the constant variance model is returned flagged as degenerate, carrying the
    constant variance parameters.

    :param returns: The return series.
    :type returns: np.ndarray
    :param tolerance: The convergence tolerance on the log-likelihood and parameters.
    :type tolerance: float
    :return: The fitted parameters.
    :rtype: GarchParams
    """
    returns = np.asarray(returns, dtype=np.float64)
    if returns.shape[0] < minimum_fit_length:
        raise DataError(f'GARCH fitting needs at least {minimum_fit_length} returns, got {returns.shape[0]}.')
    if not np.all(np.isfinite(returns)):
        raise DataError('Returns must all be finite.')
    sample_variance = float(np.var(returns))
    if sample_variance <= minimum_variance:
        return GarchParams(omega=minimum_variance, alpha=0.0, beta=0.0,
                           loglik=garch_log_likelihood(minimum_variance, 0.0, 0.0, returns), degenerate=True)
    constant_log_likelihood = garch_log_likelihood(sample_variance, 0.0, 0.0, returns)
    best_parameters, best_value = None, np.inf
    for starting_point in starting_points(sample_variance):
        result = minimize(unconstrained_negative_log_likelihood, starting_point, args=(returns,),
                          method='Nelder-Mead',
                          options={'xatol': tolerance, 'fatol': tolerance, 'maxiter': 20000, 'maxfev': 20000})
        if result.fun < best_value:
            best_parameters, best_value = result.x, result.fun
    omega, alpha, beta = from_unconstrained(best_parameters)
    log_likelihood = -best_value
    if not log_likelihood > constant_log_likelihood:
        return GarchParams(omega=sample_variance, alpha=0.0, beta=0.0, loglik=constant_log_likelihood,
                           degenerate=True)
    return GarchParams(omega=omega, alpha=alpha, beta=beta, loglik=log_likelihood)


def vol_series(params, returns, periods_per_year=252):
    """The annualized conditional volatility for each return."""
    variances = garch_variances(params.omega, params.alpha, params.beta, returns)
    return np.sqrt(variances * periods_per_year)


def forecast_vol(params, returns, periods_per_year=252):
    """The annualized one step ahead volatility after the last return."""
    returns = np.asarray(returns, dtype=np.float64)
    variances = garch_variances(params.omega, params.alpha, params.beta, returns)
    next_variance = params.omega + params.alpha * returns[-1] ** 2 + params.beta * variances[-1]
    return math.sqrt(next_variance * periods_per_year)


def simulate_garch(params, steps, seed=None):
    """
    Simulates a zero mean Gaussian GARCH(1,1) path started at the unconditional variance.

    :return: The returns and the true (per period) conditional standard deviations.
    :rtype: (np.ndarray, np.ndarray)
    """
    random_generator = np.random.default_rng(seed)
    innovations = random_generator.standard_normal(steps)
    returns = np.empty(steps)
    deviations = np.empty(steps)
    variance = params.omega / (1 - params.alpha - params.beta)
    for step in range(steps):
        deviations[step] = math.sqrt(variance)
        returns[step] = deviations[step] * innovations[step]
        variance = params.omega + params.alpha * returns[step] ** 2 + params.beta * variance
    return returns, deviations
