"""
Closed form Black-Scholes and Black-Scholes-Merton pricing.
"""
import math
from enum import Enum

import numpy as np
from recordclass import RecordClass
from scipy.special import erfc

from utility import DataError, check_finite


class OptionKind(Enum):
    """An enum to select the payoff of an option."""
    call = 'call'
    put = 'put'


class OptionTerms(RecordClass):
    """The inputs of a single closed form price. Rates and yields are annualized and continuously compounded."""
    spot: float
    strike: float
    tau: float
    rate: float
    dividend_yield: float
    volatility: float
    kind: OptionKind


class PriceResult(RecordClass):
    """A price with its delta."""
    price: float
    delta: float


def norm_cdf(x):
    """
    The standard normal cumulative distribution function.

    :param x: The point to evaluate at.
    :type x: float
    :return: The probability mass below `x`.
    :rtype: float
    """
    check_finite('x', x)
    return float(0.5 * erfc(-x / math.sqrt(2)))


def validate_terms(terms):
    """Raises a `DataError` for terms outside the pricing domain."""
    for name in ('spot', 'strike', 'tau', 'rate', 'dividend_yield', 'volatility'):
        check_finite(name, getattr(terms, name))
    if terms.spot <= 0:
        raise DataError(f'Spot must be positive, got {terms.spot}.')
    if terms.strike <= 0:
        raise DataError(f'Strike must be positive, got {terms.strike}.')
    if terms.tau < 0:
        raise DataError(f'Time to maturity must be nonnegative, got {terms.tau}.')
    if terms.volatility < 0:
        raise DataError(f'Volatility must be nonnegative, got {terms.volatility}.')
    if terms.dividend_yield < 0:
        raise DataError(f'Dividend yield must be nonnegative, got {terms.dividend_yield}.')
    if not isinstance(terms.kind, OptionKind):
        raise DataError(f'{terms.kind} is not an option kind.')


def price_arrays(spot, strike, tau, rate, dividend_yield, volatility, is_call):
    """
    Vectorized Black-Scholes-Merton prices and deltas.

    Zero time to maturity or zero volatility prices the discounted intrinsic value of the forward.

    :return: The prices and the deltas.
    :rtype: (np.ndarray, np.ndarray)
    """
    spot, strike, tau, rate, dividend_yield, volatility = np.broadcast_arrays(
        *[np.asarray(value, dtype=np.float64) for value in (spot, strike, tau, rate, dividend_yield, volatility)])
    is_call = np.broadcast_to(np.asarray(is_call, dtype=bool), spot.shape)
    dividend_discount = np.exp(-dividend_yield * tau)
    rate_discount = np.exp(-rate * tau)
    discounted_spot = spot * dividend_discount
    discounted_strike = strike * rate_discount
    deviation = volatility * np.sqrt(tau)
    degenerate = deviation == 0
    safe_deviation = np.where(degenerate, 1.0, deviation)
    d1 = (np.log(spot / strike) + (rate - dividend_yield + 0.5 * volatility ** 2) * tau) / safe_deviation
    d2 = d1 - safe_deviation
    n_d1 = 0.5 * erfc(-d1 / math.sqrt(2))
    n_d2 = 0.5 * erfc(-d2 / math.sqrt(2))
    forward_value = discounted_spot - discounted_strike
    call_price = np.where(degenerate, np.maximum(forward_value, 0.0), discounted_spot * n_d1 - discounted_strike * n_d2)
    # Rounding can push deep in the money calls past the no arbitrage bounds.
    call_price = np.clip(call_price, np.maximum(forward_value, 0.0), discounted_spot)
    call_delta = np.where(degenerate, np.where(forward_value > 0, dividend_discount, 0.0), dividend_discount * n_d1)
    put_price = np.maximum(call_price - forward_value, 0.0)
    put_delta = call_delta - dividend_discount
    price = np.where(is_call, call_price, put_price)
    delta = np.where(is_call, call_delta, put_delta)
    return price, delta


def bsm_price(terms):
    """
    The Black-Scholes-Merton price with a continuous dividend yield.

    :param terms: The option terms.
    :type terms: OptionTerms
    :return: The price and delta.
    :rtype: PriceResult
    """
    validate_terms(terms)
    price, delta = price_arrays(terms.spot, terms.strike, terms.tau, terms.rate, terms.dividend_yield,
                                terms.volatility, terms.kind == OptionKind.call)
    return PriceResult(price=float(price), delta=float(delta))


def bs_price(terms):
    """The Black-Scholes price, which ignores any dividend yield in the terms."""
    return bsm_price(OptionTerms(spot=terms.spot, strike=terms.strike, tau=terms.tau, rate=terms.rate,
                                 dividend_yield=0.0, volatility=terms.volatility, kind=terms.kind))


def parity_gap(terms):
    """Returns C - P - (S e^{-q tau} - K e^{-r tau}) with both legs priced by `bsm_price`."""
    if terms.tau <= 0:
        raise DataError(f'Parity gap needs a positive time to maturity, got {terms.tau}.')
    legs = {}
    for kind in OptionKind:
        legs[kind] = bsm_price(OptionTerms(spot=terms.spot, strike=terms.strike, tau=terms.tau, rate=terms.rate,
                                           dividend_yield=terms.dividend_yield, volatility=terms.volatility,
                                           kind=kind)).price
    forward_value = (terms.spot * math.exp(-terms.dividend_yield * terms.tau) -
                     terms.strike * math.exp(-terms.rate * terms.tau))
    return legs[OptionKind.call] - legs[OptionKind.put] - forward_value
