"""
Shared test fixtures.
"""
import datetime

import pytest

from option.data import OptionRecord, generate_synthetic
from option.pricing import OptionKind
from settings import GeneratorSettings


def small_generator_settings(seed=0):
    """A reduced synthetic market that still spans enough trading days for a GARCH fit."""
    generator_settings = GeneratorSettings()
    generator_settings.seed = seed
    generator_settings.date_ranges = [
        {'start': '2020-01-01', 'end': '2020-08-31', 'size': 800, 'clean': False},
        {'start': '2020-09-01', 'end': '2020-12-31', 'size': 300, 'clean': False},
        {'start': '2021-09-01', 'end': '2021-12-31', 'size': 300, 'clean': True},
    ]
    generator_settings.strike_grid = [0.9, 0.95, 1.0, 1.05, 1.1]
    generator_settings.maturities = [21, 42]
    return generator_settings


@pytest.fixture(scope='session')
def synthetic_records():
    return generate_synthetic(small_generator_settings())


def make_record(contract_id='C1', day=1, spot=100.0, strike=100.0, kind=OptionKind.call, price=5.0,
                sigma=0.2, delta=0.5):
    return OptionRecord(trade_date=datetime.date(2020, 1, 1) + datetime.timedelta(days=day),
                        contract_id=contract_id, spot=spot, strike=strike, tau=0.25, rate=0.02, q_monthly=0.002,
                        kind=kind, sigma=sigma, delta=delta, price=price)


@pytest.fixture
def record_factory():
    return make_record
