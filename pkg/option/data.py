"""
Code for the option record data: ingestion, synthetic generation, splitting and bucketing.
"""
import datetime
import math
from enum import Enum

import numpy as np
import pandas as pd
from recordclass import RecordClass

from option.pricing import OptionKind, OptionTerms, price_arrays
from option.volatility import garch_fit, log_returns, vol_series, forecast_vol
from utility import ConfigError, DataError

months_per_year = 12
atm_lower_bound = 0.96
atm_upper_bound = 1.04
csv_columns = ['trade_date', 'contract_id', 'S', 'K', 'tau_years', 'r', 'q_monthly', 'kind', 'sigma', 'delta',
               'price']


class MoneynessBucket(Enum):
    """An enum to select a moneyness partition of the option records."""
    all = 'ALL'
    itm = 'ITM'
    atm = 'ATM'
    otm = 'OTM'


class OptionRecord(RecordClass):
    """
    One observed option quote with its features and market price. The price is not a function of the sigma
    feature: synthetic markets price at their own implied volatility.
    """
    trade_date: datetime.date
    contract_id: str
    spot: float
    strike: float
    tau: float
    rate: float
    q_monthly: float
    kind: OptionKind
    sigma: float
    delta: float
    price: float


class DatasetSplit(RecordClass):
    """The records routed to each part of an experiment."""
    train: list
    test: list
    denoised_extra: list
    dropped: int = 0


def annualized_dividend_yield(q_monthly):
    """Converts the stored monthly dividend rate to the annual continuous yield pricing consumes."""
    return months_per_year * q_monthly


def option_terms(record, volatility=None, with_dividend=True):
    """
    The pricing terms of a record.

    :param record: The option record.
    :type record: OptionRecord
    :param volatility: Overrides the record's GARCH sigma feature.
    :type volatility: float or None
    :param with_dividend: Whether to carry the dividend yield (BSM) or drop it (BS).
    :type with_dividend: bool
    :rtype: option.pricing.OptionTerms
    """
    return OptionTerms(spot=record.spot, strike=record.strike, tau=record.tau, rate=record.rate,
                       dividend_yield=annualized_dividend_yield(record.q_monthly) if with_dividend else 0.0,
                       volatility=record.sigma if volatility is None else volatility, kind=record.kind)


def parse_date(value):
    """Parses a YYYY-MM-DD date (dates pass through)."""
    if isinstance(value, datetime.date):
        return value
    return datetime.date.fromisoformat(str(value))


def parse_row(row_number, row):
    """Converts and validates one CSV row."""
    def number(field, allow_missing=False):
        text = row[field].strip()
        if text == '' and allow_missing:
            return math.nan
        try:
            return float(text)
        except ValueError:
            raise DataError(f'Row {row_number}: field `{field}` is not a number ({text!r}).') from None

    try:
        trade_date = datetime.date.fromisoformat(row['trade_date'].strip())
    except ValueError:
        raise DataError(f'Row {row_number}: field `trade_date` is not a YYYY-MM-DD date '
                        f'({row["trade_date"]!r}).') from None
    try:
        kind = OptionKind(row['kind'].strip().lower())
    except ValueError:
        raise DataError(f'Row {row_number}: field `kind` must be call or put ({row["kind"]!r}).') from None
    record = OptionRecord(trade_date=trade_date, contract_id=row['contract_id'].strip(), spot=number('S'),
                          strike=number('K'), tau=number('tau_years'), rate=number('r'),
                          q_monthly=number('q_monthly'), kind=kind, sigma=number('sigma', allow_missing=True),
                          delta=number('delta', allow_missing=True), price=number('price'))
    checks = [('S', record.spot > 0, 'must be positive'), ('K', record.strike > 0, 'must be positive'),
              ('tau_years', record.tau > 0, 'must be positive'), ('price', record.price >= 0, 'must be nonnegative'),
              ('r', math.isfinite(record.rate), 'must be finite'),
              ('q_monthly', math.isfinite(record.q_monthly), 'must be finite'),
              ('contract_id', record.contract_id != '', 'must not be empty')]
    for field, passed, requirement in checks:
        if not passed:
            raise DataError(f'Row {row_number}: field `{field}` {requirement} ({row[field]!r}).')
    return record


def load_csv(path):
    """
    Loads option records from the documented CSV schema, preserving row order.

    :param path: The CSV file path.
    :type path: str
    :return: The validated records.
    :rtype: list[OptionRecord]
    """
    try:
        data_frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError) as error:
        raise DataError(f'Could not read option CSV `{path}`: {error}') from error
    missing_columns = [column for column in csv_columns if column not in data_frame.columns]
    if missing_columns:
        raise DataError(f'Option CSV `{path}` is missing columns {missing_columns}.')
    return [parse_row(row_number, row)
            for row_number, row in enumerate(data_frame[csv_columns].to_dict('records'), start=1)]


def save_csv(records, path):
    """Writes option records in the documented CSV schema with round trip exact numbers."""
    rows = [[record.trade_date.isoformat(), record.contract_id, repr(record.spot), repr(record.strike),
             repr(record.tau), repr(record.rate), repr(record.q_monthly), record.kind.value,
             '' if math.isnan(record.sigma) else repr(record.sigma),
             '' if math.isnan(record.delta) else repr(record.delta), repr(record.price)]
            for record in records]
    pd.DataFrame(rows, columns=csv_columns, dtype=str).to_csv(path, index=False, lineterminator='\n')


def contract_panel(generator_settings, dates):
    """The day indexes, expiry indexes and strikes of every listed contract quote on the path."""
    contract_ids, day_indexes, expiry_indexes, moneyness_values, kinds, listing_indexes = [], [], [], [], [], []
    date_count = len(dates)
    for listing_index in range(0, date_count, generator_settings.listing_period):
        for maturity in generator_settings.maturities:
            expiry_index = listing_index + maturity
            quote_indexes = np.arange(listing_index, min(expiry_index, date_count))
            for moneyness in generator_settings.strike_grid:
                for kind in generator_settings.kinds:
                    contract_id = f'{kind[0].upper()}{dates[listing_index]:%Y%m%d}M{maturity}X{moneyness:.4f}'
                    contract_ids.append(np.full(quote_indexes.shape, contract_id, dtype=object))
                    day_indexes.append(quote_indexes)
                    expiry_indexes.append(np.full(quote_indexes.shape, expiry_index))
                    moneyness_values.append(np.full(quote_indexes.shape, moneyness))
                    kinds.append(np.full(quote_indexes.shape, kind, dtype=object))
                    listing_indexes.append(np.full(quote_indexes.shape, listing_index))
    return pd.DataFrame({'contract_id': np.concatenate(contract_ids), 'day': np.concatenate(day_indexes),
                         'expiry': np.concatenate(expiry_indexes), 'moneyness': np.concatenate(moneyness_values),
                         'kind': np.concatenate(kinds), 'listing': np.concatenate(listing_indexes)})


def limit_range_size(panel, size, random_generator):
    """Keeps whole contracts in a seeded order, truncating the last one, until `size` quotes remain."""
    contract_ids = panel['contract_id'].unique()
    random_generator.shuffle(contract_ids)
    counts = panel.groupby('contract_id', sort=False).size()
    kept_ids, total = [], 0
    for contract_id in contract_ids:
        if total >= size:
            break
        kept_ids.append(contract_id)
        total += counts[contract_id]
    kept = panel[panel['contract_id'].isin(kept_ids)]
    if total > size:
        excess = total - size
        last_rows = kept.index[kept['contract_id'] == kept_ids[-1]]
        kept = kept.drop(last_rows[len(last_rows) - excess:])
    return kept


def market_volatility(generator_settings, spot, strike):
    """The implied volatility the synthetic market prices a quote at, a quadratic smile in log moneyness."""
    log_moneyness = np.log(np.asarray(strike, dtype=np.float64) / np.asarray(spot, dtype=np.float64))
    smile = (generator_settings.gbm_sigma + generator_settings.vol_premium +
             generator_settings.smile_skew * log_moneyness + generator_settings.smile_curvature * log_moneyness ** 2)
    return np.maximum(smile, generator_settings.min_market_volatility)


def generate_synthetic(generator_settings, seed=None):
    """
    Generates a seeded synthetic option market.

    The underlying follows a geometric Brownian path over the trading days spanned by the date ranges. Contracts
    are listed every `listing_period` days for each maturity, strike multiple and kind. Market prices are the BSM
    price at the market volatility of `market_volatility` (a smile over the path volatility) plus Gaussian noise
    with standard deviation `noise_eta` times the price (zero in clean ranges), truncated at zero. The sigma
    feature is one GARCH(1,1) fit on the index broadcast by date and the delta feature is the BSM delta at that
    sigma, so even a clean price differs from the BSM price at the record's own sigma.

    :param generator_settings: The market configuration.
    :type generator_settings: settings.GeneratorSettings
    :param seed: Overrides the configured seed.
    :type seed: int or None
    :return: The records ordered by trade date.
    :rtype: list[OptionRecord]
    """
    generator_settings.validate()
    seed = generator_settings.seed if seed is None else seed
    random_generator = np.random.default_rng(seed)
    ranges = [(parse_date(date_range['start']), parse_date(date_range['end']))
              for date_range in generator_settings.date_ranges]
    dates = pd.bdate_range(min(start for start, _ in ranges), max(end for _, end in ranges)).date
    if len(dates) < 2:
        raise ConfigError('The generator date ranges span fewer than two trading days.')
    periods_per_year = generator_settings.periods_per_year
    step = 1 / periods_per_year
    drift = (generator_settings.gbm_mu - 0.5 * generator_settings.gbm_sigma ** 2) * step
    increments = drift + generator_settings.gbm_sigma * math.sqrt(step) * random_generator.standard_normal(
        len(dates) - 1)
    path = generator_settings.initial_spot * np.exp(np.concatenate([[0.0], np.cumsum(increments)]))
    returns = log_returns(path)
    garch_params = garch_fit(returns)
    sigma_by_day = np.concatenate([vol_series(garch_params, returns, periods_per_year),
                                   [forecast_vol(garch_params, returns, periods_per_year)]])

    panel = contract_panel(generator_settings, dates)
    panel_dates = dates[panel['day'].to_numpy()]
    panel['range'] = -1
    for range_index, (start, end) in enumerate(ranges):
        in_range = (panel_dates >= start) & (panel_dates <= end) & (panel['range'].to_numpy() == -1)
        panel.loc[in_range, 'range'] = range_index
    panel = panel[panel['range'] >= 0]
    kept_panels = []
    for range_index, date_range in enumerate(generator_settings.date_ranges):
        range_panel = panel[panel['range'] == range_index]
        size = date_range.get('size')
        if size is not None and len(range_panel) > size:
            range_panel = limit_range_size(range_panel, size, random_generator)
        kept_panels.append(range_panel)
    panel = pd.concat(kept_panels).sort_values(['day', 'contract_id'], kind='mergesort')

    days = panel['day'].to_numpy()
    spot = path[days]
    strike = np.round(path[panel['listing'].to_numpy()] * panel['moneyness'].to_numpy(), 2)
    tau = (panel['expiry'].to_numpy() - days) / periods_per_year
    is_call = panel['kind'].to_numpy() == OptionKind.call.value
    dividend_yield = annualized_dividend_yield(generator_settings.q_monthly)
    true_price, _ = price_arrays(spot, strike, tau, generator_settings.rate, dividend_yield,
                                 market_volatility(generator_settings, spot, strike), is_call)
    clean = np.array([bool(generator_settings.date_ranges[index].get('clean', False))
                      for index in panel['range'].to_numpy()], dtype=bool)
    noise_scale = np.where(clean, 0.0, generator_settings.noise_eta)
    market_price = np.maximum(true_price + noise_scale * true_price * random_generator.standard_normal(len(days)),
                              0.0)
    sigma = sigma_by_day[days]
    _, delta = price_arrays(spot, strike, tau, generator_settings.rate, dividend_yield, sigma, is_call)
    return [OptionRecord(trade_date=dates[day], contract_id=contract_id, spot=float(spot_), strike=float(strike_),
                         tau=float(tau_), rate=float(generator_settings.rate),
                         q_monthly=float(generator_settings.q_monthly), kind=OptionKind(kind), sigma=float(sigma_),
                         delta=float(delta_), price=float(price_))
            for day, contract_id, spot_, strike_, tau_, kind, sigma_, delta_, price_
            in zip(days, panel['contract_id'], spot, strike, tau, panel['kind'], sigma, delta, market_price)]


def parse_range(date_range):
    """Converts a (start, end) pair to closed date interval bounds."""
    start, end = (parse_date(value) for value in date_range)
    if start > end:
        raise ConfigError(f'Date range {date_range} starts after it ends.')
    return start, end


def ranges_overlap(first, second):
    """Whether two closed date intervals share a date."""
    return first[0] <= second[1] and second[0] <= first[1]


def split_by_dates(records, train_ranges, test_range, denoised_ranges=()):
    """
    Routes records by trade date into train, test and denoised augmentation sets (closed intervals).

    Records inside a denoised range go to `denoised_extra` even when a train range also covers them. Records in no
    range are dropped and counted.

    :rtype: DatasetSplit
    """
    train_ranges = [parse_range(date_range) for date_range in train_ranges]
    denoised_ranges = [parse_range(date_range) for date_range in denoised_ranges]
    test_range = parse_range(test_range)
    for date_range in train_ranges + denoised_ranges:
        if ranges_overlap(date_range, test_range):
            raise ConfigError(f'Training range {date_range} overlaps the test range {test_range}.')
    split = DatasetSplit(train=[], test=[], denoised_extra=[], dropped=0)

    def inside(date, ranges):
        return any(start <= date <= end for start, end in ranges)

    for record in records:
        if inside(record.trade_date, [test_range]):
            split.test.append(record)
        elif inside(record.trade_date, denoised_ranges):
            split.denoised_extra.append(record)
        elif inside(record.trade_date, train_ranges):
            split.train.append(record)
        else:
            split.dropped += 1
    return split


def moneyness_bucket(spot, strike, swap_labels=False):
    """
    The moneyness bucket of S/K: (0, 0.96) is ITM, [0.96, 1.04] is ATM and (1.04, inf) is OTM.

    :param swap_labels: Swaps the ITM and OTM labels to the usual call convention.
    :type swap_labels: bool
    :rtype: MoneynessBucket
    """
    if not (spot > 0 and strike > 0):
        raise DataError(f'Moneyness needs a positive spot and strike, got S={spot}, K={strike}.')
    ratio = spot / strike
    if ratio < atm_lower_bound:
        bucket = MoneynessBucket.itm
    elif ratio <= atm_upper_bound:
        return MoneynessBucket.atm
    else:
        bucket = MoneynessBucket.otm
    if swap_labels:
        bucket = MoneynessBucket.otm if bucket == MoneynessBucket.itm else MoneynessBucket.itm
    return bucket


def bucket_records(records, bucket, swap_labels=False):
    """The records falling in a moneyness bucket (ALL keeps every record)."""
    if bucket == MoneynessBucket.all:
        return list(records)
    return [record for record in records if moneyness_bucket(record.spot, record.strike, swap_labels) == bucket]


def build_denoised_train(split):
    """
    The noise controlled training set: the training records followed by the denoised augmentation. Denoised
    records carry the noiseless market price, the BSM price at the market volatility rather than at their sigma.
    """
    return list(split.train) + list(split.denoised_extra)
