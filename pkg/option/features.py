"""
Design matrix assembly for the named input configurations and the sliding window transform.
"""
import numpy as np
import pandas as pd
from recordclass import RecordClass

from option.data import annualized_dividend_yield
from utility import ConfigError, DataError

feature_extractors = {
    'S': lambda record: record.spot,
    'K': lambda record: record.strike,
    'S/K': lambda record: record.spot / record.strike,
    'tau': lambda record: record.tau,
    'r': lambda record: record.rate,
    'sigma': lambda record: record.sigma,
    'delta': lambda record: record.delta,
    'q': lambda record: annualized_dividend_yield(record.q_monthly),
}

input_configs = {
    'In1': ['S', 'K', 'tau', 'r'],
    'In2': ['S/K', 'tau', 'r'],
    'In3': ['S', 'K', 'tau', 'r', 'sigma'],
    'In4': ['S/K', 'tau', 'r', 'sigma'],
    'In5': ['S', 'K', 'tau', 'r', 'sigma', 'delta'],
    'In6': ['S/K', 'tau', 'r', 'sigma', 'delta'],
    'STANDARD': ['S/K', 'tau', 'r', 'sigma', 'q'],
}
input_experiment_configs = ['In1', 'In2', 'In3', 'In4', 'In5', 'In6']


class FeatureMatrix(RecordClass):
    """A design matrix with its target, row keys and the records it was built from."""
    columns: list
    X: np.ndarray
    y: np.ndarray
    keys: list
    records: list

    @property
    def rows(self):
        return self.X.shape[0]

    def take(self, indexes):
        """The matrix restricted to (and reordered by) the given row indexes."""
        indexes = np.asarray(indexes, dtype=np.int64)
        return FeatureMatrix(columns=list(self.columns), X=self.X[indexes], y=self.y[indexes],
                             keys=[self.keys[index] for index in indexes],
                             records=[self.records[index] for index in indexes])


def config_columns(config):
    """The ordered feature names of a named input configuration (or an explicit list of names)."""
    if isinstance(config, str):
        if config not in input_configs:
            raise ConfigError(f'{config} is not an input configuration.')
        return list(input_configs[config])
    return list(config)


def assemble(records, config):
    """
    Builds the design matrix of a set of records, one row per record in input order.

    :param records: The option records.
    :type records: list[option.data.OptionRecord]
    :param config: A configuration name (In1..In6, STANDARD) or an ordered list of feature names.
    :type config: str or list[str]
    :return: The feature matrix with the market price as target.
    :rtype: FeatureMatrix
    """
    columns = config_columns(config)
    for column in columns:
        if column not in feature_extractors:
            raise ConfigError(f'{column} is not a known feature.')
    X = np.array([[feature_extractors[column](record) for column in columns] for record in records],
                 dtype=np.float64).reshape(len(records), len(columns))
    missing = np.argwhere(np.isnan(X))
    if missing.size > 0:
        row, column = missing[0]
        raise DataError(f'Record {row + 1} ({records[row].contract_id}) has no value for feature '
                        f'`{columns[column]}`.')
    y = np.array([record.price for record in records], dtype=np.float64)
    keys = [(record.contract_id, record.trade_date) for record in records]
    return FeatureMatrix(columns=columns, X=X, y=y, keys=keys, records=list(records))


def sliding_window(matrix, window_size):
    """
    Appends each row's previous `window_size` observations of every base feature within its contract.

    Rows are grouped by contract (in order of first appearance) and sorted by trade date. Rows with fewer than
    `window_size` predecessors in their contract are dropped. Lag columns follow the base columns in lag order,
    named `<feature>_lag<n>`.

    :type matrix: FeatureMatrix
    :type window_size: int
    :rtype: FeatureMatrix
    """
    if window_size < 1:
        raise ConfigError(f'Window size must be at least 1, got {window_size}.')
    base_columns = list(matrix.columns)
    data_frame = pd.DataFrame(matrix.X, columns=base_columns)
    data_frame['contract_id'] = pd.Categorical([key[0] for key in matrix.keys],
                                               categories=pd.unique(pd.Series([key[0] for key in matrix.keys])))
    data_frame['trade_date'] = [key[1] for key in matrix.keys]
    data_frame['row'] = np.arange(matrix.rows)
    data_frame = data_frame.sort_values(['contract_id', 'trade_date'], kind='mergesort')
    groups = data_frame.groupby('contract_id', sort=False, observed=True)
    lag_blocks = []
    for lag in range(1, window_size + 1):
        lagged = groups[base_columns].shift(lag)
        lagged.columns = [f'{column}_lag{lag}' for column in base_columns]
        lag_blocks.append(lagged)
    surviving = (groups.cumcount() >= window_size).to_numpy()
    windowed = pd.concat([data_frame[base_columns]] + lag_blocks, axis=1)[surviving]
    rows = data_frame['row'].to_numpy()[surviving]
    return FeatureMatrix(columns=list(windowed.columns), X=windowed.to_numpy(dtype=np.float64), y=matrix.y[rows],
                         keys=[matrix.keys[row] for row in rows], records=[matrix.records[row] for row in rows])


def sort_by_date(matrix):
    """Stably reorders the rows chronologically."""
    order = sorted(range(matrix.rows), key=lambda row: matrix.keys[row][1])
    return matrix.take(order)


def surviving_row_count(matrix, window_size):
    """The number of rows `sliding_window` keeps."""
    counts = pd.Series([key[0] for key in matrix.keys]).value_counts()
    return int(sum(max(count - window_size, 0) for count in counts))
