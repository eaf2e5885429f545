"""
Error metrics and the score rate evaluation mechanism comparing models across sub-experiments.
"""
import math
import os

import numpy as np
import pandas as pd
import yaml

from utility import ConfigError, DataError, NumericalError

fixtures_directory = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
default_bs_row = 'BS'
default_excluded_from_ml_max = ('BS', 'BSM')


def residuals(pred, actual):
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise DataError(f'Predictions of shape {pred.shape} do not match actuals of shape {actual.shape}.')
    if pred.size == 0:
        raise DataError('Errors need at least one prediction.')
    return pred - actual


def mse(pred, actual):
    """The mean squared difference."""
    return float(np.mean(residuals(pred, actual) ** 2))


def rmse(pred, actual):
    """The root mean squared difference."""
    return math.sqrt(mse(pred, actual))


def score_rate_bs(e, e_bs):
    """
    The percentage improvement of an error over the BS baseline error, (E_BS − e)/E_BS × 100. Negative when the
    model does worse than the baseline.
    """
    if e_bs == 0:
        raise NumericalError('The BS reference error is zero, so its score rate is undefined.')
    return (e_bs - e) / e_bs * 100


def score_rate_ml(e, e_max):
    """The percentage improvement of an error over the largest learned model error, (E − e)/E × 100."""
    if e_max == 0:
        raise NumericalError('The largest learned model error is zero, so its score rate is undefined.')
    return (e_max - e) / e_max * 100


class WeightVector:
    """The positive weight of each sub-experiment."""
    def __init__(self, weights):
        self.weights = {str(sub): float(weight) for sub, weight in dict(weights).items()}
        for sub, weight in self.weights.items():
            if not weight > 0:
                raise ConfigError(f'The weight of {sub} must be positive, got {weight}.')

    @classmethod
    def parse(cls, text, sub_experiments):
        """Reads comma separated weights given in sub-experiment order."""
        values = [value.strip() for value in text.split(',') if value.strip()]
        if len(values) != len(sub_experiments):
            raise ConfigError(f'{len(values)} weights were given for {len(sub_experiments)} sub-experiments.')
        try:
            return cls(dict(zip(sub_experiments, map(float, values))))
        except ValueError:
            raise ConfigError(f'Weights `{text}` are not all numbers.') from None

    def check_keys(self, sub_experiments):
        if set(self.weights) != set(sub_experiments):
            raise ConfigError(f'Weights cover {sorted(self.weights)} but the sub-experiments are '
                              f'{sorted(sub_experiments)}.')


def weighted_score(per_sub_rates, weights, label=''):
    """
    The weight normalized mean Σ w·rate / Σ w. Absent (NaN) rates are left out of both sums with a warning.

    :param per_sub_rates: The rate of each sub-experiment.
    :type per_sub_rates: dict[str, float]
    :type weights: WeightVector or dict[str, float]
    :rtype: float
    """
    if not isinstance(weights, WeightVector):
        weights = WeightVector(weights)
    weights.check_keys(per_sub_rates)
    total, weight_total = 0.0, 0.0
    for sub, rate in per_sub_rates.items():
        if rate is None or math.isnan(rate):
            print(f'Warning: {label} has no rate for {sub}; it is left out of the weighted score.')
            continue
        total += weights.weights[sub] * rate
        weight_total += weights.weights[sub]
    if weight_total == 0:
        return math.nan
    return total / weight_total


class ErrorTable:
    """
    The error of each model in each sub-experiment. Absent cells are NaN.

    :ivar errors: Models as rows and sub-experiments as columns, both in insertion order.
    :type errors: pd.DataFrame
    """
    def __init__(self, errors=None, bs_row=default_bs_row, excluded_from_ml_max=default_excluded_from_ml_max,
                 metric='rmse'):
        self.errors = errors if errors is not None else pd.DataFrame(dtype=np.float64)
        self.bs_row = bs_row
        self.excluded_from_ml_max = list(excluded_from_ml_max)
        self.metric = metric

    @property
    def models(self):
        return list(self.errors.index)

    @property
    def sub_experiments(self):
        return list(self.errors.columns)

    def set_error(self, model, sub, error):
        if not (error >= 0 or math.isnan(error)):
            raise DataError(f'The error of {model} in {sub} must be nonnegative, got {error}.')
        if model not in self.errors.index:
            self.errors = self.errors.reindex(self.models + [model])
        if sub not in self.errors.columns:
            self.errors = self.errors.reindex(columns=self.sub_experiments + [sub])
        self.errors = self.errors.astype(np.float64)
        self.errors.loc[model, sub] = float(error)

    def error(self, model, sub):
        return float(self.errors.loc[model, sub])

    def scored_models(self):
        """The models receiving score rates: every row but the BS row and the excluded baselines."""
        return [model for model in self.models
                if model != self.bs_row and model not in self.excluded_from_ml_max]

    def designations(self):
        return {'bs_row': self.bs_row, 'excluded_from_ml_max': list(self.excluded_from_ml_max),
                'metric': self.metric}

    def to_csv(self, path):
        """Writes the long `model,sub,error` form with the designations in a YAML sidecar."""
        rows = [[model, sub, '' if math.isnan(self.errors.loc[model, sub]) else repr(self.error(model, sub))]
                for model in self.models for sub in self.sub_experiments]
        pd.DataFrame(rows, columns=['model', 'sub', 'error'], dtype=str).to_csv(path, index=False,
                                                                                lineterminator='\n')
        with open(sidecar_path(path), 'w') as sidecar_file:
            yaml.safe_dump(self.designations(), sidecar_file, sort_keys=False)

    @classmethod
    def from_csv(cls, path, bs_row=None, excluded_from_ml_max=None):
        """
        Reads the long `model,sub,error` form. Lines starting with `#` are provenance comments. Designations come
        from the arguments, then the YAML sidecar, then the defaults.
        """
        try:
            data_frame = pd.read_csv(path, comment='#', dtype=str, keep_default_na=False, skipinitialspace=True)
        except (OSError, pd.errors.ParserError) as error:
            raise DataError(f'Could not read error table `{path}`: {error}') from error
        for column in ('model', 'sub', 'error'):
            if column not in data_frame.columns:
                raise DataError(f'Error table `{path}` is missing the `{column}` column.')
        table = cls()
        sidecar = read_sidecar(path)
        table.bs_row = bs_row if bs_row is not None else sidecar.get('bs_row', default_bs_row)
        table.excluded_from_ml_max = list(excluded_from_ml_max if excluded_from_ml_max is not None else
                                          sidecar.get('excluded_from_ml_max', default_excluded_from_ml_max))
        table.metric = sidecar.get('metric', 'rmse')
        seen = set()
        for row_number, row in enumerate(data_frame.to_dict('records'), start=1):
            model, sub, text = row['model'].strip(), row['sub'].strip(), row['error'].strip()
            if (model, sub) in seen:
                raise DataError(f'Row {row_number}: {model} in {sub} appears twice.')
            seen.add((model, sub))
            try:
                error = math.nan if text == '' else float(text)
            except ValueError:
                raise DataError(f'Row {row_number}: field `error` is not a number ({text!r}).') from None
            table.set_error(model, sub, error)
        return table


def sidecar_path(path):
    return os.path.splitext(path)[0] + '.yaml'


def read_sidecar(path):
    try:
        with open(sidecar_path(path)) as sidecar_file:
            return yaml.safe_load(sidecar_file) or {}
    except FileNotFoundError:
        return {}
    except yaml.YAMLError as error:
        raise ConfigError(f'Could not read the sidecar of `{path}`: {error}') from error


class ScoreReport:
    """
    The weighted score rates of each scored model, with the per sub-experiment rates behind them.

    :ivar scores: Models as rows with `score_bs` and `score_ml` columns.
    :type scores: pd.DataFrame
    """
    def __init__(self, scores, rates_bs=None, rates_ml=None):
        self.scores = scores
        self.rates_bs = rates_bs
        self.rates_ml = rates_ml

    def score(self, model):
        return float(self.scores.loc[model, 'score_bs']), float(self.scores.loc[model, 'score_ml'])

    def to_csv(self, path):
        rows = [[model, repr(float(row['score_bs'])), repr(float(row['score_ml']))]
                for model, row in self.scores.iterrows()]
        pd.DataFrame(rows, columns=['model', 'score_bs', 'score_ml'], dtype=str).to_csv(path, index=False,
                                                                                        lineterminator='\n')

    @classmethod
    def from_csv(cls, path):
        scores = pd.read_csv(path, comment='#', index_col='model', skipinitialspace=True)
        scores.index = scores.index.astype(str)
        return cls(scores[['score_bs', 'score_ml']].astype(np.float64))


def score_table(table, weights):
    """
    Scores every model against the BS row (score_bs) and against the largest learned model error (score_ml) in
    each sub-experiment, then takes the weighted mean over sub-experiments.

    :type table: ErrorTable
    :type weights: WeightVector or dict[str, float]
    :rtype: ScoreReport
    """
    if table.bs_row not in table.models:
        raise ConfigError(f'The error table has no {table.bs_row} row to score against.')
    if not isinstance(weights, WeightVector):
        weights = WeightVector(weights)
    weights.check_keys(table.sub_experiments)
    models = table.scored_models()
    rates_bs = pd.DataFrame(np.nan, index=models, columns=table.sub_experiments)
    rates_ml = pd.DataFrame(np.nan, index=models, columns=table.sub_experiments)
    for sub in table.sub_experiments:
        e_bs = table.error(table.bs_row, sub)
        learned_errors = table.errors.loc[[model for model in table.models
                                           if model not in table.excluded_from_ml_max and model != table.bs_row],
                                          sub]
        e_max = float(learned_errors.max()) if learned_errors.notna().any() else math.nan
        for model in models:
            e = table.error(model, sub)
            if math.isnan(e):
                continue
            if not math.isnan(e_bs):
                rates_bs.loc[model, sub] = score_rate_bs(e, e_bs)
            if not math.isnan(e_max):
                rates_ml.loc[model, sub] = score_rate_ml(e, e_max)
    scores = pd.DataFrame({'score_bs': [weighted_score(rates_bs.loc[model].to_dict(), weights, model)
                                        for model in models],
                           'score_ml': [weighted_score(rates_ml.loc[model].to_dict(), weights, model)
                                        for model in models]},
                          index=pd.Index(models, name='model'), dtype=np.float64)
    return ScoreReport(scores, rates_bs, rates_ml)


def error_increase_pct(mse_original, mse_denoised):
    """The relative change (denoised − original)/original × 100 of the error."""
    if mse_original == 0:
        raise NumericalError('The original error is zero, so the relative increase is undefined.')
    return (mse_denoised - mse_original) / mse_original * 100


def noise_increase_table(table, original='Original', denoised='Denoised'):
    """The error increase of each model between the original and denoised training arms (absent cells skipped)."""
    increases = {}
    for model in table.models:
        original_error, denoised_error = table.error(model, original), table.error(model, denoised)
        if not (math.isnan(original_error) or math.isnan(denoised_error)):
            increases[model] = error_increase_pct(original_error, denoised_error)
    return pd.Series(increases, name='increase_pct', dtype=np.float64)


def best_models(table):
    """The lowest error model of each sub-experiment (absent cells ignored, ties to the earlier row)."""
    best = {}
    for sub in table.sub_experiments:
        column = table.errors[sub]
        best[sub] = column.idxmin() if column.notna().any() else None
    return best


def load_fixture(name):
    """A published error table shipped in the fixtures directory."""
    path = os.path.join(fixtures_directory, f'{name}.csv')
    if not os.path.exists(path):
        raise ConfigError(f'There is no fixture named {name}.')
    return ErrorTable.from_csv(path)


def load_published_scores(name):
    """The published weighted scores of a fixture, or None when it has none."""
    path = os.path.join(fixtures_directory, f'{name}.csv')
    if not os.path.exists(path):
        return None
    return ScoreReport.from_csv(path)
