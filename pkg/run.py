"""
Runs the option pricing benchmark from the command line.
"""
import argparse
import sys

import numpy as np
import pandas as pd

from evaluation import ErrorTable, WeightVector, score_table
from experiment import RunRecord
from option.data import generate_synthetic, save_csv
from option.experiments import experiment_runners, run_all
from option.presentation import emit_report, format_number, score_decimals
from option.volatility import forecast_vol, garch_fit, log_returns
from settings import ExperimentName, GeneratorSettings, Settings
from utility import BenchmarkError, DataError

price_columns = ('close', 'price', 'S')


def generate_data(arguments):
    generator_settings = GeneratorSettings.from_file(arguments.config) if arguments.config else GeneratorSettings()
    if arguments.scale == 'full':
        generator_settings.full_scale()
    if arguments.seed is not None:
        generator_settings.seed = arguments.seed
    records = generate_synthetic(generator_settings)
    save_csv(records, arguments.output)
    print(f'Wrote {len(records)} option records to {arguments.output}.')


def read_prices(path, column=None):
    """The price series of a CSV, from the named column or the first of `close`, `price` and `S`."""
    try:
        data_frame = pd.read_csv(path, comment='#')
    except (OSError, pd.errors.ParserError) as error:
        raise DataError(f'Could not read price CSV `{path}`: {error}') from error
    candidates = [column] if column else [name for name in price_columns if name in data_frame.columns]
    if not candidates or candidates[0] not in data_frame.columns:
        if column is None and len(data_frame.columns) == 1:
            candidates = list(data_frame.columns)
        else:
            raise DataError(f'`{path}` has no {column or " / ".join(price_columns)} column.')
    prices = pd.to_numeric(data_frame[candidates[0]], errors='coerce').to_numpy(dtype=np.float64)
    if np.any(np.isnan(prices)):
        raise DataError(f'Row {int(np.flatnonzero(np.isnan(prices))[0]) + 1}: field `{candidates[0]}` is not a '
                        f'number.')
    if 'trade_date' in data_frame.columns:  # Spot columns of option CSVs repeat per quote.
        prices = data_frame.assign(price_=prices).groupby('trade_date', sort=True)['price_'].first().to_numpy()
    return prices


def fit_volatility(arguments):
    returns = log_returns(read_prices(arguments.prices, arguments.column))
    params = garch_fit(returns)
    print(f'omega={params.omega!r}')
    print(f'alpha={params.alpha!r}')
    print(f'beta={params.beta!r}')
    print(f'loglik={params.loglik!r}')
    print(f'degenerate={params.degenerate}')
    print(f'next_volatility={forecast_vol(params, returns, arguments.periods_per_year)!r}')


def build_settings(arguments):
    settings = Settings.from_file(arguments.config) if arguments.config else Settings()
    overrides = {}
    if arguments.seed is not None:
        overrides['seed'] = arguments.seed
    if arguments.out is not None:
        overrides['logs_directory'] = arguments.out
    if arguments.fixture:
        overrides['fixture_mode'] = True
    if arguments.data is not None:
        overrides['data_path'] = arguments.data
    if arguments.trial_name is not None:
        overrides['trial_name'] = arguments.trial_name
    return settings.update(overrides)


def run_experiments(arguments):
    settings = build_settings(arguments)
    if arguments.experiment == 'all':
        records = run_all(settings)
    else:
        records = [experiment_runners[ExperimentName(arguments.experiment)](settings)]
    for record in records:
        print(emit_report(record, 'markdown'))


def score_errors(arguments):
    excluded = None if arguments.exclude is None else [name.strip() for name in arguments.exclude.split(',')
                                                       if name.strip()]
    table = ErrorTable.from_csv(arguments.errors, bs_row=arguments.bs_row, excluded_from_ml_max=excluded)
    if arguments.weights is None:
        weights = WeightVector({sub: 1.0 for sub in table.sub_experiments})
    else:
        weights = WeightVector.parse(arguments.weights, table.sub_experiments)
    report = score_table(table, weights)
    if arguments.output is not None:
        report.to_csv(arguments.output)
    print('model,score_bs,score_ml')
    for model, row in report.scores.iterrows():
        print(f'{model},{format_number(row["score_bs"], score_decimals)},'
              f'{format_number(row["score_ml"], score_decimals)}')


def write_report(arguments):
    record = RunRecord.load(arguments.run_directory)
    sys.stdout.write(emit_report(record, arguments.format))


def build_parser():
    parser = argparse.ArgumentParser(description='Option pricing ensemble learning benchmark.')
    subparsers = parser.add_subparsers(dest='command', required=True)

    gen_data = subparsers.add_parser('gen-data', help='Generate a synthetic option market CSV.')
    gen_data.add_argument('config', nargs='?', default=None, help='Generator settings YAML (defaults if omitted).')
    gen_data.add_argument('output', help='Output option CSV path.')
    gen_data.add_argument('--seed', type=int, default=None, help='Overrides the generator seed.')
    gen_data.add_argument('--scale', choices=['desk', 'full'], default='desk', help='Range size preset.')
    gen_data.set_defaults(handler=generate_data)

    fit_vol = subparsers.add_parser('fit-vol', help='Fit GARCH(1,1) to a price series.')
    fit_vol.add_argument('prices', help='CSV with a close, price or S column.')
    fit_vol.add_argument('--column', default=None, help='The price column to read.')
    fit_vol.add_argument('--periods-per-year', type=int, default=252, help='Annualization factor.')
    fit_vol.set_defaults(handler=fit_volatility)

    run = subparsers.add_parser('run', help='Run one major experiment or all of them.')
    run.add_argument('experiment', choices=[name.value for name in ExperimentName] + ['all'])
    run.add_argument('--config', default=None, help='Settings YAML.')
    run.add_argument('--seed', type=int, default=None, help='Overrides the settings seed.')
    run.add_argument('--out', default=None, help='Logs directory the run directories are written under.')
    run.add_argument('--fixture', action='store_true', help='Score the published error tables instead of training.')
    run.add_argument('--data', default=None, help='Option CSV (synthetic data is generated otherwise).')
    run.add_argument('--trial-name', default=None, help='Name of the trial directory.')
    run.set_defaults(handler=run_experiments)

    score = subparsers.add_parser('score', help='Score an error table CSV.')
    score.add_argument('errors', help='Long form model,sub,error CSV.')
    score.add_argument('--weights', default=None, help='Comma separated weights in sub-experiment order.')
    score.add_argument('--bs-row', default=None, help='The model whose error is the BS reference.')
    score.add_argument('--exclude', default=None, help='Comma separated models left out of the worst model error.')
    score.add_argument('--output', default=None, help='Also write the scores CSV here.')
    score.set_defaults(handler=score_errors)

    report = subparsers.add_parser('report', help='Render the report of a run directory.')
    report.add_argument('run_directory')
    report.add_argument('--format', choices=['md', 'markdown', 'csv'], default='md')
    report.set_defaults(handler=write_report)
    return parser


def main(argv=None):
    """Runs a command and returns its exit code (2 config, 3 data, 4 numerical errors)."""
    arguments = build_parser().parse_args(argv)
    try:
        arguments.handler(arguments)
    except BenchmarkError as error:
        print(f'{type(error).__name__}: {error}', file=sys.stderr)
        return error.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
