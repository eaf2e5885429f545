"""Code for the report documents of benchmark runs."""
import io
import math

import pandas as pd

from evaluation import best_models
from utility import ConfigError

report_formats = {'markdown': 'markdown', 'md': 'markdown', 'csv': 'csv'}
score_decimals = 4


def error_decimals(table):
    """Four decimals, or five when every error is below 0.1 so small errors keep three significant digits."""
    values = table.errors.to_numpy().ravel()
    values = values[~pd.isna(values)]
    if values.size > 0 and values.max() < 0.1:
        return 5
    return 4


def format_number(value, decimals):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return '-'
    return f'{value:.{decimals}f}'


def format_hyperparameters(params):
    if not params:
        return 'none'
    return ', '.join(f'{key}={params[key]}' for key in sorted(params))


def preferred_arms(table):
    """The lower error arm (ON or OFF) of each model in each bucket of a window run."""
    buckets = []
    for sub in table.sub_experiments:
        bucket = sub.rsplit(' ', 1)[0]
        if bucket not in buckets:
            buckets.append(bucket)
    preferences = {}
    for model in table.models:
        preferences[model] = {}
        for bucket in buckets:
            on, off = table.error(model, f'{bucket} ON'), table.error(model, f'{bucket} OFF')
            if math.isnan(on) or math.isnan(off):
                preferences[model][bucket] = '-'
            elif on == off:
                preferences[model][bucket] = 'tie'
            else:
                preferences[model][bucket] = 'ON' if on < off else 'OFF'
    return buckets, preferences


def is_window_table(table):
    subs = table.sub_experiments
    return bool(subs) and all(sub.endswith(' ON') or sub.endswith(' OFF') for sub in subs)


def markdown_table(header, rows):
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '|'.join(['---'] * len(header)) + '|']
    lines.extend('| ' + ' | '.join(row) + ' |' for row in rows)
    return lines


def markdown_report(record):
    table = record.error_table
    decimals = error_decimals(table)
    lines = [f'# {record.plan.name.value} experiment', '',
             f'- Mode: {"published error table" if record.fixture else "live training"}',
             f'- Seed: {record.seed}',
             f'- Hyperparameters: {record.provenance}']
    for model in sorted(record.hyperparameters):
        lines.append(f'  - {model}: {format_hyperparameters(record.hyperparameters[model])}')
    if 'published_score_deviation' in record.extras:
        lines.append(f'- Largest deviation from the published scores: '
                     f'{format_number(record.extras["published_score_deviation"], score_decimals)}')
    best = best_models(table)
    lines += ['', f'## Errors ({table.metric.upper()}, * marks the lowest of each column)', '']
    rows = [[model] + [format_number(table.error(model, sub), decimals) + ('*' if best[sub] == model else '')
                       for sub in table.sub_experiments]
            for model in table.models]
    lines += markdown_table(['Model'] + table.sub_experiments, rows)
    if record.score_report is not None:
        lines += ['', '## Weighted score rates (%)', '']
        rows = [[model, format_number(row['score_bs'], score_decimals), format_number(row['score_ml'],
                                                                                       score_decimals)]
                for model, row in record.score_report.scores.iterrows()]
        lines += markdown_table(['Model', 'Against BS', 'Against worst learned model'], rows)
    if is_window_table(table):
        buckets, preferences = preferred_arms(table)
        lines += ['', '## Preferred window arm', '']
        lines += markdown_table(['Model'] + buckets, [[model] + [preferences[model][bucket] for bucket in buckets]
                                                      for model in table.models])
    if 'increase_pct' in record.extras:
        lines += ['', '## Denoised error increase (%)', '']
        lines += markdown_table(['Model', 'Increase'], [[model, format_number(increase, score_decimals)]
                                                        for model, increase in record.extras['increase_pct'].items()])
    if record.diagnostics:
        lines += ['', '## Diagnostics', '']
        lines += [f'- {message}' for message in record.diagnostics]
    return '\n'.join(lines) + '\n'


def csv_report(record):
    table = record.error_table
    decimals = error_decimals(table)
    rows = [['error', model, sub, format_number(table.error(model, sub), decimals)]
            for model in table.models for sub in table.sub_experiments]
    for model in sorted(record.hyperparameters):
        rows += [['hyperparameter', model, key, str(record.hyperparameters[model][key])]
                 for key in sorted(record.hyperparameters[model])]
    if record.score_report is not None:
        for model, row in record.score_report.scores.iterrows():
            rows.append(['score', model, 'score_bs', format_number(row['score_bs'], score_decimals)])
            rows.append(['score', model, 'score_ml', format_number(row['score_ml'], score_decimals)])
    if is_window_table(table):
        buckets, preferences = preferred_arms(table)
        rows += [['preferred_arm', model, bucket, preferences[model][bucket]]
                 for model in table.models for bucket in buckets]
    for model, increase in record.extras.get('increase_pct', {}).items():
        rows.append(['increase_pct', model, 'Denoised', format_number(increase, score_decimals)])
    buffer = io.StringIO()
    buffer.write(f'# {record.plan.name.value} experiment, '
                 f'{"published error table" if record.fixture else "live training"}, seed {record.seed}, '
                 f'hyperparameters {record.provenance}\n')
    pd.DataFrame(rows, columns=['section', 'model', 'column', 'value']).to_csv(buffer, index=False,
                                                                               lineterminator='\n')
    return buffer.getvalue()


def emit_report(record, format_='markdown'):
    """
    Renders a run record as a document. The output depends only on the record (the wall clock is left out).

    :param record: The run record.
    :type record: experiment.RunRecord
    :param format_: `markdown` (or `md`) or `csv`.
    :type format_: str
    :rtype: str
    """
    if format_ not in report_formats:
        raise ConfigError(f'{format_} is not a report format (markdown, md or csv).')
    if report_formats[format_] == 'markdown':
        return markdown_report(record)
    return csv_report(record)
