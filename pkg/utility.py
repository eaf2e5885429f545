"""
Utility code to be used in miscellaneous cases.
"""
import os
import random

import numpy as np
from tensorboardX import SummaryWriter as SummaryWriter_


class BenchmarkError(Exception):
    """Base class for the errors the command line maps to exit codes."""
    exit_code = 1


class ConfigError(BenchmarkError, ValueError):
    """A setting, grid, plan or weight vector is invalid."""
    exit_code = 2


class DataError(BenchmarkError, ValueError):
    """Input data violates the option record schema or a function's domain."""
    exit_code = 3


class NumericalError(BenchmarkError, ArithmeticError):
    """A computation has no finite answer (e.g. a zero reference error)."""
    exit_code = 4


class SummaryWriter(SummaryWriter_):
    """A custom version of the Tensorboard summary writer class."""
    def __init__(self, log_dir=None, comment='', **kwargs):
        super().__init__(log_dir=log_dir, comment=comment, **kwargs)
        self.step = 0

    def add_scalar(self, tag, scalar_value, global_step=None, **kwargs):
        """Add a scalar to the Tensorboard summary."""
        if global_step is None:
            global_step = self.step
        super().add_scalar(tag, scalar_value, global_step, **kwargs)

    def add_text(self, tag, text_string, global_step=None, **kwargs):
        """Add a text entry to the Tensorboard summary."""
        if global_step is None:
            global_step = self.step
        super().add_text(tag, text_string, global_step, **kwargs)


def seed_all(seed=None):
    """Seed every type of random used by the benchmark."""
    random.seed(seed)
    np.random.seed(seed)


def make_directory_name_unique(trial_directory):
    """If the desired directory name already exists, make a new directory name based of the desired name."""
    if os.path.exists(trial_directory):
        run_number = 1
        while os.path.exists(trial_directory + ' r{}'.format(run_number)):
            run_number += 1
        trial_directory += ' r{}'.format(run_number)
    return trial_directory


def check_finite(name, value):
    """Raises a `DataError` if a scalar is NaN or infinite."""
    if not np.isfinite(value):
        raise DataError(f'`{name}` must be finite, got {value}.')
    return value
