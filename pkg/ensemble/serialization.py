"""
A versioned plain text dump of tree ensembles.

Every line after the header is whitespace separated. A tree is listed node by node in index order, each node
either `split <feature> <threshold> <left> <right> <value>` or `leaf <value>`. Floats are written in their shortest
round trip form, so a loaded model predicts bit for bit like the dumped one.
"""
from ensemble.boosting import GradientBoosting
from ensemble.forest import RandomForest
from ensemble.ngboost import NaturalGradientBoosting
from ensemble.tree import RegressionTree
from utility import DataError

dump_header = '# tree-ensemble-dump v1'


def dump_tree(tree):
    lines = [f'tree {tree.node_count}']
    for node in range(tree.node_count):
        if tree.feature[node] < 0:
            lines.append(f'leaf {float(tree.value[node])!r}')
        else:
            lines.append(f'split {tree.feature[node]} {float(tree.threshold[node])!r} {tree.left[node]} '
                         f'{tree.right[node]} {float(tree.value[node])!r}')
    return lines


def dump_model(model):
    """
    Writes a tree, forest, boosted ensemble or natural gradient boosted ensemble as text.

    :rtype: str
    """
    lines = [dump_header]
    if isinstance(model, RegressionTree):
        lines.append('model tree')
        lines.extend(dump_tree(model))
    elif isinstance(model, RandomForest):
        lines.append(f'model forest {len(model.trees)}')
        for tree in model.trees:
            lines.extend(dump_tree(tree))
    elif isinstance(model, GradientBoosting):
        lines.append(f'model boosting {len(model.trees)} {float(model.initial_value)!r} '
                     f'{float(model.learning_rate)!r}')
        for tree in model.trees:
            lines.extend(dump_tree(tree))
    elif isinstance(model, NaturalGradientBoosting):
        mu, log_sigma = model.initial_parameters
        lines.append(f'model ngboost {len(model.stages)} {float(mu)!r} {float(log_sigma)!r} '
                     f'{float(model.learning_rate)!r}')
        for mu_tree, log_sigma_tree, scale in model.stages:
            lines.append(f'stage {float(scale)!r}')
            lines.extend(dump_tree(mu_tree))
            lines.extend(dump_tree(log_sigma_tree))
    else:
        raise TypeError(f'{type(model).__name__} cannot be dumped.')
    return '\n'.join(lines) + '\n'


class DumpReader:
    """Consumes a dump line by line."""
    def __init__(self, text):
        self.lines = [line.split() for line in text.splitlines() if line.strip()]
        self.position = 0

    def next(self, keyword):
        if self.position >= len(self.lines):
            raise DataError(f'Model dump ended early, expected `{keyword}`.')
        tokens = self.lines[self.position]
        if tokens[0] != keyword:
            raise DataError(f'Model dump line {self.position + 1}: expected `{keyword}`, got `{tokens[0]}`.')
        self.position += 1
        return tokens[1:]

    def tree(self):
        node_count = int(self.next('tree')[0])
        feature, threshold, left, right, value = [], [], [], [], []
        for _ in range(node_count):
            tokens = self.lines[self.position] if self.position < len(self.lines) else ['<end>']
            if tokens[0] == 'leaf':
                (leaf_value,) = self.next('leaf')
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(leaf_value))
            else:
                split_feature, split_threshold, split_left, split_right, split_value = self.next('split')
                feature.append(int(split_feature))
                threshold.append(float(split_threshold))
                left.append(int(split_left))
                right.append(int(split_right))
                value.append(float(split_value))
        return RegressionTree(feature, threshold, left, right, value)


def load_model(text):
    """
    Reads a model written by `dump_model`.

    :type text: str
    """
    if not text.startswith(dump_header):
        raise DataError(f'Model dump must start with `{dump_header}`.')
    reader = DumpReader(text)
    reader.position = 1
    tokens = reader.next('model')
    kind, arguments = tokens[0], tokens[1:]
    if kind == 'tree':
        return reader.tree()
    if kind == 'forest':
        return RandomForest([reader.tree() for _ in range(int(arguments[0]))])
    if kind == 'boosting':
        tree_count, initial_value, learning_rate = int(arguments[0]), float(arguments[1]), float(arguments[2])
        return GradientBoosting(initial_value, [reader.tree() for _ in range(tree_count)], learning_rate)
    if kind == 'ngboost':
        stage_count, mu, log_sigma, learning_rate = (int(arguments[0]), float(arguments[1]), float(arguments[2]),
                                                     float(arguments[3]))
        stages = []
        for _ in range(stage_count):
            (scale,) = reader.next('stage')
            stages.append((reader.tree(), reader.tree(), float(scale)))
        return NaturalGradientBoosting((mu, log_sigma), stages, learning_rate)
    raise DataError(f'`{kind}` is not a dumped model kind.')


def save_model(model, path):
    with open(path, 'w') as dump_file:
        dump_file.write(dump_model(model))


def read_model(path):
    with open(path) as dump_file:
        return load_model(dump_file.read())
