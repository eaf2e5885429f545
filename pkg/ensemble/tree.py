"""
Regression trees grown on gradient statistics, with exact or histogram split search.
"""
from enum import Enum

import numpy as np
from recordclass import RecordClass

from utility import ConfigError, DataError


class SplitMode(Enum):
    """An enum to select how split candidates are enumerated."""
    exact = 'exact'
    histogram = 'histogram'


class TreeParams(RecordClass):
    """The shape constraints of a single tree."""
    max_depth: int = 3
    min_samples_leaf: int = 1
    split_mode: SplitMode = SplitMode.exact
    n_bins: int = 32

    def validate(self):
        """Raises a `ConfigError` for unusable constraints."""
        if self.max_depth < 1:
            raise ConfigError(f'Tree max depth must be at least 1, got {self.max_depth}.')
        if self.min_samples_leaf < 1:
            raise ConfigError(f'Tree min samples per leaf must be at least 1, got {self.min_samples_leaf}.')
        if not isinstance(self.split_mode, SplitMode):
            raise ConfigError(f'{self.split_mode} is not a split mode.')
        if self.n_bins < 2:
            raise ConfigError(f'Histogram mode needs at least 2 bins, got {self.n_bins}.')


class RegressionTree:
    """A binary regression tree stored as flat node arrays. Leaves have feature -1."""
    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def node_count(self):
        return self.feature.shape[0]

    @property
    def leaf_count(self):
        return int(np.sum(self.feature < 0))

    @property
    def depth(self):
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):  # Children always follow their parent.
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X):
        """The leaf index each row of `X` lands in. Rows with x <= threshold go left."""
        X = np.asarray(X, dtype=np.float64)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[nodes] >= 0)
        while active.size > 0:
            active_nodes = nodes[active]
            goes_left = X[active, self.feature[active_nodes]] <= self.threshold[active_nodes]
            nodes[active] = np.where(goes_left, self.left[active_nodes], self.right[active_nodes])
            active = active[self.feature[nodes[active]] >= 0]
        return nodes

    def predict(self, X):
        """The leaf values of the rows of `X`."""
        return self.value[self.apply(X)]

    def leaf_values(self):
        return self.value[self.feature < 0]


def bin_codes(X, n_bins):
    """
    Equal frequency bin codes per feature, monotone in the feature value. A feature with at most `n_bins`
    distinct values is coded by the rank of its value, which keeps every exact split available.
    """
    X = np.asarray(X, dtype=np.float64)
    codes = np.empty(X.shape, dtype=np.float64)
    for column in range(X.shape[1]):
        values = X[:, column]
        distinct = np.unique(values)
        if distinct.shape[0] <= n_bins:
            codes[:, column] = np.searchsorted(distinct, values)
        else:
            edges = np.unique(np.quantile(values, np.linspace(0, 1, n_bins + 1)[1:-1]))
            codes[:, column] = np.searchsorted(edges, values, side='right')
    return codes


def split_codes(X, params):
    """The values split validity is judged on: the features themselves or their histogram bins."""
    if params.split_mode == SplitMode.histogram:
        return bin_codes(X, params.n_bins)
    return np.asarray(X, dtype=np.float64)


class TreeGrower:
    """
    Grows a tree maximizing the regularized second order gain
    ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ, with leaf values offset − G/(H+λ).
    """
    def __init__(self, params, reg_lambda=0.0, gamma=0.0, feature_subset_size=None, random_generator=None):
        params.validate()
        if reg_lambda < 0 or gamma < 0:
            raise ConfigError(f'Regularization must be nonnegative, got lambda={reg_lambda}, gamma={gamma}.')
        self.params = params
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.feature_subset_size = feature_subset_size
        self.random_generator = random_generator or np.random.default_rng(0)

    def candidate_features(self, feature_count):
        """The features searched at a node, in ascending order."""
        if self.feature_subset_size is None or self.feature_subset_size >= feature_count:
            return np.arange(feature_count)
        chosen = self.random_generator.choice(feature_count, size=self.feature_subset_size, replace=False)
        return np.sort(chosen)

    def leaf_value(self, g, h, offset):
        return offset - g.sum() / (h.sum() + self.reg_lambda)

    def best_split(self, X, codes, g, h):
        """
        The best split of a node as (gain, feature, threshold), or None when no valid split has positive gain.
        Ties go to the lowest feature, then the smallest left child.
        """
        row_count = X.shape[0]
        features = self.candidate_features(X.shape[1])
        order = np.argsort(X[:, features], axis=0, kind='mergesort')
        g_sorted, h_sorted = g[order], h[order]
        g_left = np.cumsum(g_sorted, axis=0)[:-1]
        h_left = np.cumsum(h_sorted, axis=0)[:-1]
        g_total, h_total = g.sum(), h.sum()
        g_right, h_right = g_total - g_left, h_total - h_left
        with np.errstate(divide='ignore', invalid='ignore'):
            gains = 0.5 * (g_left ** 2 / (h_left + self.reg_lambda) + g_right ** 2 / (h_right + self.reg_lambda) -
                           g_total ** 2 / (h_total + self.reg_lambda)) - self.gamma
        codes_sorted = np.take_along_axis(codes[:, features], order, axis=0)
        left_counts = np.arange(1, row_count)[:, None]
        valid = ((codes_sorted[:-1] != codes_sorted[1:]) & (left_counts >= self.params.min_samples_leaf) &
                 (row_count - left_counts >= self.params.min_samples_leaf) & np.isfinite(gains))
        gains = np.where(valid, gains, -np.inf)
        best = int(np.argmax(gains.T))  # Feature major.
        best_feature_position, best_position = divmod(best, row_count - 1)
        best_gain = gains[best_position, best_feature_position]
        if not best_gain > 0:
            return None
        x_sorted = X[order[:, best_feature_position], features[best_feature_position]]
        threshold = (x_sorted[best_position] + x_sorted[best_position + 1]) / 2
        return best_gain, int(features[best_feature_position]), threshold

    def grow(self, X, codes, g, h, offset=0.0):
        """
        Grows a tree depth first on the gradient statistics of the rows.

        :param X: The features.
        :type X: np.ndarray
        :param codes: The split validity codes from `split_codes`.
        :type codes: np.ndarray
        :param g: The first order gradients.
        :type g: np.ndarray
        :param h: The positive second order gradients.
        :type h: np.ndarray
        :param offset: Added to every leaf value.
        :type offset: float
        :rtype: RegressionTree
        """
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise DataError('Cannot grow a tree on zero rows.')
        feature, threshold, left, right, value = [], [], [], [], []
        stack = [(np.arange(X.shape[0]), 0, None, None)]
        while stack:
            rows, depth, parent, is_left = stack.pop()
            node = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(self.leaf_value(g[rows], h[rows], offset))
            if parent is not None:
                if is_left:
                    left[parent] = node
                else:
                    right[parent] = node
            if depth >= self.params.max_depth or rows.shape[0] < 2 * self.params.min_samples_leaf:
                continue
            node_g, node_h = g[rows], h[rows]
            ratios = node_g[node_h > 0] / node_h[node_h > 0]
            if ratios.size == 0 or np.ptp(ratios) == 0:  # Every split has zero gain.
                continue
            split = self.best_split(X[rows], codes[rows], node_g, node_h)
            if split is None:
                continue
            _, split_feature, split_threshold = split
            feature[node] = split_feature
            threshold[node] = split_threshold
            goes_left = X[rows, split_feature] <= split_threshold
            stack.append((rows[~goes_left], depth + 1, node, False))
            stack.append((rows[goes_left], depth + 1, node, True))
        return RegressionTree(feature, threshold, left, right, value)


def fit_tree(X, y, params, sample_weights=None, feature_subset_size=None, seed=None, codes=None):
    """
    Fits a CART regression tree by greedy weighted variance reduction. Leaves predict the weighted mean of their
    targets and a node is split only when the split strictly reduces the squared error.

    :param X: The features.
    :type X: np.ndarray
    :param y: The targets.
    :type y: np.ndarray
    :param params: The tree constraints.
    :type params: TreeParams
    :param sample_weights: Nonnegative row weights (all ones by default).
    :type sample_weights: np.ndarray or None
    :param feature_subset_size: The number of features searched per node (all by default).
    :type feature_subset_size: int or None
    :param seed: The seed of the feature subsampling.
    :type seed: int or None
    :param codes: Precomputed split codes (computed from `X` by default).
    :type codes: np.ndarray or None
    :rtype: RegressionTree
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f'Features of shape {X.shape} do not match {y.shape[0]} targets.')
    weights = np.ones_like(y) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    if weights.shape != y.shape or np.any(weights < 0) or not weights.sum() > 0:
        raise DataError('Sample weights must be nonnegative, match the targets and not all be zero.')
    if codes is None:
        params.validate()
        codes = split_codes(X, params)
    grower = TreeGrower(params, feature_subset_size=feature_subset_size,
                        random_generator=np.random.default_rng(seed))
    mean = np.average(y, weights=weights)
    return grower.grow(X, codes, -weights * (y - mean), weights, offset=mean)
