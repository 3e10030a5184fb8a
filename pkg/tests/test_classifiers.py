import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sidechannel.classifiers import (
    dumps_model,
    loads_model,
    predict,
    train,
    train_c45,
    train_linear_svm,
    train_logitboost,
    train_majority,
    train_random_forest,
    train_stump,
    train_unpruned_tree,
)
from sidechannel.classifiers.forest import default_k
from sidechannel.classifiers.logitboost import negative_log_likelihood
from sidechannel.classifiers.tree import added_errors
from sidechannel.errors import BadParameter, EmptyDataset, NotBinary, ShapeError

import oracles
from conftest import make_dataset, noisy_dataset


def random_small(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 21))
    m = int(rng.integers(1, 4))
    X = rng.integers(0, 6, size=(n, m)).astype(float)
    y = rng.integers(0, 2, size=n)
    return make_dataset(X, y)


def separable(seed, n=50, m=3, gap=0.2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(n, m))
    y = (X[:, 0] > 0.5).astype(int)
    X[:, 0] = np.where(y == 1, X[:, 0] + gap, X[:, 0] - gap)
    X[0, 0], X[1, 0] = -gap, 1 + gap  # make sure both classes appear
    y[0], y[1] = 0, 1
    return make_dataset(X, y)


class TestMajority:
    def test_humanauth_split(self):
        ds = make_dataset(np.zeros((113, 1)), [0] * 45 + [1] * 68, classes=("nature", "nonnature"))
        m = train_majority(ds)
        assert m.predict(ds.X).tolist() == [1] * 113
        assert np.mean(m.predict(ds.X) == ds.y) == pytest.approx(68 / 113)

    def test_tie_goes_low(self):
        m = train_majority(make_dataset(np.zeros((4, 1)), [1, 0, 1, 0]))
        assert m.label == 0

    def test_single_class(self):
        ds = make_dataset(np.zeros((3, 1)), [1, 1, 1])
        assert train_majority(ds).predict(ds.X).tolist() == [1, 1, 1]

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            train_majority(make_dataset(np.zeros((0, 1)), []))


class TestStump:
    def test_separable_midpoint(self):
        ds = make_dataset([1, 2, 10, 11], [0, 0, 1, 1])
        m = train_stump(ds)
        assert m.root.threshold == 6.0
        assert predict(m, [2]) == 0 and predict(m, [7]) == 1

    def test_pure_falls_back(self):
        ds = make_dataset([1, 2, 3], [0, 0, 0])
        m = train_stump(ds)
        assert m.root.is_leaf and m.predict(ds.X).tolist() == [0, 0, 0]

    def test_identical_rows_fall_back(self):
        ds = make_dataset([[1, 1]] * 4, [0, 1, 1, 0])
        assert train_stump(ds).root.is_leaf

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_brute_force(self, seed):
        ds = random_small(seed)
        gains = list(oracles.all_midpoint_gains(ds.X.tolist(), ds.y.tolist()))
        best = max((g for *_, g in gains), default=0.0)
        root = train_stump(ds).root
        if best <= 1e-12:
            assert root.is_leaf
        else:
            got = oracles.split_gain(ds.X[:, root.attribute].tolist(), ds.y.tolist(), root.threshold)
            assert got == pytest.approx(best, abs=1e-12)

    def test_label_permutation_keeps_split(self):
        ds = noisy_dataset(3, n=60)
        flipped = make_dataset(ds.X, 1 - ds.y, classes=("B", "A"))
        a, b = train_stump(ds).root, train_stump(flipped).root
        assert (a.attribute, a.threshold) == (b.attribute, b.threshold)


class TestC45:
    def test_separable_depth_one(self):
        ds = make_dataset([1, 2, 3, 10, 11, 12], [0, 0, 0, 1, 1, 1])
        tree, stump = train_c45(ds).root, train_stump(ds).root
        assert tree.depth() == 1
        assert (tree.attribute, tree.threshold) == (stump.attribute, stump.threshold)

    def test_pure_single_leaf(self):
        ds = make_dataset(np.arange(10.0), [1] * 10)
        m = train_c45(ds)
        assert m.leaves() == 1 and m.size() == 1

    @pytest.mark.parametrize("seed", range(20))
    def test_counts_match_traversal(self, seed):
        ds = noisy_dataset(seed, n=150, noise=1.0)
        for prune in (True, False):
            m = train_c45(ds, prune_tree=prune)
            d = m.root.to_dict()
            assert oracles.count_tree(d) == (m.extras()["leaves"], m.extras()["nodes"])
            for node, counts in oracles.route_counts(d, ds.X.tolist(), ds.y.tolist(), 2).values():
                assert node["distribution"] == counts

    def test_pruning_shrinks(self):
        ds = noisy_dataset(1, n=300, noise=2.0)
        assert train_c45(ds).size() < train_c45(ds, prune_tree=False).size()

    def test_added_errors_known_values(self):
        # reference values of the upper confidence bound at CF=0.25
        assert added_errors(6, 0, 0.25) == pytest.approx(6 * (1 - 0.25 ** (1 / 6)))
        assert added_errors(100, 100, 0.25) == 0.0
        assert added_errors(16, 1, 0.25) > 0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 1000), st.floats(-100, 100))
    def test_monotone_rescaling_invariant(self, seed, scale, shift):
        ds = noisy_dataset(seed, n=60, noise=1.0)
        moved = make_dataset(ds.X * scale + shift, ds.y)
        a, b = train_c45(ds), train_c45(moved)
        assert a.size() == b.size()
        assert np.array_equal(a.predict(ds.X), b.predict(moved.X))

    def test_report_layout(self):
        ds = make_dataset([1, 2, 3, 10, 11, 12], [0, 0, 0, 1, 1, 1], names=("size",), classes=("Cat", "Dog"))
        text = train_c45(ds).report()
        assert "size <= 6.5: Cat (3.0)" in text and "size > 6.5: Dog (3.0)" in text
        assert "Number of Leaves  : \t2" in text and "Size of the tree : \t3" in text


class TestLogitBoost:
    def test_initial_half(self):
        ds = noisy_dataset(0)
        m = train_logitboost(ds, iterations=0)
        assert np.all(m.predict_proba(ds.X) == 0.5)

    def test_separable(self):
        ds = make_dataset(np.arange(20.0), [0] * 10 + [1] * 10)
        m = train_logitboost(ds)
        assert np.all(m.predict(ds.X) == ds.y)

    @pytest.mark.parametrize("seed", range(20))
    def test_nll_non_increasing(self, seed):
        ds = noisy_dataset(seed, n=120, noise=1.5)
        m = train_logitboost(ds, iterations=10)
        trace = m.nll_trace
        assert len(trace) == 11
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] == pytest.approx(negative_log_likelihood(m.decision(ds.X), ds.y))

    def test_not_binary(self):
        with pytest.raises(NotBinary):
            train_logitboost(make_dataset([1, 2, 3], [0, 1, 2], classes=("a", "b", "c")))


class TestForest:
    def test_default_k(self):
        assert default_k(8) == 4 and default_k(5) == 3 and default_k(1) == 1

    def test_bad_trees(self):
        with pytest.raises(BadParameter):
            train_random_forest(noisy_dataset(0), trees=0)

    def test_single_full_tree_equals_unpruned(self):
        ds = noisy_dataset(4, n=80, noise=1.0)
        f = train_random_forest(ds, trees=1, k_features=ds.n_attributes, bootstrap=False)
        assert f.trees[0].to_dict() == train_unpruned_tree(ds).root.to_dict()

    @pytest.mark.parametrize("seed", range(20))
    def test_perfect_attribute(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(100, 8))
        y = (X[:, 5] > 0).astype(int)
        X[:, 5] += np.where(y == 1, 1.0, -1.0)  # a margin, so any cut between the classes is exact
        ds = make_dataset(X, y)
        f = train_random_forest(ds, trees=10, seed=seed)
        assert np.all(f.predict(ds.X) == ds.y)

    def test_deterministic_and_thread_independent(self):
        ds = noisy_dataset(2)
        a = train_random_forest(ds, seed=7, workers=1)
        b = train_random_forest(ds, seed=7, workers=4)
        assert dumps_model(a) == dumps_model(b)
        assert 0 <= a.oob_error <= 1

    def test_identical_trees_vote_like_one(self):
        ds = noisy_dataset(5, n=80)
        f = train_random_forest(ds, trees=1, k_features=4, bootstrap=False)
        f.trees = f.trees * 3
        single = train_unpruned_tree(ds)
        assert np.array_equal(f.predict(ds.X), single.predict(ds.X))


class TestSVM:
    def test_two_points(self):
        ds = make_dataset([0.0, 1.0], [0, 1])
        m = train_linear_svm(ds)
        assert m.weights[0] > 0 and m.predict(ds.X).tolist() == [0, 1]

    @pytest.mark.parametrize("seed", range(20))
    def test_kkt(self, seed):
        ds = separable(seed)
        m = train_linear_svm(ds, tolerance=1e-3)
        assert np.all(m.predict(ds.X) == ds.y)
        Xn = m.table.apply(ds.X).tolist()
        ypm = [1.0 if v == 1 else -1.0 for v in ds.y]
        assert oracles.svm_kkt_audit(Xn, ypm, m.alphas.tolist(), m.weights.tolist(), m.bias, m.c, 1e-3) == []

    def test_report(self):
        m = train_linear_svm(separable(0))
        assert "* (normalized) a0" in m.report()


@pytest.mark.parametrize("algo", ["majority", "stump", "j48", "logitboost", "forest", "svm"])
def test_serialization_round_trip(algo):
    ds = noisy_dataset(9)
    m = train(algo, ds, seed=3)
    back = loads_model(dumps_model(m))
    assert dumps_model(back) == dumps_model(m)
    assert np.array_equal(back.predict(ds.X), m.predict(ds.X))
    assert back.report() == m.report()


def test_arity_mismatch():
    m = train("j48", noisy_dataset(0))
    with pytest.raises(ShapeError):
        predict(m, [1.0, 2.0])
    with pytest.raises(ShapeError):
        m.predict(np.zeros((3, 2)))
