import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sidechannel.errors import BadParameter, EmptyDataset
from sidechannel.evaluation import (
    TrainerSpec,
    cross_validate,
    format_learning_curve,
    kappa_from_confusion,
    learning_curve,
    summarize,
)
from sidechannel.sampling import stratified_folds, stratified_sample

from conftest import make_dataset, noisy_dataset


def labels(*counts):
    return np.concatenate([np.full(c, i) for i, c in enumerate(counts)])


class TestFolds:
    def test_divisible(self):
        y = labels(60, 40)
        for f in stratified_folds(y, 10, seed=3):
            assert np.bincount(y[f], minlength=2).tolist() == [6, 4]

    def test_remainders(self):
        y = labels(45, 68)
        for f in stratified_folds(y, 10, seed=1):
            a, b = np.bincount(y[f], minlength=2)
            assert a in (4, 5) and b in (6, 7)

    def test_leave_one_out(self):
        y = labels(3, 4)
        folds = stratified_folds(y, 7, seed=0)
        assert all(f.size == 1 for f in folds)
        assert sorted(np.concatenate(folds).tolist()) == list(range(7))

    def test_range(self):
        with pytest.raises(BadParameter):
            stratified_folds(labels(2, 2), 5)
        with pytest.raises(BadParameter):
            stratified_folds(labels(2, 2), 1)

    @given(st.lists(st.integers(0, 2), min_size=10, max_size=80), st.integers(2, 10), st.integers(0, 99), st.integers(0, 99))
    def test_partition_and_sizes_seed_free(self, ys, k, s1, s2):
        y = np.array(ys)
        a, b = stratified_folds(y, k, s1, 3), stratified_folds(y, k, s2, 3)
        assert sorted(np.concatenate(a).tolist()) == list(range(y.size))
        assert [f.size for f in a] == [f.size for f in b]
        for c in range(3):
            per = [int(np.sum(y[f] == c)) for f in a]
            assert max(per) - min(per) <= 1

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=60), st.data())
    def test_sample_proportional(self, ys, data):
        y = np.array(ys)
        size = data.draw(st.integers(1, y.size))
        idx = stratified_sample(y, size, seed=4, n_classes=2)
        assert idx.size == size == np.unique(idx).size
        for c in range(2):
            want = size * np.sum(y == c) / y.size
            assert abs(np.sum(y[idx] == c) - want) <= 1


class TestMetrics:
    def test_kappa_constant_predictor(self):
        assert kappa_from_confusion(np.array([[0, 40], [0, 60]]))[0] == 0.0

    def test_kappa_single_class_flag(self):
        assert kappa_from_confusion(np.array([[0, 0], [0, 10]])) == (0.0, True)

    def test_perfect(self):
        ds = make_dataset(np.r_[np.arange(20.0), np.arange(100.0, 120.0)], labels(20, 20))
        rep = cross_validate(TrainerSpec("j48"), ds, k=10, seed=1)
        assert rep.accuracy == 100 and rep.kappa == 1.0 and rep.mae == 0.0

    def test_majority_baseline(self):
        ds = noisy_dataset(0)
        rep = cross_validate(TrainerSpec("majority"), ds, k=10, seed=1)
        assert rep.kappa == 0.0
        assert rep.rae == pytest.approx(100.0) and rep.rrse == pytest.approx(100.0)

    def test_summary_closed_form(self):
        proba = np.array([[0.8, 0.2], [0.4, 0.6], [0.3, 0.7]])
        priors = np.full((3, 2), 0.5)
        rep = summarize([0, 0, 1], [0, 1, 1], proba, priors, ("A", "B"))
        err = np.array([[0.2, 0.2], [0.6, 0.6], [0.3, 0.3]])
        assert rep.mae == pytest.approx(err.mean())
        assert rep.rmse == pytest.approx(np.sqrt((err**2).mean()))
        assert rep.rae == pytest.approx(100 * err.sum() / 3.0)
        assert rep.confusion.tolist() == [[1, 1], [0, 1]]

    def test_format(self):
        rep = cross_validate(TrainerSpec("stump"), noisy_dataset(1), k=5, seed=2)
        text = rep.format()
        assert "Correctly Classified Instances" in text and "<-- classified as" in text
        assert "|    a = A" in text
        assert len(rep.tsv_row().split("\t")) == len(rep.TSV_HEADER.split("\t"))

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            cross_validate(TrainerSpec("j48"), make_dataset(np.zeros((0, 1)), []))


class TestDeterminism:
    @pytest.mark.parametrize("algo", ["stump", "j48", "logitboost", "forest", "svm"])
    def test_same_seed_same_report(self, algo, monkeypatch):
        ds = noisy_dataset(2, n=120)
        a = cross_validate(TrainerSpec(algo), ds, k=5, seed=9).format()
        monkeypatch.setenv("SIDECHANNEL_THREADS", "4")
        b = cross_validate(TrainerSpec(algo), ds, k=5, seed=9).format()
        assert a == b

    def test_cfs_wrapper(self):
        rep = cross_validate(TrainerSpec("j48", select="cfs"), noisy_dataset(3), k=5, seed=1)
        assert rep.total == 200


class TestLearningCurve:
    def test_full_size_equals_cv(self):
        ds = noisy_dataset(4, n=100)
        spec = TrainerSpec("j48")
        pts = learning_curve(spec, ds, [50, 100], k=10, seed=2)
        assert pts[-1].accuracy == cross_validate(spec, ds, 10, 2).accuracy
        assert pts[-1].nodes == cross_validate(spec, ds, 10, 2).extras["nodes"]

    def test_errors(self):
        ds = noisy_dataset(4, n=100)
        with pytest.raises(BadParameter):
            learning_curve(TrainerSpec("j48"), ds, [200])
        with pytest.raises(BadParameter):
            learning_curve(TrainerSpec("j48"), ds, [80, 40])

    def test_format(self):
        pts = learning_curve(TrainerSpec("majority"), noisy_dataset(4, n=100), [40, 100], k=5)
        assert format_learning_curve(pts).splitlines()[0] == "Images\tNodes\tAccuracy"
        assert format_learning_curve(pts).splitlines()[1].startswith("40\t-\t")
