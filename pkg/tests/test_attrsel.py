import numpy as np
import pytest
from scipy.stats import chi2_contingency

from sidechannel.attrsel import (
    CfsEvaluator,
    best_first,
    cfs_best_first,
    chi_square_merit,
    chi_square_merits,
    contingency_chi_square,
    discretize_mdl,
    mdl_cuts,
    rank_attributes_cv,
    symmetric_uncertainty,
    train_attribute_selected,
)
from sidechannel.errors import BadParameter

import oracles
from conftest import make_dataset


def determined(n=500, seed=0, m=4):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, m))
    X[:, 0] = y * 10 + rng.uniform(0, 1, n)
    return make_dataset(X, y)


def random_cfs_case(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    n = int(rng.integers(30, 120))
    y = rng.integers(0, 2, n)
    X = rng.integers(0, 4, size=(n, m)).astype(float)
    informative = rng.random(m) < 0.4
    X[:, informative] += 3 * y[:, None]
    return make_dataset(X, y)


class TestMdl:
    def test_one_ideal_cut(self):
        x = np.array([1, 2, 3, 4, 6, 7, 8, 9], dtype=float)
        cuts = mdl_cuts(x, np.array([0] * 4 + [1] * 4), 2)
        assert cuts.size == 1 and 4 < cuts[0] < 6

    def test_constant(self):
        assert mdl_cuts(np.full(50, 3.0), np.arange(50) % 2, 2).size == 0

    def test_noise_usually_no_cut(self):
        empty = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            empty += mdl_cuts(rng.normal(size=200), rng.integers(0, 2, 200), 2).size == 0
        assert empty >= 95


class TestChiSquare:
    def test_perfect_two_by_two(self):
        assert contingency_chi_square(np.array([[50, 0], [0, 50]])) == 100.0

    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = rng.integers(1, 30, size=(3, 2))
            ref = chi2_contingency(t, correction=False)[0]
            assert contingency_chi_square(t) == pytest.approx(ref, rel=1e-12)

    def test_merit_perfect_attribute(self):
        ds = make_dataset(np.r_[np.zeros(50), np.ones(50)], [0] * 50 + [1] * 50)
        assert chi_square_merits(ds)[0] == 100.0

    def test_empty_cut_list_zero(self):
        ds = determined()
        assert chi_square_merit(ds, 0, np.array([])) == 0.0

    def test_independent_below_determining(self):
        ds = determined()
        rep = rank_attributes_cv(ds, folds=10, seed=1)
        assert rep.entries[0].name == "a0"
        assert rep.entries[0].rank_mean == 1.0 and rep.entries[0].rank_std == 0.0


class TestRanking:
    def test_constant_attribute_zero(self):
        ds = determined()
        X = ds.X.copy()
        X[:, 3] = 7.0
        rep = rank_attributes_cv(make_dataset(X, ds.y), folds=10, seed=1)
        const = next(e for e in rep.entries if e.name == "a3")
        assert const.merit_mean == 0.0 and const.merit_std == 0.0

    def test_zero_merit_ties_shuffle_per_fold(self):
        ds = determined()
        X = ds.X.copy()
        X[:, 2] = X[:, 3] = 7.0
        rep = rank_attributes_cv(make_dataset(X, ds.y), folds=10, seed=1)
        tied = [e for e in rep.entries if e.merit_mean == 0.0]
        assert len(tied) == 3  # a1 is noise and never gets a cut either
        assert any(e.rank_std > 0 for e in tied)
        assert sum(e.rank_mean for e in tied) == pytest.approx(9.0)

    def test_noise_unstable(self):
        pinned = 0
        for seed in range(5):
            rng = np.random.default_rng(seed)
            ds = make_dataset(rng.normal(size=(300, 4)), rng.integers(0, 2, 300))
            rep = rank_attributes_cv(ds, folds=10, seed=seed)
            pinned += any(e.rank_mean == 1.0 and e.rank_std == 0.0 for e in rep.entries)
        assert pinned < 5

    def test_layout(self):
        text = rank_attributes_cv(determined(), folds=10, seed=1).format()
        assert text.splitlines()[2] == "average merit      average rank  attribute"
        assert "1 +- 0" in text

    def test_too_many_folds(self):
        with pytest.raises(BadParameter):
            rank_attributes_cv(make_dataset([1, 2, 3], [0, 1, 0]), folds=4)


class TestCfs:
    def test_su_bounds(self):
        a = np.array([0, 0, 1, 1])
        assert symmetric_uncertainty(a, a) == 1.0
        assert symmetric_uncertainty(a, np.array([0, 1, 0, 1])) == 0.0
        assert symmetric_uncertainty(np.zeros(4), np.zeros(4)) == 0.0

    def test_su_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = rng.integers(0, 3, 40), rng.integers(0, 4, 40)
            assert symmetric_uncertainty(a, b) == pytest.approx(oracles.su(a.tolist(), b.tolist()), abs=1e-12)

    def test_perfect_predictor(self):
        ds = determined()
        res = cfs_best_first(ds)
        assert res.subset == (0,) and res.merit == pytest.approx(1.0, abs=1e-12)

    def test_all_noise(self):
        rng = np.random.default_rng(1)
        ds = make_dataset(rng.normal(size=(300, 5)), rng.integers(0, 2, 300))
        res = cfs_best_first(ds)
        assert res.merit < 0.05 and len(res.subset) <= 2

    @pytest.mark.parametrize("seed", range(50))
    def test_best_first_equals_exhaustive(self, seed):
        ds = random_cfs_case(seed)
        bins = discretize_mdl(ds).bins(ds.X).tolist()
        best = oracles.exhaustive_cfs(bins, ds.y.tolist(), ds.n_attributes)
        ev = CfsEvaluator.fit(ds)
        res = best_first(ev, ds.n_attributes, stale_limit=None)
        assert res.merit == pytest.approx(best, abs=1e-12)
        assert res.evaluated == 2 ** ds.n_attributes - 1
        assert oracles.cfs_merit(bins, ds.y.tolist(), res.subset) == pytest.approx(res.merit, abs=1e-12)

    def test_report(self):
        text = cfs_best_first(determined()).format()
        assert "Total number of subsets evaluated:" in text
        assert "Merit of best subset found: 1.000" in text
        assert "Selected attributes: 1 : 1" in text

    def test_selected_model(self):
        ds = determined()
        m = train_attribute_selected(ds, "j48")
        assert m.columns == (0,)
        assert np.all(m.predict(ds.X) == ds.y)
