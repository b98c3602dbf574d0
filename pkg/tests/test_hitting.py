import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitting_times.hitting import (
    EmpiricalPmf,
    HittingRecord,
    ThresholdSpec,
    Timed,
    default_path_len,
    exceedance_indices,
    hitting_times,
    inter_exceedance_gaps,
    max_survival,
    mc_hits,
    mc_pmf,
    timed_first_hitting,
)
from hitting_times.processes import (
    ARMAX,
    AR1Uniform,
    IidFrechet,
    InterArrivalSpec,
    MovingMax,
    SamplePath,
    simulate,
    simulate_many,
)
from hitting_times.rng import RngStream

values_lists = st.lists(st.floats(0.0, 10.0, allow_nan=False), min_size=1, max_size=60)


class TestRecords:
    def test_example(self):
        rec = hitting_times([0.1, 0.9, 0.3, 0.95], 0.8, k=2)
        assert rec.first == 2 and rec.second == 4 and rec.inter_gaps == [2]

    def test_empty(self):
        rec = hitting_times([0.1, 0.8, 0.3], 0.8, k=3)
        assert rec.first is None and rec.second is None and len(rec) == 0 and rec.inter_gaps == []

    def test_strict_exceedance(self):
        assert hitting_times([1.0, 1.0, 1.5], 1.0).first == 3

    def test_k_validation(self):
        with pytest.raises(ValueError):
            hitting_times([1.0], 0.5, k=0)

    def test_gaps(self):
        x = np.zeros(10)
        x[[2, 4, 8]] = 1.0  # indices 3, 5, 9
        assert list(inter_exceedance_gaps(x, 0.5)) == [2, 4]
        assert inter_exceedance_gaps(np.zeros(5), 0.5).size == 0
        assert inter_exceedance_gaps(np.array([0.0, 1.0]), 0.5).size == 0

    def test_adjacent_exceedances_give_gap_one(self):
        assert list(inter_exceedance_gaps([2.0, 2.0, 0.0, 2.0], 1.0)) == [1, 2]

    @given(values_lists, st.floats(0.0, 10.0), st.integers(0, 20))
    def test_shift_consistency(self, values, u, prefix):
        x = np.array(values)
        shifted = np.concatenate([np.full(prefix, min(u, 0.0)), x])
        np.testing.assert_array_equal(exceedance_indices(shifted, u), exceedance_indices(x, u) + prefix)

    @given(values_lists, st.floats(0.0, 10.0), st.integers(1, 5))
    def test_record_consistency(self, values, u, k):
        rec = hitting_times(values, u, k)
        idx = rec.exceedance_indices
        assert list(idx) == sorted(set(idx)) and all(i >= 1 for i in idx)
        if len(idx) >= 2:
            assert rec.second - rec.first == rec.inter_gaps[0]
        if idx:
            assert values[idx[0] - 1] > u and all(v <= u for v in values[: idx[0] - 1])


class TestTimed:
    def test_first_index_always_in_time(self):
        p = SamplePath([5.0, 0.0, 0.0], interarrivals=[100.0, 100.0])
        assert timed_first_hitting(p, 1.0, 1e-9) == 1

    def test_horizon_boundary(self):
        p = SamplePath([0.0, 0.0, 5.0], interarrivals=[5.0, 5.0])
        assert timed_first_hitting(p, 1.0, 9.0) is None
        assert timed_first_hitting(p, 1.0, 10.0) == 3

    def test_requires_interarrivals(self):
        with pytest.raises(ValueError):
            timed_first_hitting(SamplePath([1.0]), 0.5, 10.0)

    def test_no_hit(self):
        assert timed_first_hitting(SamplePath([0.0, 0.0], interarrivals=[1.0]), 1.0, 10.0) is None

    def test_infinite_horizon_equals_first_hit(self):
        spec, ia = ARMAX(0.5), InterArrivalSpec(0.8)
        u = spec.quantile(0.05)
        for i in range(50):
            p = simulate(spec, 200, RngStream(4, i), interarrivals=ia)
            assert timed_first_hitting(p, u, math.inf) == hitting_times(p, u).first

    def test_kernel_matches_path_level(self):
        spec, ia = IidFrechet(), InterArrivalSpec(1.0)
        u = spec.quantile(0.1)
        from hitting_times.hitting import mc_timed_hits

        got = mc_timed_hits(spec, u, 200, 400, Timed(30.0, ia), master_seed=8)
        for i in range(200):
            p = simulate(spec, 400, RngStream(8, i), interarrivals=ia)
            h = timed_first_hitting(p, u, 30.0)
            assert got[i] == (h or 0)


class TestThreshold:
    def test_quantile_resolution(self):
        assert ThresholdSpec.quantile(0.5).resolve(ARMAX(0.2)) == pytest.approx(1 / math.log(2))
        assert ThresholdSpec.quantile(0.25).resolve(AR1Uniform(2)) == 0.75
        assert ThresholdSpec.absolute(3.0).resolve(ARMAX(0.2)) == 3.0
        assert ThresholdSpec.quantile(0.05).resolve(data=np.arange(1, 101)) == 95

    def test_invalid(self):
        with pytest.raises(ValueError):
            ThresholdSpec.quantile(1.0)
        with pytest.raises(ValueError):
            ThresholdSpec("median", 0.5)
        with pytest.raises(ValueError):
            ThresholdSpec.quantile(0.1).resolve()


class TestEmpiricalPmf:
    def test_probabilities_and_errors(self):
        pmf = EmpiricalPmf(np.array([3, 1, 0]), 1, 5)
        np.testing.assert_allclose(pmf.prob, [0.6, 0.2, 0.0])
        np.testing.assert_allclose(pmf.stderr, np.sqrt(pmf.prob * (1 - pmf.prob) / 5))
        assert pmf.overflow_prob == 0.2 and pmf.overflow_flagged
        assert math.fsum(pmf.prob) + pmf.overflow_prob == pytest.approx(1.0, abs=1e-15)
        assert pmf.pmf(0) == 0.0 and pmf.pmf(99) == 0.0

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            EmpiricalPmf(np.array([1, 1]), 0, 3)

    def test_single_path_is_point_mass(self):
        pmf = mc_pmf(ARMAX(0.5), ThresholdSpec.quantile(0.3), 1, 500, master_seed=3)
        assert pmf.counts.sum() == 1 and np.all(pmf.stderr == 0)
        j = int(np.flatnonzero(pmf.counts)[0]) + 1
        assert pmf.pmf(j) == 1.0
        assert j == hitting_times(simulate(ARMAX(0.5), 500, RngStream(3, 0)), ARMAX(0.5).quantile(0.3)).first

    def test_default_path_len(self):
        assert default_path_len(0.5, 0.001) == 100_000


class TestMonteCarlo:
    def test_chunking_does_not_change_counts(self):
        spec, th = MovingMax((0.5, 0.3, 0.2)), ThresholdSpec.quantile(0.1)
        a = mc_pmf(spec, th, 5000, 400, master_seed=2)
        b = mc_pmf(spec, th, 5000, 400, master_seed=2, chunk=777)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.overflow == b.overflow

    def test_iid_first_hit_geometric(self):
        pmf = mc_pmf(IidFrechet(), ThresholdSpec.quantile(0.2), 200_000, master_seed=1)
        for j in (1, 2, 3):
            expected = 0.2 * 0.8 ** (j - 1)
            assert abs(pmf.pmf(j) - expected) < 3 * pmf.se(j) + 1e-12

    def test_armax_first_is_rho(self):
        pmf = mc_pmf(ARMAX(0.5), ThresholdSpec.quantile(0.5), 1_000_000, master_seed=13)
        assert abs(pmf.pmf(1) - 0.5) < 0.0015

    def test_iid_gaps_geometric(self):
        spec = IidFrechet()
        u = spec.quantile(0.1)
        x = simulate(spec, 1_100_000, RngStream(17)).values
        gaps = inter_exceedance_gaps(x, u)[:100_000]
        assert gaps.size == 100_000
        counts = np.bincount(gaps, minlength=31)
        for m in range(1, 31):
            p = 0.1 * 0.9 ** (m - 1)
            se = math.sqrt(p * (1 - p) / gaps.size)
            assert abs(counts[m] / gaps.size - p) < 3 * se + 1e-12, m

    def test_second_statistic(self):
        pmf = mc_pmf(IidFrechet(), ThresholdSpec.quantile(0.3), 100_000, 300, "second", master_seed=4)
        # negative binomial: P{T** = j} = (j - 1) p^2 q^(j - 2)
        for j in (2, 3, 5):
            expected = (j - 1) * 0.09 * 0.7 ** (j - 2)
            assert abs(pmf.pmf(j) - expected) < 4 * pmf.se(j)
        assert pmf.pmf(1) == 0.0

    def test_joint_statistic(self):
        joint = mc_pmf(IidFrechet(), ThresholdSpec.quantile(0.3), 50_000, 300, "joint_first_gap", master_seed=4)
        hits = mc_hits(IidFrechet(), IidFrechet().quantile(0.3), 50_000, 300, 2, master_seed=4)
        np.testing.assert_array_equal(joint.first, hits[:, 0])
        np.testing.assert_array_equal(joint.gap[joint.observed], (hits[:, 1] - hits[:, 0])[joint.observed])
        mat = joint.matrix(5, 5)
        assert mat[0, 0] == joint.prob(1, 1)
        cells, probs = joint.cells(5, 5)
        assert probs.sum() == pytest.approx(mat.sum())
        # iid: independent geometric(0.3) pair
        assert abs(mat[0, 0] - 0.09) < 4 * math.sqrt(0.09 * 0.91 / 50_000)

    def test_unknown_statistic(self):
        with pytest.raises(ValueError):
            mc_pmf(IidFrechet(), ThresholdSpec.quantile(0.3), 10, 10, "third")


class TestRunningMaxIdentity:
    @pytest.mark.parametrize("spec", [ARMAX(0.7), MovingMax((0.5, 0.3, 0.2)), AR1Uniform(2)])
    def test_survival_differences_equal_first_hit_pmf(self, spec):
        n, paths = 60, 4000
        x = simulate_many(spec, n, paths, master_seed=19)
        u = spec.quantile(0.1)
        surv = max_survival(x, u)
        counts = np.zeros(n + 1, dtype=np.int64)
        for row in x:
            f = hitting_times(row, u).first
            counts[f or 0] += 1
        # exact: both sides are integer counts over the same paths
        surv_counts = np.rint(surv * paths).astype(np.int64)
        np.testing.assert_array_equal(surv_counts[:-1] - surv_counts[1:], counts[1:])

    def test_first_hit_equals_rho_times_gap_tail_iid(self):
        spec = IidFrechet()
        rho = 0.2
        u = spec.quantile(rho)
        pmf = mc_pmf(spec, ThresholdSpec.quantile(rho), 200_000, 200, master_seed=23)
        x = simulate(spec, 1_000_000, RngStream(24)).values
        gaps = inter_exceedance_gaps(x, u)
        for j in range(0, 8):
            tail = (gaps > j).mean()
            rhs = rho * tail
            se = math.sqrt(pmf.pmf(j + 1) * (1 - pmf.pmf(j + 1)) / pmf.paths) + rho * math.sqrt(
                tail * (1 - tail) / gaps.size
            )
            assert abs(pmf.pmf(j + 1) - rhs) < 3 * se
