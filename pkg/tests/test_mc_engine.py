import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from condclt import limit_theory as lt
from condclt import mc_engine as mc
from condclt import monotone
from condclt.errors import (
    DegenerateVariance,
    DimensionMismatch,
    InsufficientReplicates,
)


class TestStandardize:
    def test_alloc_example(self):
        # n=100, m=100: the empty-box count 40 standardizes to
        # (40 - 100/e)/10.
        spec = mc.standardization_for("alloc", {"n": 100, "m": 100, "max_k": 0})
        out = mc.standardize([40.0], spec)
        assert out[0] == pytest.approx((40 - 100 * math.exp(-1)) / 10, abs=1e-12)
        assert out[0] == pytest.approx(0.3212056, abs=1e-6)

    def test_spacings_centering(self):
        spec = mc.standardization_for("spacings", {"n": 10_000, "a": 1.0})
        assert spec.b_n[0] == pytest.approx(10_000 * math.exp(-1), abs=1e-9)
        assert spec.a_n == 100.0

    def test_gnp_centering_uses_np(self):
        spec = mc.standardization_for("gnp", {"n": 1000, "p": 0.002, "max_k": 3})
        expect = 1000 * np.array([lt.poisson_pmf(2.0, k) for k in range(4)])
        assert spec.b_n == pytest.approx(expect, abs=1e-9)

    def test_gnm_centering_uses_2m_over_n(self):
        spec = mc.standardization_for("gnm", {"n": 1000, "m": 1500, "max_k": 2})
        expect = 1000 * np.array([lt.poisson_pmf(3.0, k) for k in range(3)])
        assert spec.b_n == pytest.approx(expect, abs=1e-9)

    def test_shape_mismatch(self):
        spec = mc.standardization_for("alloc", {"n": 100, "m": 100, "max_k": 2})
        with pytest.raises(DimensionMismatch):
            mc.standardize([1.0], spec)


class TestMomentAccumulator:
    def _fill(self, data):
        acc = mc.MomentAccumulator(data.shape[1])
        for row in data:
            acc.update(row)
        return acc

    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((500, 3)) * [1.0, 2.0, 0.5] + [0.0, 1.0, -3.0]
        acc = self._fill(data)
        assert acc.mean == pytest.approx(data.mean(axis=0), abs=1e-12)
        assert acc.covariance() == pytest.approx(np.cov(data.T), abs=1e-10)
        dev = data - data.mean(axis=0)
        assert acc.third_diag == pytest.approx((dev**3).sum(axis=0), abs=1e-8)
        assert acc.fourth_diag == pytest.approx((dev**4).sum(axis=0), abs=1e-8)

    def test_merge_equals_sequential(self):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((400, 2))
        whole = self._fill(data)
        merged = self._fill(data[:150]).merge(self._fill(data[150:]))
        assert merged.count == whole.count
        assert merged.mean == pytest.approx(whole.mean, abs=1e-12)
        assert merged.comoment == pytest.approx(whole.comoment, abs=1e-9)
        assert merged.fourth_diag == pytest.approx(whole.fourth_diag, abs=1e-7)

    def test_merge_with_empty(self):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((10, 2))
        acc = self._fill(data)
        out = acc.merge(mc.MomentAccumulator(2))
        assert out.count == 10
        assert out.mean == pytest.approx(acc.mean, abs=0)
        out = mc.MomentAccumulator(2).merge(acc)
        assert out.count == 10

    @given(
        hnp.arrays(np.float64, (30, 2), elements=st.floats(-50, 50)),
        st.integers(1, 28),
        st.integers(1, 28),
    )
    @settings(max_examples=50, deadline=None)
    def test_merge_associative(self, data, c1, c2):
        lo, hi = min(c1, c2), max(c1, c2) + 1
        a = self._fill(data[:lo])
        b = self._fill(data[lo:hi])
        c = self._fill(data[hi:])
        left = a.merge(b).merge(c)
        right = a.merge(b.merge(c))
        scale = 1.0 + np.abs(left.comoment).max()
        assert np.abs(left.mean - right.mean).max() < 1e-10 * (1 + np.abs(left.mean).max())
        assert np.abs(left.comoment - right.comoment).max() < 1e-10 * scale

    def test_insufficient_for_covariance(self):
        acc = mc.MomentAccumulator(2)
        acc.update([1.0, 2.0])
        with pytest.raises(InsufficientReplicates):
            acc.covariance()

    def test_wrong_dim_update(self):
        with pytest.raises(DimensionMismatch):
            mc.MomentAccumulator(2).update([1.0])


class TestRunExperiment:
    def test_deterministic_same_seed(self):
        p = {"n": 50, "m": 50, "max_k": 3}
        a = mc.run_experiment("alloc", p, reps=200, seed=7)
        b = mc.run_experiment("alloc", p, reps=200, seed=7)
        assert np.array_equal(a.samples, b.samples)

    def test_seed_changes_output(self):
        p = {"n": 50, "m": 50, "max_k": 3}
        a = mc.run_experiment("alloc", p, reps=100, seed=7)
        b = mc.run_experiment("alloc", p, reps=100, seed=8)
        assert not np.array_equal(a.samples, b.samples)

    def test_worker_count_invariance(self):
        p = {"n": 30, "m": 40, "max_k": 3}
        a = mc.run_experiment("alloc", p, reps=240, seed=3, workers=1)
        b = mc.run_experiment("alloc", p, reps=240, seed=3, workers=2)
        assert a.samples.tobytes() == b.samples.tobytes()
        assert a.acc.mean.tobytes() == b.acc.mean.tobytes()

    def test_too_few_reps(self):
        with pytest.raises(InsufficientReplicates):
            mc.run_experiment("alloc", {"n": 5, "m": 5, "max_k": 1}, reps=1, seed=0)

    def test_dump_reconstructs_counts(self, tmp_path):
        from condclt import simulators

        p = {"n": 20, "m": 25, "max_k": 4}
        path = tmp_path / "counts.bin"
        run = mc.run_experiment("alloc", p, reps=50, seed=5, dump_path=path)
        mat = simulators.load_count_matrix(path, 5)
        spec = mc.standardization_for("alloc", p)
        recon = mc.standardize(mat[0].astype(float), spec)
        assert recon == pytest.approx(run.samples[0], abs=1e-12)
        assert mat.min() >= 0 and mat.sum(axis=1).max() <= 20

    def test_batch_accs_partition(self):
        run = mc.run_experiment("alloc", {"n": 10, "m": 10, "max_k": 2},
                                reps=100, seed=1, n_batches=20)
        assert len(run.batch_accs) == 20
        assert sum(b.count for b in run.batch_accs) == 100
        assert run.acc.count == 100


class TestCompareToTheory:
    def test_desk_scale_pass(self):
        # n=4, m=3 allocation: compare standardized sample moments to the
        # exactly enumerated finite-n moments.
        p = {"n": 4, "m": 3, "max_k": 3}
        run = mc.run_experiment("alloc", p, reps=20_000, seed=11)
        counts = monotone.enumerate_allocation_counts(4, 3)
        mean, cov = monotone.exact_moments(counts)
        spec = mc.standardization_for("alloc", p)
        theory_mean = (mean - spec.b_n) / spec.a_n
        theory_cov = cov / 4.0
        report = mc.compare_to_theory(run, theory_mean, theory_cov)
        assert report.passed, report.max_abs_z()
        assert report.max_abs_z() < 4.0

    def test_corrupted_variance_fails(self):
        p = {"n": 4, "m": 3, "max_k": 3}
        run = mc.run_experiment("alloc", p, reps=20_000, seed=11)
        counts = monotone.enumerate_allocation_counts(4, 3)
        mean, cov = monotone.exact_moments(counts)
        spec = mc.standardization_for("alloc", p)
        theory_mean = (mean - spec.b_n) / spec.a_n
        report = mc.compare_to_theory(run, theory_mean, 2.0 * cov / 4.0)
        assert not report.passed

    def test_requires_100_reps(self):
        run = mc.run_experiment("alloc", {"n": 4, "m": 3, "max_k": 1},
                                reps=50, seed=0)
        with pytest.raises(InsufficientReplicates):
            mc.compare_to_theory(run, np.zeros(2), np.eye(2))

    def test_report_roundtrip(self):
        run = mc.run_experiment("alloc", {"n": 4, "m": 3, "max_k": 1},
                                reps=500, seed=0)
        report = mc.compare_to_theory(run, run.acc.mean, run.acc.covariance())
        back = mc.VerificationReport.from_dict(report.to_dict())
        assert back.experiment == report.experiment
        assert back.passed == report.passed
        assert len(back.entries) == len(report.entries)
        assert back.entries[0].z == report.entries[0].z


class TestNormalityDistance:
    def test_gaussian_sample_close(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal(10_000)
        assert mc.normality_distance(x, 0.0, 1.0) < 0.025

    def test_shifted_scale(self):
        rng = np.random.default_rng(43)
        x = 3.0 + 2.0 * rng.standard_normal(10_000)
        assert mc.normality_distance(x, 3.0, 4.0) < 0.025

    def test_constant_samples_far(self):
        x = np.zeros(2000)
        assert mc.normality_distance(x, 0.0, 1.0) >= 0.5

    def test_degenerate_variance(self):
        with pytest.raises(DegenerateVariance):
            mc.normality_distance(np.zeros(2000), 0.0, 0.0)

    def test_needs_1000(self):
        with pytest.raises(InsufficientReplicates):
            mc.normality_distance(np.zeros(10), 0.0, 1.0)


class TestGateSoundness:
    def test_pass_rate_across_seeds(self):
        # With correct theory the 4-sigma gate should essentially always pass.
        counts = monotone.enumerate_allocation_counts(4, 3)
        mean, cov = monotone.exact_moments(counts)
        p = {"n": 4, "m": 3, "max_k": 3}
        spec = mc.standardization_for("alloc", p)
        theory_mean = (mean - spec.b_n) / spec.a_n
        theory_cov = cov / 4.0
        passes = 0
        for seed in range(10):
            run = mc.run_experiment("alloc", p, reps=4000, seed=seed)
            report = mc.compare_to_theory(run, theory_mean, theory_cov)
            passes += int(report.passed)
        assert passes >= 9

    def test_moment_convergence_check(self):
        p = {"n": 4, "m": 3, "max_k": 3}
        run = mc.run_experiment("alloc", p, reps=8000, seed=2)
        counts = monotone.enumerate_allocation_counts(4, 3)
        mean, cov = monotone.exact_moments(counts)
        spec = mc.standardization_for("alloc", p)
        out = mc.moment_convergence_check(run, (mean - spec.b_n) / spec.a_n, cov / 4.0)
        assert out["passed"]
        kinds = {e.kind for e in out["entries"]}
        assert kinds == {"mean", "cov"}
        assert all(e.i == e.j for e in out["entries"] if e.kind == "cov")
