"""Sweep machinery: aggregation, grid handling, determinism, and workers."""
import numpy as np
import pytest

from georeg import (
    ALL_METRICS,
    ConfigurationError,
    ExperimentConfig,
    ShapeError,
    SweepSpec,
    label_projector,
    metric_frobenius_complements,
    run_sweep,
    summarize,
)


class TestSummarize:
    def test_single_value(self):
        assert summarize([5.0]) == (5.0, 0.0)

    def test_two_values(self):
        mean, se = summarize([1.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1.0)  # sd sqrt(2), / sqrt(2)

    def test_constant_values(self):
        mean, se = summarize([2.5, 2.5, 2.5])
        assert mean == 2.5
        assert se == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            summarize([])


class TestFrobeniusComplements:
    def test_identity_is_zero(self):
        fl, ff = metric_frobenius_complements(np.eye(4), np.eye(6))
        assert fl == 0.0 and ff == 0.0

    def test_zero_matrix_is_sqrt_n(self):
        fl, ff = metric_frobenius_complements(np.zeros((9, 9)), np.zeros((4, 4)))
        assert fl == pytest.approx(3.0)
        assert ff == pytest.approx(2.0)

    def test_rank_one_oracle(self):
        fl, _ = metric_frobenius_complements(np.diag([1.0, 0.0]), np.eye(2))
        assert fl == pytest.approx(1.0)

    def test_accepts_label_projector_object(self):
        lp = label_projector(np.array([[1.0], [1.0]]))
        fl, _ = metric_frobenius_complements(lp, np.eye(2))
        assert fl == pytest.approx(1.0)  # |I - [[.5,.5],[.5,.5]]|_F

    def test_rejects_nonsquare(self):
        with pytest.raises(ShapeError):
            metric_frobenius_complements(np.zeros((2, 3)), np.eye(2))


class TestSweepSpec:
    def _base(self, **kw):
        return ExperimentConfig(m=32, n_f=8, n_p=32, **kw)

    def test_coerces_grids_to_tuples(self):
        spec = SweepSpec(self._base(), np_over_m_grid=[0.5, 1.0], nf_over_m_grid=[0.25])
        assert spec.np_over_m_grid == (0.5, 1.0)
        assert spec.nf_over_m_grid == (0.25,)

    def test_empty_np_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(self._base(), np_over_m_grid=())

    def test_nonpositive_ratio_rejected(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(self._base(), np_over_m_grid=(0.5, -1.0))

    def test_unknown_metric_rejected(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(self._base(), np_over_m_grid=(1.0,), metrics=("typo_error",))

    def test_zero_replicas_rejected(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(self._base(), np_over_m_grid=(1.0,), n_replicas=0)

    def test_grid_points_np_major_with_default_nf(self):
        spec = SweepSpec(
            self._base(), np_over_m_grid=(0.5, 1.0), nf_over_m_grid=(0.25, 0.5)
        )
        pts = spec.grid_points()
        assert [p[0] for p in pts] == [0, 1, 2, 3]
        assert [(p[1], p[2]) for p in pts] == [
            (0.5, 0.25),
            (0.5, 0.5),
            (1.0, 0.25),
            (1.0, 0.5),
        ]
        solo = SweepSpec(self._base(), np_over_m_grid=(2.0,))
        assert solo.grid_points() == [(0, 2.0, 8 / 32)]


@pytest.fixture(scope="module")
def small_result():
    spec = SweepSpec(
        ExperimentConfig(m=32, n_f=8, n_p=32, activation="relu"),
        np_over_m_grid=(0.5, 1.0, 2.0),
        n_replicas=8,
    )
    return spec, run_sweep(spec)


class TestRunSweep:
    def test_row_metadata(self, small_result):
        spec, res = small_result
        assert len(res.rows) == 3
        assert res.point_errors == {}
        row = res.rows[1]
        assert row.np_over_m == 1.0
        assert row.n_p == 32 and row.n_f == 8
        assert row.n_effective == 8 and row.n_dropped == 0
        assert set(row.means) == set(ALL_METRICS)
        assert res.elapsed_seconds > 0.0

    def test_deterministic(self, small_result):
        spec, res = small_result
        again = run_sweep(spec)
        for r1, r2 in zip(res.rows, again.rows):
            assert r1.means == r2.means
            assert r1.standard_errors == r2.standard_errors

    def test_worker_count_invariance(self, small_result):
        spec, res = small_result
        parallel = run_sweep(spec, workers=2)
        for r1, r2 in zip(res.rows, parallel.rows):
            assert r1.means == r2.means

    def test_bias_variance_telescopes_per_row(self, small_result):
        _, res = small_result
        for row in res.rows:
            gap = row.means["bias_sq"] + row.means["variance"] - row.means["geom_error"]
            assert abs(gap) <= 1e-12 * max(1.0, row.means["geom_error"])

    def test_train_error_shrinks_past_interpolation(self, small_result):
        _, res = small_result
        train = {row.np_over_m: row.means["train_error"] for row in res.rows}
        assert train[2.0] < train[0.5]

    def test_normalize_rescales_error_metrics(self, small_result):
        # same single-point grid for both runs so the replica streams match
        spec, _ = small_result
        kw = dict(np_over_m_grid=(1.0,), n_replicas=8)
        raw = run_sweep(SweepSpec(spec.base_config, **kw))
        normed = run_sweep(SweepSpec(spec.base_config, normalize=True, **kw))
        raw_row = raw.rows[0]
        n_row = normed.rows[0]
        s = spec.base_config.sigma_y_sq
        assert n_row.means["test_error"] == pytest.approx(raw_row.means["test_error"] / s)
        assert n_row.means["variance"] == pytest.approx(raw_row.means["variance"] / s)
        # angles are not rescaled
        assert n_row.means["theta_max_deg"] == pytest.approx(raw_row.means["theta_max_deg"])
        assert normed.normalized is True

    def test_metric_subset(self):
        spec = SweepSpec(
            ExperimentConfig(m=16, n_f=4, n_p=16),
            np_over_m_grid=(1.0,),
            n_replicas=3,
            metrics=("train_error", "sigma_Z_min"),
        )
        res = run_sweep(spec)
        assert set(res.rows[0].means) == {"train_error", "sigma_Z_min"}

    def test_infeasible_identity_point_recorded(self):
        spec = SweepSpec(
            ExperimentConfig(m=32, n_f=8, n_p=8, activation="identity", lam=0.0),
            np_over_m_grid=(0.25, 1.0),
            n_replicas=3,
        )
        res = run_sweep(spec)
        assert len(res.rows) == 1
        assert res.rows[0].np_over_m == 0.25
        assert (1.0, 0.25) in res.point_errors
        assert "identity" in res.point_errors[(1.0, 0.25)]

    def test_bad_worker_count(self, small_result):
        spec, _ = small_result
        with pytest.raises(ConfigurationError):
            run_sweep(spec, workers=0)
