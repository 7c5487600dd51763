import csv

import numpy as np
import pytest

from mvlab.cli import write_measure_csv
from mvlab.core import EmpiricalMeasure, Segment
from mvlab.integrator import TrajectoryRecord
from mvlab.meanfield import LawFlow
from mvlab.transport import cost_matrix


def rows_of(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestCsvRoundTrips:
    def test_trajectory_record(self, tmp_path):
        rec = TrajectoryRecord(np.array([0.0, 0.1, 0.2]),
                               np.arange(6.0).reshape(3, 2))
        path = tmp_path / "traj.csv"
        rec.to_csv(path)
        rows = rows_of(path)
        assert rows[0] == ["t", "x_1", "x_2"]
        back = np.array([[float(v) for v in r] for r in rows[1:]])
        np.testing.assert_array_equal(back[:, 0], rec.times)
        np.testing.assert_array_equal(back[:, 1:], rec.states)

    def test_law_flow_atom_per_row(self, tmp_path):
        measures = [EmpiricalMeasure.from_points(np.full((2, 1), float(k)))
                    for k in range(3)]
        flow = LawFlow(np.array([0.0, 0.5, 1.0]), measures)
        path = tmp_path / "law.csv"
        flow.to_csv(path)
        rows = rows_of(path)
        assert rows[0] == ["t", "atom", "x_1"]
        assert len(rows) == 1 + 3 * 2
        assert rows[1][:2] == ["0", "0"]

    def test_segment_measure_header(self, tmp_path):
        segs = [Segment.constant([1.0, 2.0], r0=0.5, dt_grid=0.25)
                for _ in range(2)]
        m = EmpiricalMeasure.from_segments(segs)
        path = tmp_path / "atoms.csv"
        write_measure_csv(path, m)
        rows = rows_of(path)
        assert rows[0][:2] == ["atom", "weight"]
        assert rows[0][2] == "g0_x_1"
        assert len(rows[0]) == 2 + m.n_grid * m.dim
        assert float(rows[1][1]) == pytest.approx(0.5)

    def test_float_precision_survives(self, tmp_path):
        x = np.array([[1.0 / 3.0, np.pi]])
        rec = TrajectoryRecord(np.array([0.123456789012345678]), x)
        rec.to_csv(tmp_path / "p.csv")
        rows = rows_of(tmp_path / "p.csv")
        assert float(rows[1][1]) == x[0, 0]
        assert float(rows[1][2]) == x[0, 1]


class TestTypeContracts:
    def test_cost_matrix_symmetric_on_identical_measures(self):
        m = EmpiricalMeasure.from_points(
            np.random.default_rng(0).normal(size=(6, 2)))
        cm = cost_matrix(m, m, p=2.0)
        assert np.all(np.isfinite(cm.entries))
        np.testing.assert_allclose(cm.entries, cm.entries.T, atol=1e-12)
        assert cm.p == 2.0

    def test_lp_size_guard(self):
        rng = np.random.default_rng(1)
        mu = EmpiricalMeasure(rng.normal(size=(600, 1, 1)),
                              weights=rng.random(600))
        nu = EmpiricalMeasure(rng.normal(size=(600, 1, 1)),
                              weights=rng.random(600))
        from mvlab.transport import wasserstein

        with pytest.raises(ValueError, match="too large"):
            wasserstein(mu, nu, p=1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Segment(np.array([[np.nan]]), 0.0, 1.0)
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.array([[[np.inf]]]))

    def test_gaussian_increment_args(self):
        from mvlab.core import NoiseStream, gaussian_increments

        with pytest.raises(ValueError):
            gaussian_increments(NoiseStream(0), 0, 1)


class TestHittingCensoring:
    def test_censored_paths_counted_and_capped(self):
        # almost no inward drift within the cap: most paths never reach
        # the tiny ball, and each censored path contributes e^(lam t_cap)
        from mvlab.analysis import hitting_moment
        from mvlab.core import EmpiricalMeasure as EM
        from mvlab.integrator import StepScheme
        from mvlab.models import make_ou_perturbation

        model = make_ou_perturbation(2, eps=0.0)
        ref = model.frozen(EM.from_points(np.zeros((1, 2))))
        est, cens = hitting_moment(ref, k_radius=0.01, lambda_exp=0.3,
                                   n_samples=32, t_cap=0.5,
                                   scheme=StepScheme("euler_maruyama", 0.01),
                                   seed=2, starts=[[4.0, 0.0]])
        assert cens > 0.9
        assert est <= np.exp(0.3 * 0.5) + 1e-12
