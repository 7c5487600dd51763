import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from mvlab.analysis import (
    check_degenerate_pair,
    check_dissipativity,
    check_hamiltonian_condition,
    check_pair_contraction,
    check_spectral_summability,
    decay_envelope_inf,
    delay_contraction_rate,
    dv_rate_gaussian_ou,
    fit_contraction_rate,
    hitting_moment,
    model_condition_reports,
    pair_block_weight,
    run_comparison_experiment,
)
from mvlab.core import EmpiricalMeasure
from mvlab.integrator import StepScheme
from mvlab.meanfield import gaussian_init
from mvlab.models import (
    make_degenerate_pair,
    make_hamiltonian,
    make_ou_perturbation,
    make_spectral_delay,
)


def hamiltonian_rhs_grid(a1, a2, a3, n=400_000):
    """Dense log-grid oracle for the kinetic friction condition."""
    s = np.geomspace(1e-7, 1e7, n)
    vals = (2 * a3 * s + a3 / s + 2 * a2
            + np.sqrt(4 * (1 + a1) ** 2 + (2 * a2 + a3 / s) ** 2))
    k = np.argmin(vals)
    return float(vals[k]), float(s[k])


class TestDissipativity:
    def test_strictness(self):
        m = make_ou_perturbation(2, eps=0.0)
        m.params.update(kappa1=1.0, kappa2=0.0)
        assert check_dissipativity(m, n_probes=0).verdict
        m.params.update(kappa1=1.0, kappa2=1.0)
        assert not check_dissipativity(m, n_probes=0).verdict

    def test_ou_constants_certified(self):
        m = make_ou_perturbation(2, eps=0.0)
        rep = check_dissipativity(m, n_probes=3000)
        assert rep.verdict and rep.lhs == 1.0 and rep.rhs == 0.0
        assert rep.details["certification"]["n_violations"] == 0


class TestHamiltonianCondition:
    def test_all_zero_reduces_to_two(self):
        # with a3 = 0 the s-terms vanish and sqrt(4) = 2
        rep = check_hamiltonian_condition(2.0, 0.0, 0.0, 0.0)
        assert rep.rhs == pytest.approx(2.0)
        assert rep.verdict  # 4 * 2 > 2
        assert not check_hamiltonian_condition(0.4, 0.0, 0.0, 0.0).verdict

    def test_a3_zero_closed_form(self):
        rep = check_hamiltonian_condition(2.0, 1.0, 0.5, 0.0)
        assert rep.rhs == pytest.approx(1.0 + np.sqrt(17.0), rel=1e-12)

    @pytest.mark.parametrize("params", [
        (2.0, 1.0, 0.5, 0.2), (1.0, 0.1, 0.1, 0.1), (5.0, 2.0, 1.0, 0.7),
        (0.5, 0.0, 0.3, 0.05),
    ])
    def test_matches_grid_oracle(self, params):
        lam, a1, a2, a3 = params
        rep = check_hamiltonian_condition(lam, a1, a2, a3)
        want, _ = hamiltonian_rhs_grid(a1, a2, a3)
        assert rep.rhs == pytest.approx(want, rel=1e-6)

    def test_derived_constants_consistent(self):
        rep = check_hamiltonian_condition(2.0, 1.0, 0.5, 0.2)
        assert rep.verdict == (rep.details["kappa1"] > rep.details["kappa2"])


class TestDelayRate:
    def test_no_coupling(self):
        assert delay_contraction_rate(1, 0.0, 0.5, 2.0) == (2.0, 2.0)

    def test_no_delay(self):
        assert delay_contraction_rate(2, 0.3, 0.0, 2.0) == (1.7, 2.0)

    def test_boundary_case(self):
        # interior stationary point ln(5) > 1 forces the boundary r = 1
        kappa, theta = delay_contraction_rate(2, 0.2, 0.5, 1.0)
        assert theta == 1.0
        assert kappa == pytest.approx(1.0 - 0.2 * np.e, rel=1e-12)

    @pytest.mark.parametrize("args", [
        (1, 0.1, 0.5, 2.0), (2, 0.2, 0.5, 1.0), (1, 0.05, 2.0, 3.0),
        (3, 0.01, 1.0, 1.5),
    ])
    def test_matches_grid_and_identity(self, args):
        p, beta, r0, lam1 = args
        kappa, theta = delay_contraction_rate(p, beta, r0, lam1)
        r = np.linspace(0.0, lam1, 500_001)
        want = np.max(r - beta * np.exp(p * r * r0))
        assert kappa == pytest.approx(float(want), rel=1e-6, abs=1e-9)
        # defining identity at the reported maximizer
        assert kappa == pytest.approx(theta - beta * np.exp(p * theta * r0),
                                      rel=1e-12)


class TestPairConditions:
    def test_block_weight_cases(self):
        assert pair_block_weight(2.0, 0.0, 0.5, 3.0) == pytest.approx(1.5 / 3.0)
        assert pair_block_weight(0.0, 1.0, 0.0, 1.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            pair_block_weight(1.0, 1.0, 1.0, 0.0)

    def test_block_weight_quadratic_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            delta, k1, k2, nb = rng.random(4) * 3 + 0.01
            a = pair_block_weight(delta, k1, k2, nb)
            assert abs(nb * a ** 2 - (delta - k2) * a - k1) <= 1e-12

    def test_inf_kernel_matches_dense_grid(self):
        for lam1, r0 in [(1.0, 0.5), (4.0, 0.25), (2.0, 0.0), (10.0, 3.0)]:
            lhs, s_star, _ = decay_envelope_inf(lam1, r0)
            lo = lam1 * 1e-6
            s = np.linspace(lo, lam1, 1_000_001)
            want = float(np.min(s * np.exp(-s * r0)))
            assert lhs == pytest.approx(want, rel=1e-8)

    def test_zero_rhs_verdict(self):
        rep = check_pair_contraction(2.0, 0.5, 0.0, 0.0, 0.0, 0.0)
        assert rep.rhs == 0.0
        assert rep.verdict == (rep.lhs > 0.0)

    def test_r0_zero_flags_floor(self):
        rep = check_pair_contraction(2.0, 0.0, 0.1, 0.0, 0.5, 1.0)
        assert rep.details["at_floor"]
        assert rep.warnings
        # sup-variant of s * e^0 = s peaks at lambda1
        assert rep.details["sup_variant_lhs"] == pytest.approx(2.0)

    def test_degenerate_pair_alpha_cases(self):
        rep = check_degenerate_pair(4.0, 0.25, 1.0, 1.0, 0.1)
        assert rep.details["alpha_weight"] == pytest.approx((np.sqrt(5) - 1) / 2)
        rep0 = check_degenerate_pair(4.0, 0.25, 1.0, 0.0, 0.0)
        assert rep0.rhs == 0.0
        assert rep0.verdict == (rep0.lhs > 0.0)

    def test_shared_inf_kernel(self):
        a = check_pair_contraction(3.0, 0.4, 0.1, 0.1, 0.2, 1.0)
        b = check_degenerate_pair(3.0, 0.4, 1.0, 0.5, 0.1)
        assert a.lhs == b.lhs and a.optimizer == b.optimizer


class TestGrowthMargin:
    def test_margin_sign(self):
        from mvlab.analysis import check_drift_growth_margin

        ok = check_drift_growth_margin(4.0, 0.5, 0.2)
        assert ok.verdict and ok.lhs == pytest.approx(3.5)
        bad = check_drift_growth_margin(1.0, 1.5)
        assert not bad.verdict

    def test_included_in_spectral_bundle(self):
        m = make_spectral_delay(3, 1.0, 1, np.pi, a1=0.1, a2=0.1,
                                theta_weights=[1.0, 0.0, 0.0], r0=0.2)
        reports = {r.name for r in model_condition_reports(m)}
        assert "drift_growth_margin" in reports

    def test_invalid_inputs(self):
        from mvlab.analysis import check_drift_growth_margin

        with pytest.raises(ValueError):
            check_drift_growth_margin(0.0, 0.1)


class TestSummability:
    def test_p_series_cases(self):
        # lambda_i = i^q: sum i^(q (gamma - 1)) converges iff q (1-gamma) > 1
        assert check_spectral_summability(0.4, power=2.0).verdict
        assert not check_spectral_summability(0.6, power=2.0).verdict
        assert not check_spectral_summability(0.5, power=1.0).verdict

    def test_finite_spectrum_tail_fit(self):
        spec = np.arange(1, 101, dtype=float) ** 2
        rep = check_spectral_summability(0.4, spectrum=spec)
        assert rep.verdict
        assert rep.details["fitted_power"] == pytest.approx(2.0, rel=1e-6)
        assert np.isfinite(rep.details["tail_bound"])

    def test_gamma_range(self):
        with pytest.raises(ValueError):
            check_spectral_summability(1.2, power=2.0)


class TestRateFit:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 40)
        fit = fit_contraction_rate(np.column_stack([t, np.exp(-0.5 * t)]))
        assert fit.rate == pytest.approx(0.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_scale_and_intercept(self):
        t = np.linspace(0, 8, 60)
        fit = fit_contraction_rate(np.column_stack([t, 3.0 * np.exp(-1.2 * t)]))
        assert fit.rate == pytest.approx(1.2, abs=1e-9)
        assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-9)

    def test_noisy_within_ten_percent(self):
        rng = np.random.default_rng(17)
        t = np.linspace(0, 5, 50)
        w = np.exp(-0.8 * t) * np.exp(0.1 * rng.standard_normal(50))
        fit = fit_contraction_rate(np.column_stack([t, w]))
        assert fit.rate == pytest.approx(0.8, rel=0.1)

    def test_window_and_positivity(self):
        t = np.linspace(0, 5, 20)
        w = np.exp(-t)
        fit = fit_contraction_rate(np.column_stack([t, w]), window=(1.0, 4.0))
        assert fit.window == (1.0, 4.0)
        w[3] = -1.0
        with pytest.raises(ValueError):
            fit_contraction_rate(np.column_stack([t, w]), window=(0.0, 5.0))


class TestDvRate:
    def test_zero_at_invariant_law(self):
        lam, sig = 1.0, np.sqrt(2.0)
        s2 = sig ** 2 / (2.0 * lam)
        assert dv_rate_gaussian_ou(lam, sig, 0.0, s2) == 0.0

    def test_mean_shift_quarter(self):
        assert dv_rate_gaussian_ou(1.0, np.sqrt(2.0), 1.0, 1.0) == pytest.approx(0.25)

    def test_variance_double_eighth(self):
        # closed form (v - 1)^2 / (4 v) at v = 2
        assert dv_rate_gaussian_ou(1.0, np.sqrt(2.0), 0.0, 2.0) == pytest.approx(0.125)

    @pytest.mark.parametrize("case", [
        (1.0, np.sqrt(2.0), 1.0, 1.0), (1.0, np.sqrt(2.0), 0.0, 2.0),
        (0.5, 1.0, -0.7, 0.8), (2.0, 1.5, 0.3, 0.4),
    ])
    def test_matches_quadrature(self, case):
        lam, sig, m, v = case
        got = dv_rate_gaussian_ou(lam, sig, m, v)
        assert got == pytest.approx(dirichlet_quadrature(lam, sig, m, v), abs=1e-8)

    def test_invalid_variance(self):
        with pytest.raises(ValueError):
            dv_rate_gaussian_ou(1.0, 1.0, 0.0, -1.0)


def dirichlet_quadrature(lam, sig, m, v):
    """Independent oracle: (sig^2/2) * int ((sqrt(h))')^2 dmu with h the
    density ratio, differentiated numerically."""
    s2 = sig ** 2 / (2.0 * lam)
    s = np.sqrt(s2)

    def sqrt_h(x):
        return np.sqrt(norm.pdf(x, m, np.sqrt(v)) / norm.pdf(x, 0.0, s))

    def integrand(x):
        d = 1e-5
        deriv = (sqrt_h(x + d) - sqrt_h(x - d)) / (2 * d)
        return deriv ** 2 * norm.pdf(x, 0.0, s)

    lo = min(-8 * s, m - 8 * np.sqrt(v))
    hi = max(8 * s, m + 8 * np.sqrt(v))
    val, _ = quad(integrand, lo, hi, limit=400, epsabs=1e-12, epsrel=1e-12)
    return sig ** 2 / 2.0 * val


class TestHittingMoment:
    SCHEME = StepScheme("euler_maruyama", 0.01)

    def _ref(self, eps=0.0):
        m = make_ou_perturbation(2, eps=eps)
        return m.frozen(EmpiricalMeasure.from_points(np.zeros((1, 2))))

    def test_start_inside_is_one(self):
        est, cens = hitting_moment(self._ref(), 2.0, 0.5, 32, 10.0, self.SCHEME,
                                   seed=1, starts=[[0.1, 0.1]])
        assert est == 1.0 and cens == 0.0

    def test_strong_drift_large_ball(self):
        est, cens = hitting_moment(self._ref(), 3.0, 0.1, 64, 50.0, self.SCHEME,
                                   seed=2, starts=[[3.5, 0.0]])
        assert cens == 0.0
        assert est == pytest.approx(1.0, abs=0.1)

    def test_matches_fine_dt_oracle(self):
        start = [[3.0, 0.0]]
        est, cens = hitting_moment(self._ref(), 1.0, 0.1, 2000, 60.0,
                                   self.SCHEME, seed=3, starts=start)
        fine = StepScheme("euler_maruyama", 0.002)
        oracle, _ = hitting_moment(self._ref(), 1.0, 0.1, 2000, 60.0, fine,
                                   seed=4, starts=start)
        assert cens == 0.0
        assert est == pytest.approx(oracle, rel=0.1)

    def test_thread_count_invariance(self):
        a = hitting_moment(self._ref(), 1.5, 0.2, 64, 20.0, self.SCHEME, seed=5,
                           starts=[[2.5, 0.5]], threads=1)
        b = hitting_moment(self._ref(), 1.5, 0.2, 64, 20.0, self.SCHEME, seed=5,
                           starts=[[2.5, 0.5]], threads=3)
        assert a == b


class TestComparisonExperiment:
    SCHEME = StepScheme("euler_maruyama", 0.01)

    def test_measure_independent_rho_zero(self):
        m = make_ou_perturbation(2, eps=0.0)
        res = run_comparison_experiment(
            m, N=32, T=4.0, scheme=self.SCHEME, seed=5,
            init_sampler=gaussian_init(mean=[3.0, 3.0]),
            invariant_cfg={"N": 64, "T_burn": 2.0, "T_sample": 2.0},
            n_report=4, snapshot_dt=0.5, n_checkpoints=4)
        np.testing.assert_array_equal(res.rho_mean, 0.0)
        np.testing.assert_array_equal(res.step_dist_mean, 0.0)

    def test_rho_dominated_by_running_integral(self):
        m = make_ou_perturbation(2, eps=0.1)
        res = run_comparison_experiment(
            m, N=128, T=10.0, scheme=self.SCHEME, seed=6,
            init_sampler=gaussian_init(mean=[5.0, 5.0]),
            invariant_cfg={"N": 128, "T_burn": 3.0, "T_sample": 4.0},
            n_report=6, snapshot_dt=0.25, n_checkpoints=8)
        snap_at_cp = np.searchsorted(res.snapshot_times, res.checkpoint_times)
        bound = res.integral_particles[snap_at_cp] / res.checkpoint_times[:, None]
        assert np.all(res.rho_particles <= bound + 1e-10)
        assert np.all(res.rho_mean <= res.integral_mean[snap_at_cp]
                      / res.checkpoint_times + 1e-10)

    def test_uncertified_model_warns(self):
        m = make_ou_perturbation(2, eps=0.0)
        m.params["kappa2"] = 2.0
        with pytest.warns(UserWarning):
            run_comparison_experiment(
                m, N=8, T=0.5, scheme=self.SCHEME, seed=1,
                init_sampler=gaussian_init(),
                mu_bar=EmpiricalMeasure.from_points(np.zeros((4, 2))),
                n_report=2, snapshot_dt=0.25, n_checkpoints=2)


class TestModelReportBundles:
    def test_each_family_has_reports(self):
        cases = [
            make_ou_perturbation(2, eps=0.05),
            make_hamiltonian(1, 2.0, 1.0, 0.5, 0.2),
            make_spectral_delay(3, 1.0, 1, np.pi, a1=0.1, a2=0.1,
                                theta_weights=[1.0, 0.0, 0.0], r0=0.2),
            make_degenerate_pair(2, a1=1.0, a2=0.5, a3=0.1, r0=0.25),
        ]
        for model in cases:
            reports = model_condition_reports(model, n_probes=200)
            assert reports
            for rep in reports:
                assert isinstance(rep.verdict, bool)
                assert np.isfinite(rep.lhs)
