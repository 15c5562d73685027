import numpy as np
import pytest

from helpers import BENCHMARK_SHAPES, random_valid_state
from ringform import (
    FormationState,
    HypothesisViolated,
    NotConverged,
    SimConfig,
    TargetSpec,
    angle_sum_series,
    assemble_A,
    certify,
    convergence_rate,
    cycle_factorization,
    cycle_incidence,
    errors,
    gradient_box,
    lambda2_cycle,
    lie_derivative_value,
    lyapunov,
    perturb,
    projector_quadratic_sum,
    realize_target,
    run,
    sampled_infimum_check,
    w_factor,
)

FINE = dict(dt=2e-5, t_max=2.0, convergence_tol=1e-3, deadband=1e-4,
            settle_window=0.05)


def perturbed(shape):
    degs, seed = BENCHMARK_SHAPES[shape]
    spec = TargetSpec.from_degrees(degs)
    return perturb(realize_target(spec), 0.1, seed), spec


class TestLyapunov:
    def test_examples(self):
        assert lyapunov(np.array([0.5, -0.25, 0.0])) == 0.75
        assert lyapunov(np.zeros(5)) == 0.0

    def test_properties(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            eps = rng.normal(size=6)
            assert lyapunov(eps) >= np.abs(eps).max()
            assert lyapunov(2 * eps) == pytest.approx(2 * lyapunov(eps))


class TestGradientBox:
    def test_example(self):
        box = gradient_box(np.array([1.0, -2.0, 0.0]))
        np.testing.assert_array_equal(box.lower, [1.0, -1.0, -1.0])
        np.testing.assert_array_equal(box.upper, [1.0, -1.0, 1.0])
        np.testing.assert_array_equal(box.least_norm(), [1.0, -1.0, 0.0])

    def test_least_norm_is_sign(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            eps = rng.normal(size=5)
            eps[rng.integers(5)] = 0.0
            np.testing.assert_array_equal(gradient_box(eps).least_norm(),
                                          np.sign(eps))

    def test_contains(self):
        box = gradient_box(np.array([1.0, 0.0]))
        assert box.contains(np.array([1.0, 0.3]))
        assert box.contains(np.array([1.0, -1.0]))
        assert not box.contains(np.array([0.9, 0.0]))
        assert not box.contains(np.array([1.0, 1.1]))

    def test_member_norm_at_least_one_off_target(self):
        # Any selection from the box has unit-magnitude components
        # wherever the error is nonzero.
        rng = np.random.default_rng(2)
        for _ in range(50):
            eps = rng.normal(size=4)
            box = gradient_box(eps)
            eta = box.lower + rng.uniform(0, 1, 4) * (box.upper - box.lower)
            assert np.linalg.norm(eta) >= 1.0


class TestErrorMatrix:
    def test_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            A = assemble_A(random_valid_state(rng)).matrix
            assert np.abs(A - A.T).max() <= 1e-12

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            A = assemble_A(random_valid_state(rng)).matrix
            assert np.linalg.eigvalsh(A)[0] >= -1e-9

    def test_cyclic_tridiagonal_pattern(self):
        rng = np.random.default_rng(5)
        for n in range(4, 9):
            A = assemble_A(random_valid_state(rng, n=n)).matrix
            for i in range(n):
                for j in range(n):
                    if (j - i) % n in (0, 1, n - 1):
                        continue
                    assert A[i, j] == 0.0

    def test_quadratic_form_matches_projector_sum(self):
        # Dual route for x^T A x: matrix product against the explicit
        # sum of projected squares.
        rng = np.random.default_rng(6)
        for _ in range(20):
            st = random_valid_state(rng)
            em = assemble_A(st)
            for _ in range(20):
                x = rng.normal(size=st.n)
                assert em.quadratic_form(x) == pytest.approx(
                    projector_quadratic_sum(st, x), abs=1e-10
                )

    def test_kernel_contains_inverse_sines(self):
        # 1/sin(theta_i) is always a null direction of A.
        rng = np.random.default_rng(7)
        for _ in range(20):
            st = random_valid_state(rng)
            if np.abs(np.sin(st.angles)).min() < 0.15:
                continue
            A = assemble_A(st).matrix
            v = 1.0 / np.sin(st.angles)
            assert np.linalg.norm(A @ v) <= 1e-8 * np.linalg.norm(v) * max(
                1.0, np.abs(A).max()
            )


class TestLieDerivative:
    def test_exactly_zero_errors_give_zero(self):
        # Collinear ring against its own degenerate angles: every error
        # is exactly 0.0 in floating point, so the value must be 0.0.
        st = FormationState(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
        spec = TargetSpec(np.array([0.0, np.pi, 0.0]))
        np.testing.assert_array_equal(errors(st, spec), np.zeros(3))
        assert lie_derivative_value(st, spec) == 0.0

    def test_constant_sign_in_kernel_at_equal_sines(self):
        # At an equal-sine state the constant vector is a null direction
        # of A, so a uniform sign pattern produces zero descent. Mixed
        # noise-driven patterns need not vanish; that is why the value
        # at the realized target is only guaranteed nonpositive.
        st = realize_target(TargetSpec.from_degrees([90] * 4))
        em = assemble_A(st)
        assert em.quadratic_form(np.ones(4)) == pytest.approx(0.0, abs=1e-12)
        assert em.quadratic_form(-np.ones(4)) == pytest.approx(0.0, abs=1e-12)
        val = lie_derivative_value(st, TargetSpec.from_degrees([90] * 4))
        assert val <= 0.0

    def test_strictly_negative_off_target(self):
        for shape in BENCHMARK_SHAPES:
            st, spec = perturbed(shape)
            val = lie_derivative_value(st, spec)
            assert val < -1e-6

    def test_never_positive(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            st = random_valid_state(rng)
            spec = TargetSpec(np.mod(st.angles + rng.normal(0, 0.3, st.n),
                                     2 * np.pi))
            assert lie_derivative_value(st, spec) <= 1e-12


class TestCycleStructure:
    def test_incidence_action(self):
        rng = np.random.default_rng(9)
        for n in range(3, 9):
            E = cycle_incidence(n)
            y = rng.normal(size=n)
            np.testing.assert_allclose(E @ y, y - np.roll(y, -1), atol=1e-15)
            np.testing.assert_array_equal(E @ np.ones(n), np.zeros(n))
            assert np.linalg.matrix_rank(E) == n - 1

    def test_lambda2_spot_values(self):
        # Fixed against the closed form 2 - 2 cos(2 pi / n).
        assert lambda2_cycle(3) == pytest.approx(3.0, abs=1e-9)
        assert lambda2_cycle(4) == pytest.approx(2.0, abs=1e-9)
        for n in range(3, 13):
            assert lambda2_cycle(n) == pytest.approx(
                2.0 - 2.0 * np.cos(2 * np.pi / n), abs=1e-9
            )

    def test_factorization_diag_is_sines(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            st = random_valid_state(rng)
            fac = cycle_factorization(st)
            np.testing.assert_allclose(fac.sin_values(), np.sin(st.angles),
                                       atol=1e-10)
            np.testing.assert_array_equal(fac.incidence, cycle_incidence(st.n))

    def test_factorization_matches_componentwise_formula(self):
        # (E D eta)_i must equal sin(theta_i) eta_i - sin(theta_{i+1}) eta_{i+1}.
        rng = np.random.default_rng(11)
        for _ in range(20):
            st = random_valid_state(rng)
            fac = cycle_factorization(st)
            eta = rng.normal(size=st.n)
            h = fac.incidence @ fac.diag @ eta
            d = fac.sin_values()
            expected = d * eta - np.roll(d * eta, -1)
            np.testing.assert_allclose(h, expected, atol=1e-12)

    def test_quadratic_chain_bound(self):
        # eta^T A eta >= |E D eta|^2 / sum of edge lengths, with equality
        # for equal edge lengths.
        rng = np.random.default_rng(12)
        for _ in range(20):
            st = random_valid_state(rng)
            A = assemble_A(st).matrix
            fac = cycle_factorization(st)
            eta = rng.choice([-1.0, 0.0, 1.0], size=st.n)
            lhs = eta @ A @ eta
            h = fac.incidence @ fac.diag @ eta
            assert lhs >= (h @ h) / st.edge_lengths.sum() - 1e-10

    def test_quadratic_equality_for_equal_lengths(self):
        st = realize_target(TargetSpec.from_degrees([90] * 4))
        A = assemble_A(st).matrix
        fac = cycle_factorization(st)
        L = st.edge_lengths[0]
        for bits in range(3**4):
            eta = np.array([(bits // 3**i) % 3 - 1 for i in range(4)], dtype=float)
            h = fac.incidence @ fac.diag @ eta
            assert L * (eta @ A @ eta) == pytest.approx(h @ h, abs=1e-10)


class TestSampledInfimum:
    def test_cycle_laplacian_bound_holds(self):
        E = cycle_incidence(4)
        check = sampled_infimum_check(E.T @ E, samples=20_000, seed=0)
        assert check.passed
        assert check.bound == pytest.approx(0.5, abs=1e-12)
        assert check.min_value >= 0.5 - 1e-9
        # The reported minimizer is a unit vector with mixed signs.
        assert np.linalg.norm(check.best_vector) == pytest.approx(1.0, abs=1e-12)
        s = np.sign(check.best_vector)
        assert s.max() > 0 > s.min()

    def test_direct_sample_value(self):
        # Hand evaluation: x = (1, -1, 0, 0)/sqrt(2) gives x^T E^T E x = 3.
        E = cycle_incidence(4)
        x = np.array([1.0, -1.0, 0.0, 0.0]) / np.sqrt(2)
        assert x @ (E.T @ E) @ x == pytest.approx(3.0, abs=1e-12)

    def test_hypothesis_violations(self):
        with pytest.raises(HypothesisViolated):
            sampled_infimum_check(np.zeros((4, 4)), samples=10)
        with pytest.raises(HypothesisViolated):
            sampled_infimum_check(np.diag([0.0, 1.0, 1.0, 1.0]), samples=10)
        with pytest.raises(HypothesisViolated):
            E = cycle_incidence(4)
            sampled_infimum_check(-(E.T @ E), samples=10)
        with pytest.raises(HypothesisViolated):
            sampled_infimum_check(np.triu(np.ones((4, 4))), samples=10)


class TestWFactor:
    def test_example_value(self):
        # (cos(pi/2) - cos(pi/3)) / (pi/2 - pi/3) = -3/pi.
        assert w_factor(np.pi / 2, np.pi / 3) == pytest.approx(-3 / np.pi,
                                                               abs=1e-12)

    def test_limit_at_coincidence(self):
        assert w_factor(np.pi / 3, np.pi / 3) == pytest.approx(
            -np.sin(np.pi / 3), abs=1e-15
        )
        # Just outside the guard the secant agrees with the limit.
        assert w_factor(np.pi / 3 + 2e-7, np.pi / 3) == pytest.approx(
            -np.sin(np.pi / 3), abs=1e-6
        )

    def test_sign_pattern(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            a, b = rng.uniform(0.05, np.pi - 0.05, 2)
            assert w_factor(a, b) < 0
            a, b = rng.uniform(np.pi + 0.05, 2 * np.pi - 0.05, 2)
            assert w_factor(a, b) > 0

    def test_same_sign_product_with_sines_near_targets(self):
        # Diagonal of D W keeps one sign across the whole formation when
        # initial and target angles share their half-plane.
        for shape in BENCHMARK_SHAPES:
            st, spec = perturbed(shape)
            d = np.sin(st.angles)
            w = np.array([w_factor(t, ts) for t, ts in zip(st.angles, spec.angles)])
            products = d * w
            assert np.all(products < 0)


class TestCertificates:
    def test_rate_example(self):
        assert convergence_rate(0.5, 2.0, 10.0, 4) == pytest.approx(0.025,
                                                                    abs=1e-15)
        with pytest.raises(ValueError):
            convergence_rate(0.5, 2.0, 0.0, 4)
        with pytest.raises(ValueError):
            convergence_rate(0.5, 2.0, 10.0, 2)

    def test_converged_square_run(self):
        st, spec = perturbed("square")
        rec = run(st, spec, SimConfig(**FINE))
        cert = certify(rec, spec)
        assert cert.n == 4
        assert cert.lambda2 == pytest.approx(2.0, abs=1e-9)
        assert 0 < cert.beta <= 1.0
        assert cert.gamma >= 4 * 0.9
        assert cert.kappa == pytest.approx(
            convergence_rate(cert.beta, cert.lambda2, cert.gamma, 4), abs=1e-15
        )
        assert cert.v0 == pytest.approx(rec.lyapunov[0])
        assert cert.time_bound == pytest.approx(cert.v0 / cert.kappa)
        assert cert.displacement_bound == pytest.approx(2 * cert.v0 / cert.kappa)
        assert cert.time_ok and cert.t_f <= cert.time_bound
        assert cert.displacement_ok
        assert cert.max_displacement <= 0.3
        assert cert.horizon_ok and cert.t_f < cert.t_star
        assert cert.all_ok

    def test_start_at_target(self):
        spec = TargetSpec.from_degrees([90] * 4)
        st = realize_target(spec)
        rec = run(st, spec, SimConfig(**FINE))
        cert = certify(rec, spec)
        assert cert.v0 <= 1e-12
        assert cert.t_f == 0.0
        assert cert.max_displacement == 0.0
        assert cert.all_ok

    def test_not_converged_raises(self):
        st, spec = perturbed("square")
        rec = run(st, spec, SimConfig(dt=2e-5, t_max=0.005, deadband=1e-4))
        assert not rec.converged
        with pytest.raises(NotConverged):
            certify(rec, spec)


class TestAngleSumSeries:
    def test_conserved_along_run(self):
        from ringform import angle_sum

        st, spec = perturbed("triangle")
        rec = run(st, spec, SimConfig(**FINE))
        series = angle_sum_series(rec)
        assert series.shape == rec.t.shape
        assert series[0] == pytest.approx(angle_sum(st), abs=1e-12)
        assert np.abs(series - series[0]).max() <= 1e-10
