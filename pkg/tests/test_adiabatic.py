import math

import numpy as np
import pytest

import annealab as al
from annealab.adiabatic import (MappedFlow, depletion_rate, depletion_rate_mapped,
                                derivative_identity_residual, excitation_coefficient,
                                integrate_imaginary_time, integrated_depletion,
                                measure_ground_probability, predict_ground_probability,
                                project_onto_levels, psi_trajectory_from_master,
                                residual_slope, run_adiabatic_sweep)
from annealab.markov import integrate_master


def test_constant_diagonal_flow_is_exactly_solvable():
    h = np.diag([0.0, 0.8])
    psi0 = np.array([0.7, 0.5])
    tau = 6.0
    traj = integrate_imaginary_time(lambda s: h, psi0=psi0, tau=tau, steps=2000,
                                    store_points=11)
    for k, s in enumerate(traj.s):
        assert traj.psi[k, 0] == pytest.approx(0.7, abs=1e-12)
        assert traj.psi[k, 1] == pytest.approx(0.5 * math.exp(-tau * 0.8 * s), abs=1e-8)


def test_norm_is_not_conserved(chain4, ramp):
    flow = MappedFlow(chain4, ramp)
    traj = integrate_imaginary_time(flow)
    norms = np.linalg.norm(traj.psi, axis=1)
    assert np.abs(norms - norms[0]).max() > 1e-3


@pytest.mark.parametrize("tau", [50.0, 200.0])
def test_cross_oracle_master_vs_imaginary_time(chain4, tau):
    """The module's central cross-check: the two integrators are independent
    code paths related by the exact wave-vector transform."""
    sched = al.LinearSchedule(tau=tau, beta_max=30.0, beta0=0.2, beta1=3.0)
    master = integrate_master(chain4, sched)
    psi_master = psi_trajectory_from_master(master, chain4, sched)
    imtime = integrate_imaginary_time(MappedFlow(chain4, sched))
    assert np.array_equal(master.s, imtime.s)
    assert np.abs(psi_master - imtime.psi).max() < 1e-8


def test_imaginary_time_step_halving_is_fourth_order():
    model = al.ferromagnetic_chain(3)
    sched = al.LinearSchedule(tau=5.0, beta_max=30.0, beta0=0.2, beta1=2.0)
    flow = MappedFlow(model, sched)
    psi0 = np.zeros(model.dim)
    psi0[1] = 1.0
    ref = integrate_imaginary_time(flow, psi0=psi0, steps=6400, store_points=2).final
    errors = [np.abs(integrate_imaginary_time(flow, psi0=psi0, steps=n,
                                              store_points=2).final - ref).max()
              for n in (100, 200, 400)]
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders > 3.5) and np.all(orders < 4.5)


def test_generic_dense_source_matches_kernel_path(chain4, ramp):
    flow = MappedFlow(chain4, ramp)
    psi0 = flow.equilibrium_psi()
    dense = integrate_imaginary_time(lambda s: flow.total_matrix(s), psi0=psi0,
                                     tau=ramp.tau, steps=1000, store_points=5)
    kernel = integrate_imaginary_time(flow, psi0=psi0, steps=1000, store_points=5)
    assert np.abs(dense.psi - kernel.psi).max() < 1e-13


def test_excitation_coefficient_cases(chain4, ramp):
    flow = MappedFlow(chain4, ramp)
    spec = flow.spectral(0.5)
    assert excitation_coefficient(spec, np.zeros((16, 16)), 1) == 0.0
    with pytest.raises(ValueError):
        excitation_coefficient(spec, np.zeros((16, 16)), 0)


def test_excitation_dual_path_single_spin():
    """A_1 from the finite-difference derivative against the analytic 2x2
    derivative of the mapped matrix."""
    h = 0.7
    model = al.IsingModel(1, (), ((0, h),))
    sched = al.LinearSchedule(tau=50.0, beta_max=30.0, beta0=0.2, beta1=3.0)
    flow = MappedFlow(model, sched)
    s = 0.3
    beta, bdot = flow.beta(s), flow.beta_dot(s)
    de = 2 * h

    def mapped_2x2(b):
        up = 0.5 * (1 - math.tanh(0.5 * b * de))
        down = 0.5 * (1 + math.tanh(0.5 * b * de))
        g = 1.0 / (2 * math.cosh(0.5 * b * de))
        return np.array([[down, -g], [-g, up]])

    db = 1e-7
    dh_analytic = (mapped_2x2(beta + db) - mapped_2x2(beta - db)) / (2 * db) * bdot
    spec = flow.spectral(s)
    a_fd = excitation_coefficient(spec, flow.dh_mapped(s), 1)
    a_analytic = excitation_coefficient(spec, dh_analytic, 1)
    assert a_fd == pytest.approx(a_analytic, abs=1e-6)


def test_excited_coefficients_approach_first_order_value(chain4):
    """c_j(1) * tau converges to A_j(1) with 1/tau corrections on the pure
    mapped flow started in the exact ground mode."""
    sched = al.LinearSchedule(tau=1.0, beta_max=30.0, beta0=0.2, beta1=1.5)
    diffs = []
    taus = (100.0, 200.0, 400.0, 800.0)
    for tau in taus:
        flow = MappedFlow(chain4, sched.with_tau(tau))
        psi0 = flow.spectral(0.0).eigenvectors[:, 0]
        traj = integrate_imaginary_time(lambda s: flow.mapped_matrix(s), psi0=psi0,
                                        tau=tau, store_points=3)
        spec1 = flow.spectral(1.0)
        a_j = excitation_coefficient(spec1, flow.dh_mapped(1.0), 2)
        c_j = float(spec1.eigenvectors[:, 2] @ traj.final)
        diffs.append(abs(c_j * tau - a_j))
    slope = np.polyfit(np.log(taus), np.log(diffs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.25)


def test_depletion_zero_for_constant_beta(chain4):
    flow = MappedFlow(chain4, al.constant_schedule(1.0, tau=50.0))
    spec = flow.spectral(0.5)
    assert depletion_rate_mapped(spec, flow.h0, flow.beta_dot(0.5)) == 0.0
    quad = integrated_depletion(flow)
    assert quad.value == 0.0


def test_depletion_generic_equals_mapped_shortcut(chain4, ramp, rng):
    flow = MappedFlow(chain4, ramp)
    for s in (0.1, 0.5, 0.9):
        spec = flow.spectral(s)
        generic = depletion_rate(spec, flow.dh_mapped(s))
        shortcut = depletion_rate_mapped(spec, flow.h0, flow.beta_dot(s))
        assert generic == pytest.approx(shortcut, rel=1e-8)

    model = al.random_model(5, rng)
    f = MappedFlow(model, ramp)
    spec = f.spectral(0.4)
    assert depletion_rate(spec, f.dh_mapped(0.4)) == pytest.approx(
        depletion_rate_mapped(spec, f.h0, f.beta_dot(0.4)), rel=1e-8)


def test_depletion_single_spin_closed_form():
    h = 0.7
    model = al.IsingModel(1, (), ((0, h),))
    sched = al.LinearSchedule(tau=10.0, beta_max=30.0, beta0=0.1, beta1=2.0)
    flow = MappedFlow(model, sched)
    s = 0.4
    beta, bdot = flow.beta(s), flow.beta_dot(s)
    closed = 0.25 * bdot ** 2 * (h / math.cosh(beta * h)) ** 2
    assert depletion_rate_mapped(flow.spectral(s), flow.h0, bdot) == pytest.approx(closed, rel=1e-12)


def test_derivative_identity_residual(chain4, ramp, rng):
    flow = MappedFlow(chain4, ramp)
    const = MappedFlow(chain4, al.constant_schedule(1.0, tau=50.0))
    spec = const.spectral(0.5)
    assert derivative_identity_residual(spec, const.h0, 0.0, np.zeros((16, 16))) == 0.0

    for s in np.linspace(0.05, 0.95, 5):
        spec = flow.spectral(float(s))
        res = derivative_identity_residual(spec, flow.h0, flow.beta_dot(float(s)),
                                           flow.dh_mapped(float(s)))
        assert res < 1e-6

    model = al.random_model(5, rng)
    f = MappedFlow(model, ramp)
    res = derivative_identity_residual(f.spectral(0.5), f.h0, f.beta_dot(0.5), f.dh_mapped(0.5))
    assert res < 1e-6


def test_first_order_depletion_law_on_pure_mapped_flow(chain4):
    """The core first-order statement: on the flow generated by the mapped
    Hamiltonian alone (zero ground energy at every s), the ground coefficient
    depletes by integral/tau with an O(tau^-2) remainder."""
    sched = al.LinearSchedule(tau=1.0, beta_max=30.0, beta0=0.2, beta1=3.0)
    quad = integrated_depletion(MappedFlow(chain4, sched))
    taus = (50.0, 100.0, 200.0, 400.0, 800.0)
    residuals = []
    c0_finals = []
    for tau in taus:
        flow = MappedFlow(chain4, sched.with_tau(tau))
        psi0 = flow.spectral(0.0).eigenvectors[:, 0]
        traj = integrate_imaginary_time(lambda s: flow.mapped_matrix(s), psi0=psi0,
                                        tau=tau, store_points=3)
        c0 = float(flow.spectral(1.0).eigenvectors[:, 0] @ traj.final)
        c0_finals.append(c0)
        residuals.append(abs(c0 - (1.0 - quad.value / tau)))
    slope, stderr = residual_slope(taus, residuals)
    assert -2.5 < slope < -1.6
    # ground coefficient stays in [1 - K/tau, 1] with K the measured integral
    for tau, c0 in zip(taus, c0_finals):
        assert 1.0 - 1.05 * quad.value / tau <= c0 <= 1.0 + 1e-9


def test_quadrature_refinement_converges(chain4, ramp):
    quad = integrated_depletion(MappedFlow(chain4, ramp), tol=1e-6)
    finer = integrated_depletion(MappedFlow(chain4, ramp), tol=1e-9)
    assert quad.value == pytest.approx(finer.value, rel=2e-6)
    assert quad.intervals <= finer.intervals


def test_phases_nondecreasing_and_projection_shapes(chain4, ramp):
    flow = MappedFlow(chain4, ramp)
    traj = integrate_imaginary_time(flow, store_points=41)
    table = project_onto_levels(traj, flow.mapped_matrix, levels=4)
    assert table.coefficients.shape == (41, 4)
    assert np.all(np.diff(table.phases, axis=0) >= -1e-12)
    assert np.all(table.energies[:, 1:] > 0)
    # c_0 of the wave vector equals 1/sqrt(Z) exactly along the master flow
    z = [np.exp(-flow.beta(float(s)) * flow.h0).sum() for s in traj.s]
    assert np.abs(table.coefficients[:, 0] - 1.0 / np.sqrt(z)).max() < 1e-8


def test_prediction_examples(chain4):
    pred = predict_ground_probability(0.0, 100.0)
    assert pred.value == 1.0 and not pred.extrapolative
    assert predict_ground_probability(5.0, 4.0).extrapolative


def test_measure_ground_probability(chain4, rng):
    ground = al.ground_states(chain4)
    assert measure_ground_probability(al.gibbs(chain4, 25.0), ground) == pytest.approx(1.0, abs=1e-9)
    assert measure_ground_probability(np.full(16, 1 / 16), ground) == pytest.approx(2 / 16)

    # decomposition cross-check on a unique-ground model: the ground-config
    # probability equals the wave-vector component since its energy is zero
    model = al.IsingModel(4, al.ferromagnetic_chain(4).couplings, ((0, 0.3),), "chain-periodic")
    sched = al.LinearSchedule(tau=60.0, beta_max=30.0, beta0=0.2, beta1=2.5)
    traj = integrate_master(model, sched)
    psi_final = al.psi_from_p(traj.final, sched.beta(1.0), al.h0_diagonal(model))
    g_index = al.ground_states(model).indices[0]
    assert measure_ground_probability(traj.final, al.ground_states(model)) == pytest.approx(
        psi_final[g_index], abs=1e-10)


def test_adiabatic_condition_bookkeeping(chain4):
    """When the first-order quantities are small against tau, the measured
    ground-probability deficit is small too."""
    sched = al.LinearSchedule(tau=800.0, beta_max=30.0, beta0=0.2, beta1=3.0)
    flow = MappedFlow(chain4, sched)
    quad = integrated_depletion(flow)
    max_a1 = max(abs(excitation_coefficient(flow.spectral(float(s)), flow.dh_mapped(float(s)), 1))
                 for s in np.linspace(0.05, 0.95, 7))
    assert max_a1 / sched.tau < 0.01
    assert quad.value / sched.tau < 0.01
    traj = integrate_master(chain4, sched)
    p_num = measure_ground_probability(traj.final, al.ground_states(chain4))
    assert 1.0 - p_num < 0.02


def test_run_adiabatic_sweep_report(chain4, ramp):
    report = run_adiabatic_sweep(chain4, ramp, taus=(50.0, 100.0, 200.0), levels=2)
    assert report.taus.tolist() == [50.0, 100.0, 200.0]
    assert report.measured.shape == (3,)
    assert np.all(report.residuals >= 0)
    assert report.excitation_samples.shape[0] == 2
    assert not report.extrapolative.any()
    with pytest.raises(ValueError):
        run_adiabatic_sweep(chain4, ramp, taus=())
