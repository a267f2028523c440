import numpy as np

from contact_duality.coupling import dirichlet, neumann, robin, uniform_model
from contact_duality.heat_solver import pair_kernel_pde_gate
from contact_duality.kernel_checks import (
    SamplingSpec,
    dual_reconstruction_check,
    verify_assumptions,
    verify_sector_properties,
)
from contact_duality.kernels import (
    KernelEvaluator,
    dual_pair_from_sector,
    free_kernel,
    permutation_sum,
    robin_pair_kernel,
)
from contact_duality.wavefunctions import Statistics


def test_free_kernel_assumptions_two_body():
    rep = verify_assumptions(free_kernel(2), SamplingSpec(pairs=2))
    assert rep["composition"]["max"] < 1e-6
    assert rep["initial"]["max"] < 1e-6
    assert rep["symmetry"]["max"] < 1e-12
    assert rep["heat_equation"]["max"] < 1e-6
    assert rep["permutation_invariance"]["max"] < 1e-12


def test_broken_kernel_negative_control():
    base = free_kernel(2)
    broken = KernelEvaluator(
        evaluate=lambda x, y, tau: 1.3 * np.asarray(base.evaluate(x, y, tau)),
        space="full", n=2, label="broken")
    rep = verify_assumptions(broken, SamplingSpec(pairs=1, initial_depth=3))
    assert rep["composition"]["max"] > 0.2  # wrong normalization shows up O(1)


def test_pair_kernel_properties():
    pk = robin_pair_kernel(robin(-1.0))
    spec = SamplingSpec(pairs=2, bound_state_scale=2.0, quad_tol=1e-7,
                        quad_max_doublings=7)
    rep = verify_sector_properties(pk, uniform_model(2, robin(-1.0)), spec)
    assert rep["composition"]["max"] < 1e-5
    assert rep["boundary"]["max"] < 1e-8
    assert rep["initial"]["max"] < 1e-6
    assert rep["heat_equation"]["max"] < 1e-6


def test_pair_kernel_pde_gate():
    assert pair_kernel_pde_gate(robin(-1.0)) < 1e-6
    assert pair_kernel_pde_gate(robin(1.0)) < 1e-6


def test_pde_gate_limits():
    assert pair_kernel_pde_gate(dirichlet()) < 1e-6
    assert pair_kernel_pde_gate(neumann()) < 1e-6


def test_sector_sum_properties_bose():
    kernel = permutation_sum(free_kernel(2), Statistics.BOSE)
    rep = verify_sector_properties(kernel, uniform_model(2, neumann()),
                                   SamplingSpec(pairs=2))
    assert rep["composition"]["max"] < 1e-6
    assert rep["boundary"]["max"] < 1e-3  # finite-difference face derivative


def test_sector_sum_mismatched_model_control():
    # a Bose sum of free kernels checked against a hard-core face fails
    kernel = permutation_sum(free_kernel(2), Statistics.BOSE)
    rep = verify_sector_properties(kernel, uniform_model(2, dirichlet()),
                                   SamplingSpec(pairs=2))
    assert rep["boundary"]["max"] > 0.3


def test_dual_reconstruction_hard_core():
    sector = permutation_sum(free_kernel(2), Statistics.FERMI)
    k_bose, _ = dual_pair_from_sector(sector)
    rep = dual_reconstruction_check(k_bose, free_kernel(2), SamplingSpec(pairs=3))
    assert rep["max_deviation"] < 1e-10


def test_dual_reconstruction_finite_coupling():
    pk = robin_pair_kernel(robin(-1.0))
    k_bose, k_fermi = dual_pair_from_sector(pk)
    rep = dual_reconstruction_check(k_bose, k_fermi,
                                    SamplingSpec(pairs=2, bound_state_scale=2.0),
                                    coupling=robin(-1.0))
    assert rep["max_deviation"] < 1e-6
    assert rep["connection"]["bose_delta"]["jump"] < 1e-3
    assert rep["connection"]["bose_delta"]["continuity"] < 1e-10
    assert rep["connection"]["fermi_epsilon"]["jump"] < 1e-3
    assert rep["connection"]["fermi_epsilon"]["continuity"] < 1e-3
