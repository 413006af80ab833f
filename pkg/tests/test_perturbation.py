import math

import numpy as np
import pytest

from cohpert import (
    DensityMatrix,
    HermitianOperator,
    PerturbationFamily,
    PositivityError,
    RankCaseError,
    admissible_radius,
    amplitude_damping_channel,
    apply_matrix,
    complement,
    depolarizing_channel,
    derivative_profile,
    f_eval,
    fd_derivatives,
    identity_channel,
    line_between,
    platypus_channel,
    reduced_resolvent,
    spectral_decompose,
    state_at,
    tensor,
    w0_trace,
    w_trace,
)
from cohpert.perturbation import DIVERGENT, NEGATIVE_INFINITY
from cohpert.scenarios import platypus_ad_family, qubit_flip_family, two_qubit_tilt_family
from conftest import random_channel, random_density, random_traceless


def depolarizing_pair_w_traces(p):
    """Both trace values for the two-qubit tilt family, straight from the formulas."""
    fam = two_qubit_tilt_family()
    ch = depolarizing_channel(p)
    joint = tensor(ch, ch)
    comp = complement(joint)
    out_dec = spectral_decompose(apply_matrix(joint, fam.base.matrix))
    env_dec = spectral_decompose(apply_matrix(comp, fam.base.matrix))
    tw_out = w_trace(out_dec, apply_matrix(joint, fam.a1.matrix))
    tw_env = w_trace(env_dec, apply_matrix(comp, fam.a1.matrix))
    return tw_out, tw_env


def closed_form_w_traces(p):
    """Closed forms for the same two traces (natural logs).

    The output-side value is ``(1 + (1-p)^2)^2 - 1``.  The environment-side
    rational part ``q0^2 + 12 q0 q1 + 25 q1^2 - 1`` simplifies to
    ``6 q0 q1 + 16 q1^2`` using ``q0 + 3 q1 = 1``; the constant ``-1`` was
    certified against finite differences of the actual output entropy.
    """
    q0, q1 = 1 - 3 * p / 4, p / 4
    out = (1 + (1 - p) ** 2) ** 2 - 1
    env = (
        q0 ** 2 + 12 * q0 * q1 + 25 * q1 ** 2 - 1
        + 4 * q0 * q1 * (q0 ** 2 + 7 * q0 * q1 + 5 * q1 ** 2)
        / ((1 - p) * (q0 + q1)) * math.log(q0 / q1)
    )
    return out, env


def test_family_requires_traceless_directions():
    base = DensityMatrix.maximally_mixed(2)
    with pytest.raises(ValueError):
        PerturbationFamily.build(base, HermitianOperator.from_matrix(np.diag([1.0, 0.0])))


def test_family_dimension_mismatch():
    base = DensityMatrix.maximally_mixed(2)
    with pytest.raises(ValueError):
        PerturbationFamily.build(base, HermitianOperator.zero(3))


def test_family_max_order_one_rejects_second_direction():
    base = DensityMatrix.maximally_mixed(2)
    a = HermitianOperator.from_matrix(np.diag([0.1, -0.1]))
    with pytest.raises(ValueError):
        PerturbationFamily.build(base, a, a, max_order=1)


def test_admissible_radius_zero_directions():
    fam = PerturbationFamily.build(DensityMatrix.maximally_mixed(2), HermitianOperator.zero(2))
    assert admissible_radius(fam) == 1.0


def test_admissible_radius_qubit_flip_family():
    # rho(eps) = diag(1 - eps, eps) stays a state on all of [0, 1]
    assert admissible_radius(qubit_flip_family()) == 1.0


def test_admissible_radius_two_qubit_tilt():
    assert admissible_radius(two_qubit_tilt_family()) == 1.0


def test_admissible_radius_platypus_family():
    a = 0.99
    fam = platypus_ad_family(0.3, a)
    assert admissible_radius(fam) == pytest.approx(math.sqrt(1 - a * a), abs=1e-4)


def test_admissible_radius_zero_when_direction_breaks_immediately():
    base = DensityMatrix.pure([1.0, 0.0])
    a1 = HermitianOperator.from_matrix(np.diag([2.0, -2.0]))
    fam = PerturbationFamily.build(base, a1)
    assert admissible_radius(fam) == 0.0


def test_state_at_base_and_diagonal():
    fam = qubit_flip_family()
    assert np.allclose(state_at(fam, 0.0).matrix, np.diag([1.0, 0.0]))
    assert np.allclose(state_at(fam, 0.3).matrix, np.diag([0.7, 0.3]))


def test_state_at_out_of_range():
    fam = qubit_flip_family()
    with pytest.raises(ValueError):
        state_at(fam, -0.1)
    with pytest.raises(PositivityError):
        state_at(fam, 1.2)


def test_state_at_matches_hand_assembled_matrix():
    w, a = 0.3, 0.99
    fam = platypus_ad_family(w, a)
    eps = 0.05
    expected = np.zeros((6, 6), dtype=complex)
    expected[0, 0] = 1 - w
    expected[4, 4] = w - eps * eps * w
    expected[3, 3] = eps * eps * w
    expected[3, 4] = expected[4, 3] = eps * w * a
    assert np.linalg.norm(state_at(fam, eps).matrix - expected) < 1e-12


def test_w_trace_zero_direction():
    dec = spectral_decompose(np.diag([0.6, 0.4]))
    assert w_trace(dec, np.zeros((2, 2))) == 0.0


@pytest.mark.parametrize("p", [0.10, 0.20])
def test_w_trace_closed_forms(p):
    tw_out, tw_env = depolarizing_pair_w_traces(p)
    cf_out, cf_env = closed_form_w_traces(p)
    assert abs(tw_out - cf_out) <= 1e-10 * abs(cf_out)
    assert abs(tw_env - cf_env) <= 1e-10 * abs(cf_env)


def test_w_trace_matches_entropy_curvature_oracle():
    # independent check: -w_trace is the second derivative of the natural-log
    # entropy of the channel output along the family
    p = 0.2
    fam = two_qubit_tilt_family()
    joint = tensor(depolarizing_channel(p), depolarizing_channel(p))
    comp = complement(joint)

    def env_entropy_nats(eps):
        w = np.linalg.eigvalsh(apply_matrix(comp, fam.matrix_at(eps)))
        w = w[w > 1e-15]
        return float(-(w * np.log(w)).sum())

    h = 1e-3
    fd = (env_entropy_nats(2 * h) - 2 * env_entropy_nats(h) + env_entropy_nats(0.0)) / h**2
    _, tw_env = depolarizing_pair_w_traces(p)
    assert -fd == pytest.approx(tw_env, rel=2e-3)


def test_w_trace_rejects_kernel():
    dec = spectral_decompose(np.diag([1.0, 0.0]))
    with pytest.raises(RankCaseError):
        w_trace(dec, np.zeros((2, 2)))


def test_w_trace_invariant_under_recluster_of_degenerate_spectrum(rng):
    d = np.diag([0.5, 0.25, 0.25])
    b = random_traceless(rng, 3).matrix
    base = w_trace(spectral_decompose(d, cluster_tol=1e-9), b)
    wide = w_trace(spectral_decompose(d, cluster_tol=1e-8), b)
    assert abs(base - wide) < 1e-9


def test_w_traces_basis_covariant(rng):
    d = np.diag([0.5, 0.3, 0.2])
    b = random_traceless(rng, 3).matrix
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    plain = w_trace(spectral_decompose(d), b)
    rotated = w_trace(spectral_decompose(q @ d @ q.conj().T), q @ b @ q.conj().T)
    assert abs(plain - rotated) < 1e-10

    d0 = np.diag([0.7, 0.3, 0.0])
    b2 = random_traceless(rng, 3).matrix
    plain0 = w0_trace(spectral_decompose(d0), b, b2)
    rotated0 = w0_trace(
        spectral_decompose(q @ d0 @ q.conj().T), q @ b @ q.conj().T, q @ b2 @ q.conj().T
    )
    assert abs(plain0 - rotated0) < 1e-10


def test_w0_trace_zero_directions():
    dec = spectral_decompose(np.diag([1.0, 0.0]))
    assert w0_trace(dec, np.zeros((2, 2)), np.zeros((2, 2))) == 0.0


def platypus_damping_setup(s, w, gamma, a):
    joint = tensor(platypus_channel(s), amplitude_damping_channel(gamma))
    fam = platypus_ad_family(w, a)
    comp = complement(joint)
    out_dec = spectral_decompose(apply_matrix(joint, fam.base.matrix))
    env_dec = spectral_decompose(apply_matrix(comp, fam.base.matrix))
    out = w0_trace(out_dec, apply_matrix(joint, fam.a1.matrix), apply_matrix(joint, fam.a2.matrix))
    env = w0_trace(env_dec, apply_matrix(comp, fam.a1.matrix), apply_matrix(comp, fam.a2.matrix))
    return out, env


def test_w0_trace_closed_forms():
    s, w, gamma, a = 0.2, 0.3, 0.5, 0.99
    out, env = platypus_damping_setup(s, w, gamma, a)
    expected_env = w * gamma - w * w * a * a * gamma / ((1 - s) * (1 - w) + w)
    assert out == pytest.approx(w * (1 - gamma), abs=1e-12)
    assert env == pytest.approx(expected_env, abs=1e-12)


def test_w0_trace_rejects_full_rank():
    dec = spectral_decompose(np.diag([0.6, 0.4]))
    with pytest.raises(RankCaseError):
        w0_trace(dec, np.zeros((2, 2)), np.zeros((2, 2)))


def test_sum_rules(rng):
    for _ in range(10):
        h = random_density(rng, 4).matrix
        a = random_traceless(rng, 4).matrix
        dec = spectral_decompose(h)
        first = sum(np.trace(p.matrix @ a).real for p in dec.projectors)
        assert abs(first) < 1e-10
        second = 0.0
        for i, p in enumerate(dec.projectors):
            c_i = reduced_resolvent(dec, i).matrix
            second += np.trace(p.matrix @ a @ c_i @ a).real
        assert abs(second) < 1e-9


def test_derivative_profile_identity_channel_full_rank():
    rho = DensityMatrix.from_matrix(np.diag([0.7, 0.3]))
    a1 = HermitianOperator.from_matrix(np.diag([-0.1, 0.1]))
    fam = PerturbationFamily.build(rho, a1)
    profile = derivative_profile(identity_channel(2), fam)
    assert profile.rank_case == "both_full"
    expected = -np.trace(a1.matrix @ np.diag(np.log2([0.7, 0.3]))).real
    assert profile.fprime0 == pytest.approx(expected, abs=1e-10)
    fd_first, _ = fd_derivatives(identity_channel(2), fam)
    assert fd_first == pytest.approx(expected, rel=1e-6, abs=1e-8)


def test_derivative_profile_two_qubit_tilt():
    p = 0.2
    joint = tensor(depolarizing_channel(p), depolarizing_channel(p))
    fam = two_qubit_tilt_family()
    profile = derivative_profile(joint, fam)
    assert profile.rank_case == "both_full"
    assert profile.fprime0 == pytest.approx(0.0, abs=1e-10)
    tw_out, tw_env = depolarizing_pair_w_traces(p)
    assert profile.fsecond0 == pytest.approx((tw_env - tw_out) / math.log(2), abs=1e-10)
    assert profile.fsecond0 < 0


def test_derivative_profile_flip_family_is_one_deficient():
    p = 0.1
    profile = derivative_profile(depolarizing_channel(p), qubit_flip_family())
    assert profile.rank_case == "one_deficient"
    assert profile.fprime0 == NEGATIVE_INFINITY
    assert profile.fprime0_divergence == "log"
    assert profile.leading_terms["kernel_trace_out"] == pytest.approx(0.0, abs=1e-12)
    expected = p * (3 - 2 * p) / (2 - p)
    assert profile.leading_terms["kernel_trace_env"] == pytest.approx(expected, abs=1e-12)


def test_derivative_profile_second_order_markers():
    s, w, gamma, a = 0.2, 0.3, 0.5, 0.99
    joint = tensor(platypus_channel(s), amplitude_damping_channel(gamma))
    fam = platypus_ad_family(w, a)
    profile = derivative_profile(joint, fam)
    assert profile.rank_case == "both_deficient"
    assert profile.fprime0 == 0.0
    assert profile.fsecond0 == "+inf"
    assert profile.fsecond0_divergence == "log"


def test_f_eval_zero_at_origin():
    fam = two_qubit_tilt_family()
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    assert f_eval(joint, fam, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_f_eval_two_qubit_tilt_is_negative():
    # consistent with the negative second derivative of this family
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    fam = two_qubit_tilt_family()
    assert f_eval(joint, fam, 0.05) < 0.0


def test_f_eval_flip_family_signs():
    fam = qubit_flip_family()
    assert f_eval(depolarizing_channel(0.2), fam, 1e-3) < 0.0
    # at p = 0.1 the log divergence only wins at much smaller eps
    assert f_eval(depolarizing_channel(0.1), fam, 1e-3) > 0.0
    assert f_eval(depolarizing_channel(0.1), fam, 1e-7) < 0.0


def test_f_eval_platypus_family_positive():
    joint = tensor(platypus_channel(0.2), amplitude_damping_channel(0.5))
    fam = platypus_ad_family(0.3, 0.99)
    assert f_eval(joint, fam, 0.01) > 0.0


def test_fd_derivatives_zero_family():
    fam = PerturbationFamily.build(DensityMatrix.maximally_mixed(2), HermitianOperator.zero(2))
    first, second = fd_derivatives(depolarizing_channel(0.2), fam)
    assert first == pytest.approx(0.0, abs=1e-10)
    assert second == pytest.approx(0.0, abs=1e-8)


def test_fd_derivatives_match_profile_on_tilt_family():
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    fam = two_qubit_tilt_family()
    profile = derivative_profile(joint, fam)
    first, second = fd_derivatives(joint, fam)
    assert abs(first) < 1e-6
    assert second == pytest.approx(profile.fsecond0, rel=1e-4)


def test_fd_derivatives_flag_log_divergence():
    first, _ = fd_derivatives(depolarizing_channel(0.1), qubit_flip_family())
    assert first == DIVERGENT


def test_fd_derivatives_random_full_rank_agreement(rng):
    hits = 0
    while hits < 3:
        ch = random_channel(rng, 2, 2, 2)
        rho = random_density(rng, 2)
        direction = random_traceless(rng, 2)
        floor = float(np.linalg.eigvalsh(rho.matrix)[0])
        spread = float(np.abs(np.linalg.eigvalsh(direction.matrix)).max())
        a1 = HermitianOperator.from_matrix(direction.matrix * (floor / spread) * 0.5)
        fam = PerturbationFamily.build(rho, a1)
        profile = derivative_profile(ch, fam)
        if profile.rank_case != "both_full":
            continue
        hits += 1
        first, second = fd_derivatives(ch, fam)
        assert first == pytest.approx(profile.fprime0, rel=1e-4, abs=1e-8)
        assert second == pytest.approx(profile.fsecond0, rel=1e-4, abs=1e-7)


def test_fd_derivatives_rejects_non_halving_steps():
    fam = qubit_flip_family()
    with pytest.raises(ValueError):
        fd_derivatives(depolarizing_channel(0.1), fam, steps=[1e-2, 4e-3, 2e-3, 1e-3])


def test_line_between_matches_segment():
    base = DensityMatrix.maximally_mixed(2)
    target = DensityMatrix.pure([1.0, 0.0])
    fam = line_between(base, target)
    eps = 0.4
    expected = (1 - eps) * base.matrix + eps * target.matrix
    assert np.linalg.norm(state_at(fam, eps).matrix - expected) < 1e-12


def test_derivative_profile_finite_on_support_confined_direction():
    # rank-deficient output whose kernel block stays zero: the first
    # derivative is finite and set by the positive part of the spectrum
    base = DensityMatrix.from_matrix(np.diag([0.6, 0.4, 0.0]))
    a1 = np.zeros((3, 3), dtype=complex)
    a1[0, 0], a1[1, 1] = -0.1, 0.1
    a1[0, 1] = a1[1, 0] = 0.05
    fam = PerturbationFamily.build(base, HermitianOperator.from_matrix(a1))
    ch = identity_channel(3)
    profile = derivative_profile(ch, fam)
    assert profile.rank_case == "one_deficient"
    assert isinstance(profile.fprime0, float)
    first, _ = fd_derivatives(ch, fam)
    assert first == pytest.approx(profile.fprime0, rel=1e-6)


def test_derivative_profile_kernel_touching_direction_diverges():
    base = DensityMatrix.from_matrix(np.diag([0.6, 0.4, 0.0]))
    a1 = np.zeros((3, 3), dtype=complex)
    a1[0, 0], a1[2, 2] = -0.1, 0.1
    fam = PerturbationFamily.build(base, HermitianOperator.from_matrix(a1))
    profile = derivative_profile(identity_channel(3), fam)
    assert profile.fprime0 == "+inf"
    assert profile.fprime0_divergence == "log"
