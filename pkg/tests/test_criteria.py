import numpy as np
import pytest

from cohpert import (
    DensityMatrix,
    complement as complement_channel,
    HermitianOperator,
    NoSignChangeError,
    PerturbationFamily,
    RankCaseError,
    amplitude_damping_channel,
    check_criterion1,
    check_criterion2,
    check_criterion3,
    classify_first_order,
    depolarizing_channel,
    dephrasure_channel,
    detect_private_gap,
    detect_private_gap_via_complement,
    detect_superadditivity,
    f_eval,
    identity_channel,
    line_between,
    optimal_line_search,
    platypus_channel,
    tensor,
    threshold_scan,
)
from cohpert.criteria import default_witness_grid
from cohpert.scenarios import platypus_ad_family, qubit_flip_family, two_qubit_tilt_family
from conftest import random_traceless


def platypus_damping_pair(s=0.2, gamma=0.5):
    return platypus_channel(s), amplitude_damping_channel(gamma)


# --- criterion 1 -----------------------------------------------------------


@pytest.mark.parametrize("p", [0.05, 0.1, 0.2])
def test_criterion1_negative_sense_fires_on_flip_family(p):
    report = check_criterion1(depolarizing_channel(p), qubit_flip_family(), "negative_f")
    assert report.fires
    assert report.rhs == pytest.approx(0.0, abs=1e-12)
    assert report.lhs == pytest.approx(p * (3 - 2 * p) / (2 - p), abs=1e-12)


def test_criterion1_positive_sense_fails_on_flip_family():
    report = check_criterion1(depolarizing_channel(0.1), qubit_flip_family(), "positive_f")
    assert report.verdict == "fails"
    assert report.margin < 0


def test_criterion1_inapplicable_when_both_full_rank():
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    report = check_criterion1(joint, two_qubit_tilt_family())
    assert report.verdict == "inapplicable"


def test_criterion1_sense_duality():
    ch = depolarizing_channel(0.1)
    fam = qubit_flip_family()
    pos = check_criterion1(ch, fam, "positive_f")
    neg = check_criterion1(ch, fam, "negative_f")
    assert pos.margin == -neg.margin


# --- criterion 2 -----------------------------------------------------------


def test_criterion2_fires_with_closed_form_sides():
    s, w, gamma, a = 0.2, 0.3, 0.5, 0.99
    joint = tensor(*platypus_damping_pair(s, gamma))
    report = check_criterion2(joint, platypus_ad_family(w, a), "positive_f")
    assert report.fires
    assert report.lhs == pytest.approx(w * (1 - gamma), abs=1e-12)
    expected_rhs = w * gamma - w * w * a * a * gamma / ((1 - s) * (1 - w) + w)
    assert report.rhs == pytest.approx(expected_rhs, abs=1e-12)


def test_criterion2_fails_beyond_damping_boundary():
    s, w, a = 0.2, 0.3, 0.99
    boundary = (1 - s + s * w) / (2 - 2 * s - w + 2 * s * w)
    gamma = 0.999 * boundary + 0.01
    joint = tensor(*platypus_damping_pair(s, gamma))
    report = check_criterion2(joint, platypus_ad_family(w, a), "positive_f")
    assert report.verdict == "fails"
    assert report.margin < 0


def test_criterion2_zero_perturbation_fails():
    joint = tensor(*platypus_damping_pair())
    base = platypus_ad_family(0.3).base
    fam = PerturbationFamily.build(base, HermitianOperator.zero(6))
    report = check_criterion2(joint, fam)
    assert report.verdict == "fails"
    assert report.margin == pytest.approx(0.0, abs=1e-12)


def test_criterion2_detects_first_order_violation():
    joint = tensor(*platypus_damping_pair())
    fam = platypus_ad_family(0.3, 0.99)
    # the population mover alone has nonzero cluster traces at first order
    violating = PerturbationFamily.build(fam.base, fam.a2)
    report = check_criterion2(joint, violating)
    assert report.verdict == "fails"
    assert any("first_order" in w for w in report.warnings)
    assert report.first_order_checks


def test_criterion2_inapplicable_when_both_full_rank():
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    report = check_criterion2(joint, two_qubit_tilt_family())
    assert report.verdict == "inapplicable"


# --- criterion 3 -----------------------------------------------------------


@pytest.mark.parametrize("p", [0.1, 0.146, 0.2, 0.2524])
def test_criterion3_fails_for_depolarizing_pair_tilt(p):
    # the environment-side trace never overtakes the output side for this family
    joint = tensor(depolarizing_channel(p), depolarizing_channel(p))
    report = check_criterion3(joint, two_qubit_tilt_family())
    assert report.criterion == "C3"
    assert report.verdict == "fails"
    assert report.margin < 0


def test_criterion3_fires_for_noisy_depolarizing():
    # beyond the hashing point the maximally mixed state is suboptimal, and
    # tilting toward a pure state raises coherent information at second order
    ch = depolarizing_channel(0.9)
    fam = line_between(DensityMatrix.maximally_mixed(2), DensityMatrix.pure([1.0, 0.0]))
    report = check_criterion3(ch, fam)
    assert report.fires
    # soundness: a positive witness must exist on the default grid
    grid = default_witness_grid(1.0)
    assert max(f_eval(ch, fam, eps) for eps in grid) > 0


def test_criterion3_inapplicable_on_rank_deficient_case():
    report = check_criterion3(depolarizing_channel(0.1), qubit_flip_family())
    assert report.verdict == "inapplicable"


def test_criterion3_zero_perturbation_fails():
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    fam = PerturbationFamily.build(DensityMatrix.maximally_mixed(4), HermitianOperator.zero(4))
    report = check_criterion3(joint, fam)
    assert report.verdict == "fails"
    assert report.margin == pytest.approx(0.0, abs=1e-12)


def test_criterion3_first_order_mismatch_fails():
    # a diagonal shift through amplitude damping moves the two log traces differently
    ch = amplitude_damping_channel(0.3)
    rho = DensityMatrix.from_matrix(np.diag([0.6, 0.4]))
    a1 = HermitianOperator.from_matrix(np.diag([0.1, -0.1]))
    report = check_criterion3(ch, PerturbationFamily.build(rho, a1))
    assert report.verdict == "fails"
    assert any("first_order" in w for w in report.warnings)


def test_criterion3_labels_second_order_log_terms():
    ch = amplitude_damping_channel(0.3)
    rho = DensityMatrix.from_matrix(np.diag([0.6, 0.4]))
    a2 = HermitianOperator.from_matrix(np.diag([0.1, -0.1]))
    fam = PerturbationFamily.build(rho, HermitianOperator.zero(2), a2)
    report = check_criterion3(ch, fam)
    assert report.criterion == "THM2_FULL2"


def test_criterion3_sense_duality():
    joint = tensor(depolarizing_channel(0.2), depolarizing_channel(0.2))
    fam = two_qubit_tilt_family()
    pos = check_criterion3(joint, fam, "positive_f")
    neg = check_criterion3(joint, fam, "negative_f")
    assert pos.margin == -neg.margin
    assert neg.fires  # the negative sense of this family genuinely fires
    assert f_eval(joint, fam, 0.05) < 0


# --- first-order classification ---------------------------------------------


def test_classify_first_order_zero_direction():
    fam = PerturbationFamily.build(DensityMatrix.maximally_mixed(2), HermitianOperator.zero(2))
    report = classify_first_order(depolarizing_channel(0.2), fam)
    assert report.verdict == "fails"
    assert report.margin == pytest.approx(0.0, abs=1e-12)


def test_classify_first_order_fires_on_entropy_increase():
    rho = DensityMatrix.from_matrix(np.diag([0.9, 0.1]))
    a1 = HermitianOperator.from_matrix(np.diag([-0.05, 0.05]))
    fam = PerturbationFamily.build(rho, a1)
    report = classify_first_order(identity_channel(2), fam)
    assert report.fires
    assert f_eval(identity_channel(2), fam, 0.01) > 0


def test_classify_first_order_never_fires_at_product_optimum(rng):
    ch = depolarizing_channel(0.2)
    joint = tensor(ch, ch)
    base = DensityMatrix.maximally_mixed(4)
    for _ in range(20):
        fam = PerturbationFamily.build(base, random_traceless(rng, 4, scale=0.05))
        report = classify_first_order(joint, fam)
        assert report.margin <= 1e-9


def test_classify_first_order_wrong_rank_case():
    with pytest.raises(RankCaseError):
        classify_first_order(depolarizing_channel(0.1), qubit_flip_family())


# --- detectors ---------------------------------------------------------------


def test_detect_superadditivity_platypus_damping():
    s, gamma, w = 0.2, 0.5, 0.3
    plat, damp = platypus_damping_pair(s, gamma)
    state1 = DensityMatrix.from_matrix(np.diag([1 - w, 0.0, w]))
    state2 = DensityMatrix.pure([1.0, 0.0])
    report = detect_superadditivity([plat, damp], [state1, state2], platypus_ad_family(w, 0.99))
    assert report.conclusion == "superadditive"
    assert report.criterion_report.criterion == "C2"
    eps, value = report.numeric_confirmation
    assert value > 1e-8
    assert report.inequality["joint_coherent_information_at_witness"] > (
        report.inequality["sum_of_single_channel_coherent_information"]
    )


def test_detect_superadditivity_depolarizing_pair_is_inconclusive():
    # no positive witness exists anywhere in this family's admissible range
    ch = depolarizing_channel(0.2)
    mixed = DensityMatrix.maximally_mixed(2)
    report = detect_superadditivity([ch, ch], [mixed, mixed], two_qubit_tilt_family())
    assert report.conclusion == "inconclusive"
    assert report.numeric_confirmation is None


def test_detect_superadditivity_base_mismatch():
    ch = depolarizing_channel(0.2)
    wrong = DensityMatrix.pure([1.0, 0.0])
    with pytest.raises(ValueError):
        detect_superadditivity([ch, ch], [wrong, wrong], two_qubit_tilt_family())


@pytest.mark.parametrize("p", [0.1, 0.2])
def test_detect_private_gap_depolarizing(p):
    report = detect_private_gap(
        depolarizing_channel(p), DensityMatrix.maximally_mixed(2), qubit_flip_family()
    )
    assert report.conclusion == "gap_detected"
    assert report.admissible_r == pytest.approx(0.5, abs=2e-6)
    eps, value = report.numeric_confirmation
    assert value < -1e-8
    assert any("private capacity of the complement" in note for note in report.notes)


def test_detect_private_gap_requires_pure_base():
    fam = PerturbationFamily.build(
        DensityMatrix.maximally_mixed(2), HermitianOperator.zero(2)
    )
    with pytest.raises(ValueError):
        detect_private_gap(depolarizing_channel(0.1), DensityMatrix.maximally_mixed(2), fam)


def test_detect_private_gap_via_complement_dephrasure_inside_region():
    ch = dephrasure_channel(0.1, 0.3)
    sigma, primary = optimal_line_search(ch, "ad_diagonal")
    assert primary.value > 0
    report = detect_private_gap_via_complement(ch, sigma)
    assert report.conclusion == "gap_detected"
    assert report.criterion_report.lhs > 0
    assert report.admissible_r > 0


def test_detect_private_gap_via_complement_outside_region():
    q = (1 - 0.2) ** 2 / (1 + (1 - 0.2) ** 2) + 0.02
    ch = dephrasure_channel(0.1, q)
    sigma, primary = optimal_line_search(ch, "ad_diagonal")
    assert primary.value <= 1e-6
    report = detect_private_gap_via_complement(ch, sigma)
    assert report.conclusion == "inconclusive"


def test_detector_reports_deterministic():
    ch = depolarizing_channel(0.1)
    sigma = DensityMatrix.maximally_mixed(2)
    a = detect_private_gap(ch, sigma, qubit_flip_family()).to_json()
    b = detect_private_gap(ch, sigma, qubit_flip_family()).to_json()
    assert a == b


# --- threshold scans ---------------------------------------------------------


def test_threshold_scan_hashing_zero_crossing():
    root = threshold_scan(depolarizing_channel, None, "hashing", "positive_f", 0.2, 0.3)
    assert root == pytest.approx(0.25239, abs=2e-4)


def test_threshold_scan_requires_sign_change():
    with pytest.raises(NoSignChangeError):
        threshold_scan(depolarizing_channel, None, "hashing", "positive_f", 0.01, 0.1)


def test_threshold_scan_criterion3_margin_has_no_root_below_hashing_point():
    fam = two_qubit_tilt_family()
    with pytest.raises(NoSignChangeError):
        threshold_scan(
            lambda p: tensor(depolarizing_channel(p), depolarizing_channel(p)),
            lambda p: fam,
            "C3",
            "positive_f",
            0.05,
            0.25,
        )


def test_threshold_scan_unknown_criterion():
    with pytest.raises(ValueError):
        threshold_scan(depolarizing_channel, None, "C9", "positive_f", 0.1, 0.2)


def test_criterion1_positive_sense_fires_on_complement_channel():
    # swapping primary and complement roles puts the kernel on the output side
    ch = complement_channel(depolarizing_channel(0.1))
    fam = qubit_flip_family()
    report = check_criterion1(ch, fam, "positive_f")
    assert report.fires
    assert report.lhs == pytest.approx(0.1 * (3 - 0.2) / 1.9, abs=1e-12)
    # soundness: a positive witness exists on the fine default grid
    grid = default_witness_grid(0.25, lo=1e-8, points=40)
    assert max(f_eval(ch, fam, eps) for eps in grid) > 1e-8


def test_run_custom_tensor_spec_round_trip():
    from cohpert import run_custom
    from cohpert.channels import matrix_to_pairs
    from cohpert.scenarios import two_qubit_tilt_family

    fam = two_qubit_tilt_family()
    channel_json = {
        "family": "tensor",
        "params": {},
        "children": [
            {"family": "depolarizing", "params": {"p": 0.2}},
            {"family": "depolarizing", "params": {"p": 0.2}},
        ],
    }
    family_json = {
        "base": matrix_to_pairs(fam.base.matrix),
        "a1": matrix_to_pairs(fam.a1.matrix),
        "a2": None,
        "max_order": 2,
    }
    report = run_custom(channel_json, family_json, "C3", "positive_f")
    assert report.verdict == "fails"
    assert report.margin < 0


def test_criterion_report_json_schema():
    report = check_criterion1(depolarizing_channel(0.1), qubit_flip_family(), "negative_f")
    body = report.to_json()
    assert set(body) == {
        "criterion", "sense", "verdict", "lhs", "rhs", "margin",
        "first_order_checks", "warnings",
    }
    assert body["criterion"] == "C1"
    assert body["verdict"] == "fires"


def test_detector_report_json_schema():
    report = detect_private_gap(
        depolarizing_channel(0.1), DensityMatrix.maximally_mixed(2), qubit_flip_family()
    )
    body = report.to_json()
    assert set(body) == {
        "kind", "channels", "base_states", "criterion", "witness",
        "conclusion", "admissible_r", "inequality", "notes",
    }
    assert body["witness"] is not None and body["witness"]["f"] < 0
    assert body["channels"][0]["family"] == "depolarizing"


@pytest.mark.parametrize(
    "s,w,gamma,a",
    [(0.35, 0.2, 0.55, 0.95), (0.5, 0.45, 0.5, 0.999)],
)
def test_criterion2_closed_forms_generalize(s, w, gamma, a):
    joint = tensor(platypus_channel(s), amplitude_damping_channel(gamma))
    report = check_criterion2(joint, platypus_ad_family(w, a), "positive_f")
    assert report.lhs == pytest.approx(w * (1 - gamma), abs=1e-12)
    expected_rhs = w * gamma - w * w * a * a * gamma / ((1 - s) * (1 - w) + w)
    assert report.rhs == pytest.approx(expected_rhs, abs=1e-12)


def test_criterion2_negative_sense_fires_beyond_boundary():
    s, w, a = 0.2, 0.3, 0.99
    boundary = 1.0 / (2.0 - w * a * a / ((1 - s) * (1 - w) + w))
    gamma = boundary + 0.05
    joint = tensor(platypus_channel(s), amplitude_damping_channel(gamma))
    fam = platypus_ad_family(w, a)
    report = check_criterion2(joint, fam, "negative_f")
    assert report.fires
    # soundness: a negative value of f exists
    grid = np.geomspace(1e-4, 0.14, 30)
    assert min(f_eval(joint, fam, eps) for eps in grid) < -1e-8


def test_criterion1_soundness_on_random_pure_lines(rng):
    from conftest import random_channel, random_pure

    fired = confirmed = 0
    for _ in range(40):
        d = int(rng.integers(2, 4))
        ch = random_channel(rng, d, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
        fam = line_between(random_pure(rng, d), random_pure(rng, d))
        for sense, sign in (("positive_f", 1.0), ("negative_f", -1.0)):
            report = check_criterion1(ch, fam, sense)
            if report.verdict != "fires" or report.margin < 1e-3:
                continue
            fired += 1
            grid = np.geomspace(1e-8, 0.5, 45)
            if max(sign * f_eval(ch, fam, eps) for eps in grid) > 1e-8:
                confirmed += 1
    assert fired >= 10
    assert confirmed == fired


def test_detect_superadditivity_three_channels():
    # the detector extends to any number of channels; a third factor held at
    # a zero-capacity state leaves the witness intact (additivity on products)
    s, gamma1, gamma2, w, a = 0.2, 0.5, 0.6, 0.3, 0.99
    channels = [
        platypus_channel(s),
        amplitude_damping_channel(gamma1),
        amplitude_damping_channel(gamma2),
    ]
    zero = np.zeros((2, 2), dtype=complex)
    zero[0, 0] = 1.0
    fam6 = platypus_ad_family(w, a)
    fam = PerturbationFamily.build(
        DensityMatrix.from_matrix(np.kron(fam6.base.matrix, zero)),
        HermitianOperator.from_matrix(np.kron(fam6.a1.matrix, zero)),
        HermitianOperator.from_matrix(np.kron(fam6.a2.matrix, zero)),
    )
    states = [
        DensityMatrix.from_matrix(np.diag([1 - w, 0, w]).astype(complex)),
        DensityMatrix.pure([1.0, 0.0]),
        DensityMatrix.pure([1.0, 0.0]),
    ]
    report = detect_superadditivity(channels, states, fam)
    assert report.conclusion == "superadditive"
    assert report.criterion_report.criterion == "C2"
