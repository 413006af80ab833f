"""Suboptimality criteria for coherent information and the two detectors
built on them: superadditivity of one-shot quantum capacity and a positive
gap between one-shot private and quantum capacity.

Each criterion compares two spectral traces; ``sense="positive_f"`` asks
whether the perturbation can raise coherent information, ``"negative_f"``
whether it can lower it (the two decisive traces simply swap roles, so the
margin flips sign exactly).  A report never concludes from the analytic
inequality alone: detectors also require a numeric witness ``f(eps)`` of
the right sign before calling the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .channels import QuantumChannel, apply_matrix, complement, tensor_all
from .errors import NoSignChangeError, RankCaseError
from .info import coherent_information, golden_section_maximize
from .linalg import DensityMatrix, psd_min_eig, spectral_decompose
from .perturbation import (
    PerturbationFamily,
    admissible_radius,
    f_eval,
    log_weighted_trace,
    state_at,
    w0_trace,
    w_trace,
)
from .tolerances import resolve

SENSES = ("positive_f", "negative_f")

WARN_FIRST_ORDER_VIOLATED = "first_order_condition_violated"
WARN_NEAR_ZERO_MARGIN = "margin_within_decision_tolerance"
WARN_NEAR_DEGENERATE = "near_degenerate_clustering"
WARN_KERNEL_PSD = "kernel_block_not_psd"


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of one criterion check.

    ``lhs`` and ``rhs`` are the two sides of the decisive inequality after
    sense adjustment, so ``margin = lhs - rhs`` and the criterion fires
    exactly when its preconditions hold and the margin clears
    ``decision_tol``.  ``first_order_checks`` records the per-cluster traces
    a second-order criterion requires to vanish.
    """

    criterion: str
    sense: str
    verdict: str
    lhs: float
    rhs: float
    margin: float
    first_order_checks: tuple[tuple[str, float], ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def fires(self) -> bool:
        return self.verdict == "fires"

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "sense": self.sense,
            "verdict": self.verdict,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "first_order_checks": [
                {"cluster": name, "trace": value} for name, value in self.first_order_checks
            ],
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class DetectorReport:
    """Conclusion of an application-level detector run.

    ``conclusion`` is only ``superadditive`` / ``gap_detected`` when the
    analytic criterion fired *and* the numeric confirmation
    ``(eps, f(eps))`` has the matching sign.
    """

    kind: str
    channels: tuple[dict, ...]
    base_states: str
    criterion_report: CriterionReport
    numeric_confirmation: tuple[float, float] | None
    conclusion: str
    admissible_r: float | None = None
    inequality: Mapping[str, float] | None = None
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "channels": list(self.channels),
            "base_states": self.base_states,
            "criterion": self.criterion_report.to_json(),
            "witness": (
                None
                if self.numeric_confirmation is None
                else {"eps": self.numeric_confirmation[0], "f": self.numeric_confirmation[1]}
            ),
            "conclusion": self.conclusion,
            "admissible_r": self.admissible_r,
            "inequality": None if self.inequality is None else dict(self.inequality),
            "notes": list(self.notes),
        }


def _check_sense(sense: str) -> None:
    if sense not in SENSES:
        raise ValueError(f"sense must be one of {SENSES}, got {sense!r}")


def _sense_adjust(out_side: float, env_side: float, sense: str) -> tuple[float, float]:
    """Order the two decisive traces so that firing always means lhs > rhs."""
    return (out_side, env_side) if sense == "positive_f" else (env_side, out_side)


@dataclass(frozen=True)
class _ChannelData:
    """Spectral data of both channel outputs for one perturbation family."""

    out_dec: object
    env_dec: object
    out_a1: np.ndarray
    env_a1: np.ndarray
    out_a2: np.ndarray
    env_a2: np.ndarray
    out_full: bool
    env_full: bool
    kernel_tol: float

    @classmethod
    def compute(cls, ch: QuantumChannel, fam: PerturbationFamily, kernel_tol: float) -> "_ChannelData":
        comp = complement(ch)
        out_dec = spectral_decompose(apply_matrix(ch, fam.base.matrix))
        env_dec = spectral_decompose(apply_matrix(comp, fam.base.matrix))
        return cls(
            out_dec=out_dec,
            env_dec=env_dec,
            out_a1=apply_matrix(ch, fam.a1.matrix),
            env_a1=apply_matrix(comp, fam.a1.matrix),
            out_a2=apply_matrix(ch, fam.a2.matrix),
            env_a2=apply_matrix(comp, fam.a2.matrix),
            out_full=out_dec.is_full_rank(kernel_tol),
            env_full=env_dec.is_full_rank(kernel_tol),
            kernel_tol=kernel_tol,
        )

    def kernel_trace(self, side: str) -> float:
        dec, a1 = (self.out_dec, self.out_a1) if side == "out" else (self.env_dec, self.env_a1)
        idx = dec.kernel_indices(self.kernel_tol)
        if not idx:
            return 0.0
        p0 = sum(dec.projectors[i].matrix for i in idx)
        return float(np.trace(p0 @ a1).real)

    def cluster_traces(self, side: str) -> tuple[tuple[str, float], ...]:
        dec, a1 = (self.out_dec, self.out_a1) if side == "out" else (self.env_dec, self.env_a1)
        return tuple(
            (f"{side}[{i}]", float(np.trace(p.matrix @ a1).real))
            for i, p in enumerate(dec.projectors)
        )

    def condition_warnings(self) -> tuple[str, ...]:
        """Numerical-trust flags: nearly merged clusters shrink resolvent
        denominators, and a non-PSD kernel block of the first-order image
        breaks the kernel-splitting analysis."""
        out: list[str] = []
        for dec in (self.out_dec, self.env_dec):
            gaps = [a - b for a, b in zip(dec.eigenvalues, dec.eigenvalues[1:])]
            if gaps and min(gaps) < 10.0 * dec.cluster_tol:
                out.append(WARN_NEAR_DEGENERATE)
                break
        for side, dec, a1, full in (
            ("out", self.out_dec, self.out_a1, self.out_full),
            ("env", self.env_dec, self.env_a1, self.env_full),
        ):
            if full:
                continue
            p0 = sum(dec.projectors[i].matrix for i in dec.kernel_indices(self.kernel_tol))
            block = p0 @ a1 @ p0
            if float(np.linalg.eigvalsh((block + block.conj().T) / 2.0)[0]) < -1e-9:
                out.append(f"{WARN_KERNEL_PSD}:{side}")
        return tuple(out)


def check_criterion1(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    sense: str = "positive_f",
    kernel_tol: float | None = None,
    decision_tol: float | None = None,
) -> CriterionReport:
    """First-order kernel-splitting test.

    Applicable when at least one channel output is rank deficient.  Compares
    the kernel traces of the first-order direction on the two sides; a
    winning output side makes the first derivative of ``f`` diverge with the
    requested sign.
    """
    _check_sense(sense)
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    decision_tol = resolve(decision_tol, "DECISION_TOL")
    data = _ChannelData.compute(ch, fam, kernel_tol)
    if data.out_full and data.env_full:
        return CriterionReport("C1", sense, "inapplicable", 0.0, 0.0, 0.0)
    lhs, rhs = _sense_adjust(data.kernel_trace("out"), data.kernel_trace("env"), sense)
    margin = lhs - rhs
    verdict = "fires" if margin > decision_tol else "fails"
    warnings = list(data.condition_warnings())
    if 0.0 < margin <= decision_tol:
        warnings.append(WARN_NEAR_ZERO_MARGIN)
    return CriterionReport("C1", sense, verdict, lhs, rhs, margin, warnings=tuple(warnings))


def check_criterion2(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    sense: str = "positive_f",
    kernel_tol: float | None = None,
    first_order_tol: float | None = None,
    decision_tol: float | None = None,
) -> CriterionReport:
    """Second-order kernel-splitting test.

    Applicable when at least one output is rank deficient.  Requires every
    per-cluster first-order trace on both sides to vanish; then compares the
    second-order kernel terms (``w0_trace``; a full-rank side contributes
    zero).
    """
    _check_sense(sense)
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    first_order_tol = resolve(first_order_tol, "FIRST_ORDER_TOL")
    decision_tol = resolve(decision_tol, "DECISION_TOL")
    data = _ChannelData.compute(ch, fam, kernel_tol)
    if data.out_full and data.env_full:
        return CriterionReport("C2", sense, "inapplicable", 0.0, 0.0, 0.0)

    checks = data.cluster_traces("out") + data.cluster_traces("env")
    offending = [name for name, value in checks if abs(value) > first_order_tol]

    out_term = 0.0 if data.out_full else w0_trace(data.out_dec, data.out_a1, data.out_a2, kernel_tol)
    env_term = 0.0 if data.env_full else w0_trace(data.env_dec, data.env_a1, data.env_a2, kernel_tol)
    lhs, rhs = _sense_adjust(out_term, env_term, sense)
    margin = lhs - rhs

    warnings = list(data.condition_warnings())
    if offending:
        warnings.append(WARN_FIRST_ORDER_VIOLATED + ":" + ",".join(offending))
        verdict = "fails"
    else:
        verdict = "fires" if margin > decision_tol else "fails"
        if 0.0 < margin <= decision_tol:
            warnings.append(WARN_NEAR_ZERO_MARGIN)
    return CriterionReport(
        "C2", sense, verdict, lhs, rhs, margin,
        first_order_checks=checks, warnings=tuple(warnings),
    )


def check_criterion3(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    sense: str = "positive_f",
    kernel_tol: float | None = None,
    first_order_tol: float | None = None,
    decision_tol: float | None = None,
) -> CriterionReport:
    """Second-order test for the case where both outputs are full rank.

    Requires the first-order log traces of the two sides to agree (which
    pins the first derivative of ``f`` to zero), then compares the full
    second-derivative combinations
    ``2 tr(M(A2) ln M(rho)) + tr(W_M)`` of the two sides.  When the
    second-order log terms are negligible this reduces to the plain
    ``tr(W)`` comparison and the report is labeled ``C3``; otherwise it is
    labeled ``THM2_FULL2``.
    """
    _check_sense(sense)
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    first_order_tol = resolve(first_order_tol, "FIRST_ORDER_TOL")
    decision_tol = resolve(decision_tol, "DECISION_TOL")
    data = _ChannelData.compute(ch, fam, kernel_tol)
    if not (data.out_full and data.env_full):
        return CriterionReport("C3", sense, "inapplicable", 0.0, 0.0, 0.0)

    t1_out = log_weighted_trace(data.out_dec, data.out_a1, kernel_tol)
    t1_env = log_weighted_trace(data.env_dec, data.env_a1, kernel_tol)
    t2_out = log_weighted_trace(data.out_dec, data.out_a2, kernel_tol)
    t2_env = log_weighted_trace(data.env_dec, data.env_a2, kernel_tol)
    w_out = w_trace(data.out_dec, data.out_a1, kernel_tol)
    w_env = w_trace(data.env_dec, data.env_a1, kernel_tol)

    label = "C3" if max(abs(t2_out), abs(t2_env)) <= first_order_tol else "THM2_FULL2"
    checks = (("out[log_a1]", t1_out), ("env[log_a1]", t1_env))

    out_side = w_out + 2.0 * t2_out
    env_side = w_env + 2.0 * t2_env
    # firing in the positive sense needs the environment side to dominate:
    # f''(0) = (env side) - (out side) in natural-log units
    lhs, rhs = _sense_adjust(env_side, out_side, sense)
    margin = lhs - rhs

    warnings = list(data.condition_warnings())
    if abs(t1_out - t1_env) > first_order_tol:
        warnings.append(WARN_FIRST_ORDER_VIOLATED + ":log_a1")
        verdict = "fails"
    else:
        verdict = "fires" if margin > decision_tol else "fails"
        if 0.0 < margin <= decision_tol:
            warnings.append(WARN_NEAR_ZERO_MARGIN)
    return CriterionReport(
        label, sense, verdict, lhs, rhs, margin,
        first_order_checks=checks, warnings=tuple(warnings),
    )


def classify_first_order(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    kernel_tol: float | None = None,
    decision_tol: float | None = None,
) -> CriterionReport:
    """Full-rank first-derivative test: fires when ``f'(0) > 0``.

    Compares the first-order log traces of the two full-rank outputs; the
    margin equals ``f'(0)`` in natural-log units.  At a tensor product of
    optimal states (with all single-channel outputs full rank) this can
    never fire: the first derivative is non-positive for every traceless
    direction.
    """
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    decision_tol = resolve(decision_tol, "DECISION_TOL")
    data = _ChannelData.compute(ch, fam, kernel_tol)
    if not (data.out_full and data.env_full):
        raise RankCaseError("first-order classification needs both outputs full rank")
    t1_out = log_weighted_trace(data.out_dec, data.out_a1, kernel_tol)
    t1_env = log_weighted_trace(data.env_dec, data.env_a1, kernel_tol)
    margin = t1_env - t1_out
    verdict = "fires" if margin > decision_tol else "fails"
    return CriterionReport("THM1_FULLRANK", "positive_f", verdict, t1_env, t1_out, margin)


_CHECKS: tuple[Callable, ...] = (check_criterion1, check_criterion2, check_criterion3)


def _run_criteria(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    sense: str,
    kernel_tol: float | None,
) -> CriterionReport:
    """Run C1 -> C2 -> C3 and return the first firing report.

    When nothing fires, the last applicable report is returned so that the
    caller still sees the decisive traces.
    """
    last_applicable: CriterionReport | None = None
    for check in _CHECKS:
        report = check(ch, fam, sense, kernel_tol=kernel_tol)
        if report.verdict == "inapplicable":
            continue
        if report.fires:
            return report
        last_applicable = report
    if last_applicable is None:  # pragma: no cover - one rank case always applies
        raise RuntimeError("no criterion was applicable")
    return last_applicable


def _channel_json(ch: QuantumChannel) -> dict:
    if ch.spec is not None:
        return ch.spec.to_json()
    return {
        "family": "custom_kraus",
        "params": {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "dim_env": ch.dim_env},
        "children": [],
    }


def default_witness_grid(radius: float, lo: float = 1e-4, points: int = 25) -> tuple[float, ...]:
    """Log-spaced epsilon grid inside the admissible radius."""
    if radius <= 0.0:
        return ()
    hi = min(radius, 1.0) * 0.999
    if hi <= lo:
        return (hi,)
    return tuple(float(x) for x in np.geomspace(lo, hi, points))


def detect_superadditivity(
    channels: Sequence[QuantumChannel],
    optimal_states: Sequence[DensityMatrix],
    fam: PerturbationFamily,
    eps_grid: Sequence[float] | None = None,
    numeric_margin: float | None = None,
    kernel_tol: float | None = None,
) -> DetectorReport:
    """Detect strict superadditivity of one-shot quantum capacity.

    ``optimal_states[i]`` is asserted by the caller to be optimal for
    ``channels[i]``; the family must perturb their tensor product.  The
    criteria run in precedence order C1 -> C2 -> C3 in the positive sense;
    a firing criterion alone is not enough, a grid point with
    ``f(eps) > numeric_margin`` bits must confirm it.  On success the
    one-shot capacity of the joint channel strictly exceeds the sum of the
    single-channel coherent informations at the asserted optimal states.
    """
    numeric_margin = resolve(numeric_margin, "NUMERIC_MARGIN")
    if len(channels) < 2 or len(channels) != len(optimal_states):
        raise ValueError("need at least two channels with one asserted optimal state each")
    product = optimal_states[0].matrix
    for state in optimal_states[1:]:
        product = np.kron(product, state.matrix)
    if np.linalg.norm(product - fam.base.matrix) > 1e-10:
        raise ValueError("family base state is not the tensor product of the optimal states")
    joint = tensor_all(list(channels))

    report = _run_criteria(joint, fam, "positive_f", kernel_tol)

    if eps_grid is None:
        eps_grid = default_witness_grid(admissible_radius(fam))
    witness = None
    notes: list[str] = []
    if eps_grid:
        values = [(eps, f_eval(joint, fam, eps)) for eps in eps_grid]
        best = max(values, key=lambda t: t[1])
        if best[1] > numeric_margin:
            witness = best
    else:
        notes.append("family admits no positive radius; no witness grid")

    sum_single = sum(
        coherent_information(state, ch).value for ch, state in zip(channels, optimal_states)
    )
    inequality = None
    if witness is not None:
        inequality = {
            "joint_coherent_information_at_witness": coherent_information(
                state_at(fam, witness[0]), joint
            ).value,
            "sum_of_single_channel_coherent_information": sum_single,
        }

    if report.fires and witness is not None:
        conclusion = "superadditive"
    else:
        conclusion = "inconclusive"
        if report.fires and witness is None:
            notes.append("criterion fired but no grid point yielded a positive witness")
        if not report.fires and witness is not None:
            notes.append("numeric witness exists but no criterion fired")

    return DetectorReport(
        kind="superadditivity",
        channels=tuple(_channel_json(ch) for ch in channels),
        base_states="tensor product of caller-asserted optimal states",
        criterion_report=report,
        numeric_confirmation=witness,
        conclusion=conclusion,
        inequality=inequality,
        notes=tuple(notes),
    )


def _largest_admissible_r(
    sigma: DensityMatrix,
    state: DensityMatrix,
    psd_tol: float | None = None,
    r_tol: float = 1e-6,
) -> float:
    """Largest ``r`` in (0, 1] with ``sigma - r * state`` PSD, by bisection."""

    psd_tol = resolve(psd_tol, "PSD_TOL")

    def ok(r: float) -> bool:
        return psd_min_eig(sigma.matrix - r * state.matrix) >= -psd_tol

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > r_tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def detect_private_gap(
    ch: QuantumChannel,
    sigma: DensityMatrix,
    fam: PerturbationFamily,
    eps_grid: Sequence[float] | None = None,
    numeric_margin: float | None = None,
    kernel_tol: float | None = None,
    psd_tol: float | None = None,
    r_tol: float = 1e-6,
) -> DetectorReport:
    """Detect a positive gap between one-shot private and quantum capacity.

    ``sigma`` is asserted by the caller to be an optimal mixed state for the
    channel; the family base must be pure.  The detector needs three pieces:
    a positive ``r`` with ``sigma - r * rho(eps)`` PSD across the witness
    grid, a negative-sense criterion firing, and a grid point with
    ``f(eps) < -numeric_margin`` bits.  A detected gap also implies the
    complementary channel has positive private capacity.
    """
    numeric_margin = resolve(numeric_margin, "NUMERIC_MARGIN")
    psd_tol = resolve(psd_tol, "PSD_TOL")
    top = float(np.linalg.eigvalsh(fam.base.matrix)[-1])
    if abs(top - 1.0) > psd_tol:
        raise ValueError(f"family base must be pure; largest eigenvalue is {top!r}")

    if eps_grid is None:
        radius = admissible_radius(fam)
        eps_grid = default_witness_grid(min(radius, 0.25), lo=1e-8, points=40)

    notes: list[str] = []
    r_bar: float | None = None
    if eps_grid:
        r_bar = min(
            _largest_admissible_r(sigma, state_at(fam, eps), psd_tol, r_tol) for eps in eps_grid
        )

    report = _run_criteria(ch, fam, "negative_f", kernel_tol)

    witness = None
    if eps_grid:
        values = [(eps, f_eval(ch, fam, eps)) for eps in eps_grid]
        best = min(values, key=lambda t: t[1])
        if best[1] < -numeric_margin:
            witness = best
    else:
        notes.append("family admits no positive radius; no witness grid")

    if r_bar is None or r_bar <= r_tol:
        conclusion = "inconclusive"
        notes.append("no admissible r > 0 keeps sigma - r * rho(eps) positive semidefinite")
    elif report.fires and witness is not None:
        conclusion = "gap_detected"
        notes.append("a positive gap also implies positive private capacity of the complement")
    else:
        conclusion = "inconclusive"
        if report.fires and witness is None:
            notes.append("criterion fired but no grid point yielded a negative witness")

    return DetectorReport(
        kind="private_gap",
        channels=(_channel_json(ch),),
        base_states="pure family base; sigma caller-asserted optimal",
        criterion_report=report,
        numeric_confirmation=witness,
        conclusion=conclusion,
        admissible_r=r_bar,
        notes=tuple(notes),
    )


def _basis_line_state(dim: int, basis: str, u: float) -> DensityMatrix:
    if basis == "z":
        vec_lo = np.zeros(dim, dtype=complex)
        vec_hi = np.zeros(dim, dtype=complex)
        vec_lo[0] = 1.0
        vec_hi[dim - 1] = 1.0
    elif basis == "x":
        if dim != 2:
            raise ValueError("x-basis line search needs a qubit input")
        vec_lo = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
        vec_hi = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
    else:
        raise ValueError(f"unknown line basis {basis!r}")
    m = (1.0 - u) * np.outer(vec_lo, vec_lo.conj()) + u * np.outer(vec_hi, vec_hi.conj())
    return DensityMatrix.from_matrix(m)


def complement_line_witness(
    ch: QuantumChannel,
    bases: Sequence[str] = ("z", "x"),
    param_tol: float = 1e-8,
) -> tuple[DensityMatrix, float, str]:
    """Best diagonal-line input for coherent information of the complement.

    Searches mixing lines between two orthogonal pure states in each listed
    basis and returns ``(state, value_bits, basis)`` for the largest
    ``I_c(state, complement(ch))`` found.
    """
    comp = complement(ch)
    best: tuple[DensityMatrix, float, str] | None = None
    for basis in bases:
        def objective(u: float, basis: str = basis) -> float:
            return coherent_information(_basis_line_state(ch.dim_in, basis, u), comp).value

        u_star, value = golden_section_maximize(objective, 0.0, 1.0, param_tol=param_tol)
        if best is None or value > best[1]:
            best = (_basis_line_state(ch.dim_in, basis, u_star), value, basis)
    assert best is not None
    return best


def detect_private_gap_via_complement(
    ch: QuantumChannel,
    sigma: DensityMatrix,
    bases: Sequence[str] = ("z", "x"),
    numeric_margin: float | None = None,
    psd_tol: float | None = None,
    r_tol: float = 1e-6,
) -> DetectorReport:
    """Shortcut gap detector through the complementary channel.

    Finds a diagonal-line state with ``I_c(rho, complement(ch)) > 0`` and an
    ``r > 0`` keeping ``sigma - r * rho`` PSD; both together imply the
    one-shot private capacity strictly exceeds the one-shot quantum
    capacity, with ``sigma`` caller-asserted optimal.
    """
    numeric_margin = resolve(numeric_margin, "NUMERIC_MARGIN")
    state, value, basis = complement_line_witness(ch, bases)
    r_bar = _largest_admissible_r(sigma, state, psd_tol, r_tol)

    # the decisive quantity doubles as a degenerate criterion report
    verdict = "fires" if value > numeric_margin else "fails"
    report = CriterionReport(
        criterion="COMPLEMENT_IC",
        sense="negative_f",
        verdict=verdict,
        lhs=value,
        rhs=0.0,
        margin=value,
    )
    notes = [f"line-search basis: {basis}"]
    if verdict == "fires" and r_bar > r_tol:
        conclusion = "gap_detected"
        notes.append("a positive gap also implies positive private capacity of the complement")
    else:
        conclusion = "inconclusive"
        if r_bar <= r_tol:
            notes.append("no admissible r > 0 keeps sigma - r * rho positive semidefinite")
    return DetectorReport(
        kind="private_gap",
        channels=(_channel_json(ch),),
        base_states="diagonal-line witness; sigma caller-asserted optimal",
        criterion_report=report,
        numeric_confirmation=(0.0, value) if verdict == "fires" else None,
        conclusion=conclusion,
        admissible_r=r_bar,
        notes=tuple(notes),
    )


_CRITERION_BY_NAME = {
    "C1": check_criterion1,
    "C2": check_criterion2,
    "C3": check_criterion3,
}


def criterion_margin(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    criterion: str,
    sense: str = "positive_f",
) -> float:
    """Margin of one named criterion for scan and root-finding use."""
    try:
        check = _CRITERION_BY_NAME[criterion]
    except KeyError:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of C1, C2, C3") from None
    return check(ch, fam, sense).margin


def threshold_scan(
    channel_builder: Callable[[float], QuantumChannel],
    family_builder: Callable[[float], PerturbationFamily] | None,
    criterion: str,
    sense: str,
    lo: float,
    hi: float,
    param_tol: float = 1e-4,
) -> float:
    """Bisect a channel parameter for the zero of a criterion margin.

    ``criterion`` is one of ``C1``, ``C2``, ``C3`` (margin of that check,
    needing ``family_builder``) or ``hashing`` (coherent information of the
    maximally mixed state, in bits).  Raises when the margin has the same
    sign at both ends of the interval.
    """
    if criterion == "hashing":
        def margin(p: float) -> float:
            ch = channel_builder(p)
            return coherent_information(DensityMatrix.maximally_mixed(ch.dim_in), ch).value
    else:
        if family_builder is None:
            raise ValueError(f"criterion {criterion!r} needs a family builder")

        def margin(p: float) -> float:
            return criterion_margin(channel_builder(p), family_builder(p), criterion, sense)

    f_lo, f_hi = margin(lo), margin(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChangeError(
            f"margin has no sign change on [{lo}, {hi}]: {f_lo:.6e} and {f_hi:.6e}"
        )
    a, b = lo, hi
    while b - a > param_tol:
        mid = 0.5 * (a + b)
        f_mid = margin(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            a, f_lo = mid, f_mid
        else:
            b = mid
    return 0.5 * (a + b)
