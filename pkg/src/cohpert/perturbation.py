"""Degenerate-eigenvalue perturbation machinery for channel outputs.

Given a base state ``rho`` perturbed along traceless Hermitian directions,
``rho(eps) = rho + eps A1 + eps^2 A2``, this module computes the spectral
quantities that control the first and second derivatives of the output
entropies, classifies the full-rank / rank-deficient cases, and provides
exact ``f(eps)`` evaluation plus an independent finite-difference oracle.

Internally every logarithm here is natural: the trace formulas below are
derivatives of the natural-log entropy.  Finite derivative values are
converted to bits (divide by ln 2) at the reporting boundary; divergent
cases are reported as signed-infinity markers, which no unit convention
can change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .channels import QuantumChannel, apply_matrix, complement
from .errors import RankCaseError
from .info import coherent_information
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    SpectralDecomposition,
    spectral_decompose,
)
from .tolerances import resolve

LN2 = float(np.log(2.0))

POSITIVE_INFINITY = "+inf"
NEGATIVE_INFINITY = "-inf"
DIVERGENT = "divergent"

DerivativeValue = Union[float, str, None]

DEFAULT_FD_STEPS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)

RANK_BOTH_FULL = "both_full"
RANK_ONE_DEFICIENT = "one_deficient"
RANK_BOTH_DEFICIENT = "both_deficient"

WARN_KERNEL_PSD_OUT = "kernel_block_of_output_direction_not_psd"
WARN_KERNEL_PSD_ENV = "kernel_block_of_environment_direction_not_psd"
WARN_FIRST_ORDER_CANCEL = "kernel_log_terms_cancel_with_nonzero_splitting"
WARN_SECOND_ORDER_CANCEL = "second_order_log_terms_cancel"


@dataclass(frozen=True)
class PerturbationFamily:
    """State line ``rho(eps) = rho + eps A1 + eps^2 A2``.

    ``A1`` and ``A2`` must be traceless Hermitian; ``A2`` may be zero.
    The family must admit some positive radius of valid states, which
    :func:`admissible_radius` certifies.
    """

    base: DensityMatrix
    a1: HermitianOperator
    a2: HermitianOperator
    max_order: int = 2

    @classmethod
    def build(
        cls,
        base: DensityMatrix,
        a1: HermitianOperator,
        a2: HermitianOperator | None = None,
        max_order: int = 2,
    ) -> "PerturbationFamily":
        if max_order not in (1, 2):
            raise ValueError(f"max_order must be 1 or 2, got {max_order}")
        if a2 is None:
            a2 = HermitianOperator.zero(base.dim)
        for name, op in (("a1", a1), ("a2", a2)):
            if op.dim != base.dim:
                raise ValueError(f"{name} dimension {op.dim} does not match base {base.dim}")
            if abs(op.trace()) > 1e-12:
                raise ValueError(f"{name} must be traceless, got trace {op.trace()!r}")
        if max_order == 1 and a2.fro_norm() > 0.0:
            raise ValueError("max_order=1 family cannot carry a second-order direction")
        return cls(base, a1, a2, max_order)

    def matrix_at(self, eps: float) -> np.ndarray:
        return self.base.matrix + eps * self.a1.matrix + eps * eps * self.a2.matrix


def line_between(base: DensityMatrix, target: DensityMatrix) -> PerturbationFamily:
    """First-order family along the segment from ``base`` toward ``target``."""
    direction = HermitianOperator.from_matrix(target.matrix - base.matrix)
    return PerturbationFamily.build(base, direction, None, max_order=2)


def admissible_radius(
    fam: PerturbationFamily,
    psd_tol: float | None = None,
    grid_points: int = 64,
    radius_tol: float = 1e-6,
) -> float:
    """Largest certified ``eps`` in (0, 1] keeping ``rho(eps)`` a state.

    Scans a refinement grid for the first failure of positive
    semidefiniteness, then bisects the boundary to ``radius_tol``.  Returns
    1.0 (capped) when the whole grid passes and 0.0 when even ``eps = 1e-9``
    fails.
    """

    psd_tol = resolve(psd_tol, "PSD_TOL")

    def ok(eps: float) -> bool:
        return float(np.linalg.eigvalsh(fam.matrix_at(eps))[0]) >= -psd_tol

    if not ok(1e-9):
        return 0.0
    grid = np.linspace(0.0, 1.0, grid_points + 1)[1:]
    last_good = 1e-9
    first_bad = None
    for eps in grid:
        if ok(float(eps)):
            last_good = float(eps)
        else:
            first_bad = float(eps)
            break
    if first_bad is None:
        return 1.0
    lo, hi = last_good, first_bad
    while hi - lo > radius_tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def state_at(fam: PerturbationFamily, eps: float) -> DensityMatrix:
    """The validated state ``rho(eps)``; raises when ``eps`` leaves the family."""
    if eps < 0.0:
        raise ValueError(f"eps must be non-negative, got {eps!r}")
    return DensityMatrix.from_matrix(fam.matrix_at(eps))


def _as_array(B: Union[HermitianOperator, np.ndarray]) -> np.ndarray:
    return B.matrix if isinstance(B, HermitianOperator) else np.asarray(B, dtype=complex)


def log_weighted_trace(decomp: SpectralDecomposition, B: Union[HermitianOperator, np.ndarray],
                       kernel_tol: float | None = None) -> float:
    """``tr(B ln M) = sum_i ln(lambda_i) tr(P_i B)`` for full-rank ``M``."""
    if not decomp.is_full_rank(kernel_tol):
        raise RankCaseError("log trace needs a strictly positive spectrum")
    b = _as_array(B)
    total = 0.0
    for value, proj in zip(decomp.eigenvalues, decomp.projectors):
        total += np.log(value) * float(np.trace(proj.matrix @ b).real)
    return total


def _support_log_trace(decomp: SpectralDecomposition, b: np.ndarray, kernel_tol: float) -> float:
    """Log trace restricted to the strictly positive part of the spectrum."""
    kernel = set(decomp.kernel_indices(kernel_tol))
    total = 0.0
    for i, (value, proj) in enumerate(zip(decomp.eigenvalues, decomp.projectors)):
        if i in kernel:
            continue
        total += np.log(value) * float(np.trace(proj.matrix @ b).real)
    return total


def w_trace(
    decomp: SpectralDecomposition,
    B: Union[HermitianOperator, np.ndarray],
    kernel_tol: float | None = None,
) -> float:
    """Second-derivative trace for a strictly full-rank output spectrum.

    Computes ``sum_i tr(P_i B V_i B P_i)`` with
    ``V_i = P_i / lambda_i - 2 ln(lambda_i) * sum_{j != i} (lambda_j - lambda_i)^-1 P_j``,
    where ``B`` is the channel image of the first-order direction.  The
    negative of this trace is the second derivative at 0+ of the natural-log
    output entropy when the second-order direction vanishes.
    """
    if not decomp.is_full_rank(kernel_tol):
        raise RankCaseError(
            "w_trace needs all cluster values above kernel_tol; "
            "use w0_trace for rank-deficient outputs"
        )
    b = _as_array(B)
    n = len(decomp)
    total = 0.0
    for i in range(n):
        p_i = decomp.projectors[i].matrix
        lam_i = decomp.eigenvalues[i]
        v_i = p_i / lam_i
        if n > 1:
            resolvent = np.zeros_like(p_i)
            for j in range(n):
                if j != i:
                    resolvent += decomp.projectors[j].matrix / (decomp.eigenvalues[j] - lam_i)
            v_i = v_i - 2.0 * np.log(lam_i) * resolvent
        total += float(np.trace(p_i @ b @ v_i @ b @ p_i).real)
    return total


def w0_trace(
    decomp: SpectralDecomposition,
    B1: Union[HermitianOperator, np.ndarray],
    B2: Union[HermitianOperator, np.ndarray],
    kernel_tol: float | None = None,
) -> float:
    """Second-order kernel-splitting trace for a rank-deficient output.

    Computes ``tr(P0 B2 - P0 B1 C0 B1 P0)`` with ``P0`` the kernel projector
    and ``C0 = sum_{lambda_j > 0} lambda_j^-1 P_j``: the sum of the
    second-order coefficients of the eigenvalues emerging from the kernel.
    ``B1`` and ``B2`` are the channel images of the two directions.
    """
    kernel = decomp.kernel_indices(kernel_tol)
    if not kernel:
        raise RankCaseError("w0_trace needs a kernel cluster; use w_trace for full-rank outputs")
    b1 = _as_array(B1)
    b2 = _as_array(B2)
    p0 = sum(decomp.projectors[i].matrix for i in kernel)
    c0 = np.zeros_like(p0)
    for j in range(len(decomp)):
        if j not in kernel:
            c0 += decomp.projectors[j].matrix / decomp.eigenvalues[j]
    w0 = p0 @ b1 @ c0 @ b1 @ p0
    return float(np.trace(p0 @ b2 - w0).real)


@dataclass(frozen=True)
class DerivativeProfile:
    """Classified derivative behaviour of ``f(eps)`` at ``eps = 0+``.

    ``fprime0`` and ``fsecond0`` are finite values in bits, the markers
    ``"+inf"`` / ``"-inf"``, or ``None`` when leading terms cancel and the
    limit is not resolved by this machinery.  ``leading_terms`` holds the
    natural-log traces that entered the classification.
    """

    rank_case: str
    fprime0: DerivativeValue
    fsecond0: DerivativeValue
    fprime0_divergence: str | None
    fsecond0_divergence: str | None
    leading_terms: Mapping[str, float | None]
    cluster_traces_out: tuple[float, ...]
    cluster_traces_env: tuple[float, ...]
    warnings: tuple[str, ...]


def _kernel_psd_ok(p0: np.ndarray, b1: np.ndarray, tol: float = 1e-9) -> bool:
    block = p0 @ b1 @ p0
    return float(np.linalg.eigvalsh((block + block.conj().T) / 2.0)[0]) >= -tol


def derivative_profile(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    kernel_tol: float | None = None,
    first_order_tol: float | None = None,
    decision_tol: float | None = None,
) -> DerivativeProfile:
    """Classify the rank case and assemble every derivative-controlling trace.

    The output and environment sides are treated symmetrically: a full-rank
    side contributes finite log traces and a ``w_trace``; a rank-deficient
    side contributes kernel traces whose signs decide divergence.  For the
    divergent cases the dominating term is identified (``log`` for a
    ``log(eps)`` blow-up of the derivative in question, ``inverse`` for
    ``1/eps``).
    """
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    first_order_tol = resolve(first_order_tol, "FIRST_ORDER_TOL")
    decision_tol = resolve(decision_tol, "DECISION_TOL")
    comp = complement(ch)
    out_state = apply_matrix(ch, fam.base.matrix)
    env_state = apply_matrix(comp, fam.base.matrix)
    out_a1 = apply_matrix(ch, fam.a1.matrix)
    env_a1 = apply_matrix(comp, fam.a1.matrix)
    out_a2 = apply_matrix(ch, fam.a2.matrix)
    env_a2 = apply_matrix(comp, fam.a2.matrix)

    out_dec = spectral_decompose(out_state)
    env_dec = spectral_decompose(env_state)
    out_full = out_dec.is_full_rank(kernel_tol)
    env_full = env_dec.is_full_rank(kernel_tol)
    if out_full and env_full:
        rank_case = RANK_BOTH_FULL
    elif out_full or env_full:
        rank_case = RANK_ONE_DEFICIENT
    else:
        rank_case = RANK_BOTH_DEFICIENT

    cluster_out = tuple(
        float(np.trace(p.matrix @ out_a1).real) for p in out_dec.projectors
    )
    cluster_env = tuple(
        float(np.trace(p.matrix @ env_a1).real) for p in env_dec.projectors
    )

    warnings: list[str] = []
    terms: dict[str, float | None] = {
        "kernel_trace_out": 0.0,
        "kernel_trace_env": 0.0,
        "log_trace_a1_out": None,
        "log_trace_a1_env": None,
        "log_trace_a2_out": None,
        "log_trace_a2_env": None,
        "w_out": None,
        "w_env": None,
        "w0_out": 0.0,
        "w0_env": 0.0,
    }

    if out_full:
        terms["log_trace_a1_out"] = log_weighted_trace(out_dec, out_a1, kernel_tol)
        terms["log_trace_a2_out"] = log_weighted_trace(out_dec, out_a2, kernel_tol)
        terms["w_out"] = w_trace(out_dec, out_a1, kernel_tol)
    else:
        kernel = out_dec.kernel_indices(kernel_tol)
        p0 = sum(out_dec.projectors[i].matrix for i in kernel)
        terms["kernel_trace_out"] = float(np.trace(p0 @ out_a1).real)
        terms["w0_out"] = w0_trace(out_dec, out_a1, out_a2, kernel_tol)
        if not _kernel_psd_ok(p0, out_a1):
            warnings.append(WARN_KERNEL_PSD_OUT)

    if env_full:
        terms["log_trace_a1_env"] = log_weighted_trace(env_dec, env_a1, kernel_tol)
        terms["log_trace_a2_env"] = log_weighted_trace(env_dec, env_a2, kernel_tol)
        terms["w_env"] = w_trace(env_dec, env_a1, kernel_tol)
    else:
        kernel = env_dec.kernel_indices(kernel_tol)
        p0 = sum(env_dec.projectors[i].matrix for i in kernel)
        terms["kernel_trace_env"] = float(np.trace(p0 @ env_a1).real)
        terms["w0_env"] = w0_trace(env_dec, env_a1, env_a2, kernel_tol)
        if not _kernel_psd_ok(p0, env_a1):
            warnings.append(WARN_KERNEL_PSD_ENV)

    fprime0: DerivativeValue
    fsecond0: DerivativeValue
    fprime0_div = None
    fsecond0_div = None

    if rank_case == RANK_BOTH_FULL:
        fprime0 = (-terms["log_trace_a1_out"] + terms["log_trace_a1_env"]) / LN2
        fsecond0 = (
            terms["w_env"] + 2.0 * terms["log_trace_a2_env"]
            - terms["w_out"] - 2.0 * terms["log_trace_a2_out"]
        ) / LN2
    else:
        c_out = terms["kernel_trace_out"]
        c_env = terms["kernel_trace_env"]
        gap = c_out - c_env
        if abs(gap) > first_order_tol:
            # the kernel-splitting log(eps) term dominates f'; the matching
            # 1/eps term dominates f'' with the opposite sign
            fprime0 = POSITIVE_INFINITY if gap > 0 else NEGATIVE_INFINITY
            fprime0_div = "log"
            fsecond0 = NEGATIVE_INFINITY if gap > 0 else POSITIVE_INFINITY
            fsecond0_div = "inverse"
        elif all(abs(t) <= first_order_tol for t in cluster_out + cluster_env):
            fprime0 = 0.0
            second_gap = terms["w0_out"] - terms["w0_env"]
            if abs(second_gap) > decision_tol:
                fsecond0 = POSITIVE_INFINITY if second_gap > 0 else NEGATIVE_INFINITY
                fsecond0_div = "log"
            else:
                fsecond0 = None
                warnings.append(WARN_SECOND_ORDER_CANCEL)
        elif (
            max(abs(c_out), abs(c_env)) <= first_order_tol
            and WARN_KERNEL_PSD_OUT not in warnings
            and WARN_KERNEL_PSD_ENV not in warnings
        ):
            # kernel blocks vanish at first order (a zero trace of a PSD
            # block forces the block itself to zero), so the kernel only
            # splits at second order and the first derivative is finite,
            # driven by the strictly positive part of both spectra
            t_out = _support_log_trace(out_dec, out_a1, kernel_tol)
            t_env = _support_log_trace(env_dec, env_a1, kernel_tol)
            terms["log_trace_a1_out"] = t_out
            terms["log_trace_a1_env"] = t_env
            fprime0 = (-t_out + t_env) / LN2
            fsecond0 = None
            warnings.append(WARN_SECOND_ORDER_CANCEL)
        else:
            fprime0 = None
            fsecond0 = None
            warnings.append(WARN_FIRST_ORDER_CANCEL)

    return DerivativeProfile(
        rank_case=rank_case,
        fprime0=fprime0,
        fsecond0=fsecond0,
        fprime0_divergence=fprime0_div,
        fsecond0_divergence=fsecond0_div,
        leading_terms=terms,
        cluster_traces_out=cluster_out,
        cluster_traces_env=cluster_env,
        warnings=tuple(warnings),
    )


def f_eval(ch: QuantumChannel, fam: PerturbationFamily, eps: float) -> float:
    """Exact coherent-information shift ``I_c(rho(eps)) - I_c(rho)`` in bits."""
    base = coherent_information(fam.base, ch)
    shifted = coherent_information(state_at(fam, eps), ch)
    return shifted.value - base.value


def _richardson(values: Sequence[float], order: int) -> list[float]:
    """One Richardson level for step-halving sequences with error ~ h^order."""
    factor = 2.0 ** order
    return [
        (factor * values[i + 1] - values[i]) / (factor - 1.0)
        for i in range(len(values) - 1)
    ]


def _looks_divergent(estimates: Sequence[float], abs_tol: float = 1e-7) -> bool:
    """Heuristic: differences between successive refinements must shrink.

    For a smooth limit the halving steps shrink the increments roughly
    geometrically; a ``log(eps)`` blow-up keeps them constant.
    """
    diffs = [abs(estimates[i + 1] - estimates[i]) for i in range(len(estimates) - 1)]
    if len(diffs) < 2 or diffs[-1] <= abs_tol:
        return False
    return diffs[-1] > 0.75 * diffs[-2]


def fd_derivatives(
    ch: QuantumChannel,
    fam: PerturbationFamily,
    steps: Sequence[float] = DEFAULT_FD_STEPS,
) -> tuple[DerivativeValue, DerivativeValue]:
    """One-sided finite-difference estimates of ``f'(0+)`` and ``f''(0+)`` in bits.

    Uses forward differences over a halving step sequence with two levels of
    Richardson extrapolation.  Intended for the cases with finite limits;
    when the raw estimates keep drifting (a ``log(eps)`` divergence) the
    corresponding entry is the marker ``"divergent"`` instead of a number.
    """
    steps = sorted(float(h) for h in steps)
    if len(steps) < 4:
        raise ValueError("need at least four steps for two Richardson levels")
    for small, big in zip(steps, steps[1:]):
        if abs(big / small - 2.0) > 1e-9:
            raise ValueError("steps must halve between refinements")
    steps = list(reversed(steps))  # largest first
    f_vals = {h: f_eval(ch, fam, h) for h in steps}

    first_raw = [f_vals[h] / h for h in steps]
    first: DerivativeValue
    if _looks_divergent(first_raw):
        first = DIVERGENT
    else:
        first = _richardson(_richardson(first_raw, 1), 2)[-1]

    second_raw = [
        (f_vals[big] - 2.0 * f_vals[small]) / (small * small)
        for big, small in zip(steps, steps[1:])
    ]
    second: DerivativeValue
    if _looks_divergent(second_raw):
        second = DIVERGENT
    else:
        levels = _richardson(second_raw, 1)
        if len(levels) >= 2:
            levels = _richardson(levels, 2)
        second = levels[-1]
    return first, second
