"""Quantum channels in Kraus form.

Construction and CPTP validation, application to states, the canonical
complementary channel, tensor products and the named channel families used
throughout the package.  Channels are immutable and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import CPTPError, DimensionError
from .linalg import DensityMatrix, _frozen
from .tolerances import TRACE_TOL, resolve

DEFAULT_DIM_CAP = 256

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

FAMILIES = (
    "depolarizing",
    "pauli",
    "amplitude_damping",
    "platypus",
    "dephrasure",
    "erasure",
    "identity",
    "custom_kraus",
    "tensor",
)


@dataclass(frozen=True)
class ChannelSpec:
    """Serializable description of a named channel.

    JSON form: ``{"family": "...", "params": {...}, "children": [...]}``.
    ``children`` is only used by the ``tensor`` family; ``custom_kraus``
    carries its matrices in ``params["kraus"]`` as nested ``[re, im]`` pairs.
    """

    family: str
    params: Mapping[str, object] = field(default_factory=dict)
    children: tuple["ChannelSpec", ...] = ()

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params),
            "children": [c.to_json() for c in self.children],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChannelSpec":
        if not isinstance(obj, Mapping):
            raise ValueError(f"channel spec must be an object, got {type(obj).__name__}")
        family = obj.get("family")
        if family not in FAMILIES:
            raise ValueError(f"unknown channel family {family!r}; expected one of {FAMILIES}")
        params = obj.get("params", {}) or {}
        children = tuple(cls.from_json(c) for c in obj.get("children", []) or [])
        return cls(family=family, params=params, children=children)


@dataclass(frozen=True)
class QuantumChannel:
    """A CPTP map given by Kraus operators ``K_k`` of shape (dim_out, dim_in).

    The number of Kraus operators fixes the environment dimension used by
    the canonical complementary channel.
    """

    kraus: tuple[np.ndarray, ...]
    dim_in: int
    dim_out: int
    dim_env: int
    spec: ChannelSpec | None = None

    def cptp_residual(self) -> float:
        acc = sum(K.conj().T @ K for K in self.kraus)
        return float(np.linalg.norm(acc - np.eye(self.dim_in)))


def make_channel(
    kraus: Sequence[np.ndarray],
    cptp_tol: float | None = None,
    spec: ChannelSpec | None = None,
) -> QuantumChannel:
    """Validate a Kraus set and wrap it as a channel.

    All operators must share one (dim_out, dim_in) shape and satisfy
    trace preservation ``sum_k K_k^dag K_k = 1`` within ``cptp_tol``.
    """
    cptp_tol = resolve(cptp_tol, "CPTP_TOL")
    ops = [np.asarray(K, dtype=complex) for K in kraus]
    if not ops:
        raise ValueError("a channel needs at least one Kraus operator")
    shape = ops[0].shape
    if len(shape) != 2:
        raise DimensionError(f"Kraus operators must be matrices, got shape {shape}")
    for K in ops:
        if K.shape != shape:
            raise DimensionError(f"Kraus shapes differ: {K.shape} vs {shape}")
    ch = QuantumChannel(
        kraus=tuple(_frozen(K) for K in ops),
        dim_in=shape[1],
        dim_out=shape[0],
        dim_env=len(ops),
        spec=spec,
    )
    residual = ch.cptp_residual()
    if residual > cptp_tol:
        raise CPTPError(
            f"Kraus set is not trace preserving: residual {residual:.3e} > {cptp_tol:.1e}"
        )
    return ch


def apply_matrix(ch: QuantumChannel, m: np.ndarray) -> np.ndarray:
    """Linear action ``sum_k K_k m K_k^dag`` on an arbitrary operator."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (ch.dim_in, ch.dim_in):
        raise DimensionError(f"operator shape {m.shape} does not match dim_in {ch.dim_in}")
    out = np.zeros((ch.dim_out, ch.dim_out), dtype=complex)
    for K in ch.kraus:
        out += K @ m @ K.conj().T
    return out


def apply(
    ch: QuantumChannel,
    rho: DensityMatrix,
    trace_tol: float = TRACE_TOL,
    psd_tol: float | None = None,
) -> DensityMatrix:
    """Apply the channel to a state; the output is validated as a state."""
    return DensityMatrix.from_matrix(
        apply_matrix(ch, rho.matrix), trace_tol=trace_tol, psd_tol=psd_tol
    )


def complement(ch: QuantumChannel) -> QuantumChannel:
    """Canonical complementary channel in the Kraus-index environment basis.

    The complement maps the input to the environment of the Stinespring
    dilation ``V|x> = sum_k (K_k|x>) (x) |k>``; concretely its output is the
    Gram matrix ``[tr(K_k rho K_l^dag)]_{kl}``.  Its Kraus operators are
    ``L_m`` (one per output basis vector ``m``) with ``[L_m]_{k,:}`` equal to
    row ``m`` of ``K_k``.
    """
    Ls = []
    for m in range(ch.dim_out):
        L = np.zeros((ch.dim_env, ch.dim_in), dtype=complex)
        for k, K in enumerate(ch.kraus):
            L[k, :] = K[m, :]
        Ls.append(L)
    comp_spec = None
    if ch.spec is not None and ch.spec.family == "amplitude_damping":
        # the amplitude-damping complement is amplitude damping with 1-gamma
        comp_spec = ChannelSpec("amplitude_damping", {"gamma": 1.0 - float(ch.spec.params["gamma"])})
    return make_channel(Ls, spec=comp_spec)


def tensor(a: QuantumChannel, b: QuantumChannel, dim_cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Tensor product with Kraus set ``{K_i (x) M_j}``.

    The environment index ordering is ``(i, j) -> i * b.dim_env + j``, so the
    complement of a tensor product equals the tensor product of complements
    up to that fixed relabeling.
    """
    if a.dim_in * b.dim_in > dim_cap or a.dim_out * b.dim_out > dim_cap:
        raise DimensionError(
            f"tensor product dimension exceeds cap {dim_cap}; "
            f"got in={a.dim_in * b.dim_in}, out={a.dim_out * b.dim_out}"
        )
    kraus = [np.kron(Ka, Kb) for Ka in a.kraus for Kb in b.kraus]
    spec = None
    if a.spec is not None and b.spec is not None:
        spec = ChannelSpec("tensor", {}, (a.spec, b.spec))
    return make_channel(kraus, spec=spec)


def tensor_all(channels: Sequence[QuantumChannel], dim_cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Left-associated tensor product of several channels."""
    if not channels:
        raise ValueError("need at least one channel")
    out = channels[0]
    for ch in channels[1:]:
        out = tensor(out, ch, dim_cap=dim_cap)
    return out


def _check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"parameter {name}={value!r} outside [0, 1]")
    return value


def depolarizing_channel(p: float) -> QuantumChannel:
    """Qubit depolarizing channel ``rho -> (1-p) rho + p tr(rho) 1/2``.

    Pauli-Kraus form with weights ``{1 - 3p/4, p/4, p/4, p/4}``.
    """
    p = _check_unit_interval("p", p)
    weights = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0]
    kraus = [np.sqrt(w) * s for w, s in zip(weights, _PAULIS)]
    return make_channel(kraus, spec=ChannelSpec("depolarizing", {"p": p}))


def pauli_channel(probs: Sequence[float]) -> QuantumChannel:
    """Qubit Pauli channel with Kraus operators ``sqrt(p_i) sigma_i``."""
    probs = [float(q) for q in probs]
    if len(probs) != 4:
        raise ValueError(f"need 4 Pauli probabilities, got {len(probs)}")
    if any(q < 0 for q in probs):
        raise ValueError("Pauli probabilities must be non-negative")
    if abs(sum(probs) - 1.0) > 1e-12:
        raise ValueError(f"Pauli probabilities sum to {sum(probs)!r}, not 1")
    kraus = [np.sqrt(q) * s for q, s in zip(probs, _PAULIS)]
    return make_channel(kraus, spec=ChannelSpec("pauli", {"probs": probs}))


def amplitude_damping_channel(gamma: float) -> QuantumChannel:
    """Qubit amplitude damping with decay probability ``gamma``."""
    gamma = _check_unit_interval("gamma", gamma)
    a0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    a1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return make_channel([a0, a1], spec=ChannelSpec("amplitude_damping", {"gamma": gamma}))


def platypus_channel(s: float) -> QuantumChannel:
    """Qutrit channel mixing a coherent two-level branch with relay levels.

    Defined by the isometry sending ``|0> -> sqrt(s)|0>|0> + sqrt(1-s)|1>|1>``,
    ``|1> -> |2>|0>`` and ``|2> -> |2>|1>`` (output (x) environment); the two
    Kraus operators are the environment components of that isometry.
    """
    s = float(s)
    if not 0.0 < s <= 0.5:
        raise ValueError(f"parameter s={s!r} outside (0, 1/2]")
    k0 = np.zeros((3, 3), dtype=complex)
    k1 = np.zeros((3, 3), dtype=complex)
    k0[0, 0] = np.sqrt(s)
    k0[2, 1] = 1.0
    k1[1, 0] = np.sqrt(1.0 - s)
    k1[2, 2] = 1.0
    return make_channel([k0, k1], spec=ChannelSpec("platypus", {"s": s}))


def dephrasure_channel(p: float, q: float) -> QuantumChannel:
    """Dephasing with probability ``p`` followed by erasure with probability ``q``.

    ``rho -> (1-q)[(1-p) rho + p Z rho Z] + q tr(rho) |e><e|`` with the qubit
    embedded in a qutrit output whose third level is the erasure flag.
    """
    p = _check_unit_interval("p", p)
    q = _check_unit_interval("q", q)
    embed = np.zeros((3, 2), dtype=complex)
    embed[0, 0] = embed[1, 1] = 1.0
    z_embed = np.zeros((3, 2), dtype=complex)
    z_embed[0, 0] = 1.0
    z_embed[1, 1] = -1.0
    e0 = np.zeros((3, 2), dtype=complex)
    e0[2, 0] = 1.0
    e1 = np.zeros((3, 2), dtype=complex)
    e1[2, 1] = 1.0
    kraus = [
        np.sqrt((1.0 - q) * (1.0 - p)) * embed,
        np.sqrt((1.0 - q) * p) * z_embed,
        np.sqrt(q) * e0,
        np.sqrt(q) * e1,
    ]
    return make_channel(kraus, spec=ChannelSpec("dephrasure", {"p": p, "q": q}))


def erasure_channel(q: float, dim: int = 2) -> QuantumChannel:
    """Erasure to a flag level with probability ``q`` on a ``dim``-level input."""
    q = _check_unit_interval("q", q)
    embed = np.zeros((dim + 1, dim), dtype=complex)
    embed[:dim, :] = np.eye(dim)
    kraus = [np.sqrt(1.0 - q) * embed]
    for i in range(dim):
        flag = np.zeros((dim + 1, dim), dtype=complex)
        flag[dim, i] = 1.0
        kraus.append(np.sqrt(q) * flag)
    return make_channel(kraus, spec=ChannelSpec("erasure", {"q": q, "dim": dim}))


def identity_channel(dim: int = 2) -> QuantumChannel:
    return make_channel([np.eye(dim, dtype=complex)], spec=ChannelSpec("identity", {"dim": dim}))


def matrix_from_pairs(nested: Sequence) -> np.ndarray:
    """Decode a matrix given as nested rows of ``[re, im]`` pairs."""
    try:
        arr = np.asarray(nested, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"matrix entries must be [re, im] pairs of numbers: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"matrix must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def builtin(spec: ChannelSpec) -> QuantumChannel:
    """Construct a channel from its serializable description."""
    family = spec.family
    params = spec.params
    if family == "depolarizing":
        return depolarizing_channel(params["p"])
    if family == "pauli":
        return pauli_channel(params["probs"])
    if family == "amplitude_damping":
        return amplitude_damping_channel(params["gamma"])
    if family == "platypus":
        return platypus_channel(params["s"])
    if family == "dephrasure":
        return dephrasure_channel(params["p"], params["q"])
    if family == "erasure":
        return erasure_channel(params["q"], int(params.get("dim", 2)))
    if family == "identity":
        return identity_channel(int(params.get("dim", 2)))
    if family == "custom_kraus":
        kraus = [matrix_from_pairs(k) for k in params["kraus"]]
        return make_channel(kraus, spec=spec)
    if family == "tensor":
        if len(spec.children) < 2:
            raise ValueError("tensor family needs at least two children")
        return tensor_all([builtin(c) for c in spec.children])
    raise ValueError(f"unknown channel family {family!r}")


def channel_from_json(obj: Union[Mapping, ChannelSpec]) -> QuantumChannel:
    spec = obj if isinstance(obj, ChannelSpec) else ChannelSpec.from_json(obj)
    return builtin(spec)
