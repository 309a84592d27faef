"""
Dense linear algebra over labeled tensor products of small quantum systems.

Every state carries a :class:`Register`, an ordered list of ``(label, dim)``
factors. Amplitudes are indexed with the first factor as the most
significant digit, so ``|01>`` on register ``[A, B]`` is index 1.

All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

TOL_ALGEBRA = 1e-10
TOL_INEQ = 1e-9
TOL_OPT = 1e-6
EIG_CUTOFF = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

SeedLike = Union[int, Sequence[int], np.random.Generator, None]


class QCoreError(ValueError):
    """Base class for rejected inputs."""


class RegisterError(QCoreError):
    pass


class StateError(QCoreError):
    pass


class NotMaxEntangled(QCoreError):
    """Raised when a two-qubit pure state is not maximally entangled."""


def _labels_tuple(labels) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class Register:
    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(lab), int(d)) for lab, d in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [lab for lab, _ in factors]
        if len(set(labels)) != len(labels):
            raise RegisterError(f"duplicate labels in register {labels}")
        for lab, d in factors:
            if d < 2:
                raise RegisterError(f"factor {lab!r} has dimension {d} < 2")

    @classmethod
    def qubits(cls, *labels: str) -> "Register":
        return cls(tuple((lab, 2) for lab in labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=int)) if self.factors else 1

    def __len__(self):
        return len(self.factors)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegisterError(f"unknown label {label!r} in {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def select(self, labels: Iterable[str]) -> "Register":
        """Sub-register with the given labels, in the given order."""
        return Register(tuple((lab, self.dim(lab)) for lab in _labels_tuple(labels)))

    def without(self, labels: Iterable[str]) -> "Register":
        drop = set(_labels_tuple(labels))
        for lab in drop:
            self.index(lab)
        return Register(tuple(f for f in self.factors if f[0] not in drop))

    def __add__(self, other: "Register") -> "Register":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise RegisterError(f"label collision: {sorted(clash)}")
        return Register(self.factors + other.factors)


# ---------------------------------------------------------------------------
# array-level helpers (no normalization checks; used for intermediate terms)


def permute_array(arr: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a vector or square matrix.

    ``perm[k]`` is the old position of the factor that ends up at position k.
    """
    dims = tuple(dims)
    n = len(dims)
    total = int(np.prod(dims, dtype=int))
    new_total = total
    if arr.ndim == 1:
        return arr.reshape(dims).transpose(perm).reshape(new_total)
    t = arr.reshape(dims + dims)
    axes = list(perm) + [p + n for p in perm]
    return t.transpose(axes).reshape(new_total, new_total)


def reorder_array(arr: np.ndarray, register: Register, labels: Sequence[str]) -> np.ndarray:
    """Reorder ``arr`` from ``register`` order into ``labels`` order."""
    labels = _labels_tuple(labels)
    if sorted(labels) != sorted(register.labels):
        raise RegisterError(f"{labels} is not a permutation of {register.labels}")
    perm = [register.index(lab) for lab in labels]
    return permute_array(arr, register.dims, perm)


def ptrace_array(rho: np.ndarray, register: Register, keep: Sequence[str]) -> np.ndarray:
    keep = _labels_tuple(keep)
    n = len(register)
    keep_idx = [register.index(lab) for lab in keep]
    t = rho.reshape(register.dims * 2)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep_idx:
            cols[k] = rows[k]
    out = "".join(rows[k] for k in keep_idx) + "".join(cols[k] for k in keep_idx)
    d = int(np.prod([register.dims[k] for k in keep_idx], dtype=int))
    return np.einsum("".join(rows) + "".join(cols) + "->" + out, t).reshape(d, d)


def apply_local_array(
    arr: np.ndarray,
    register: Register,
    op: np.ndarray,
    labels: Sequence[str],
    out_factors: Sequence[tuple[str, int]] | None = None,
) -> tuple[np.ndarray, Register]:
    """Apply a (possibly non-square) local operator to a vector or matrix.

    The operator maps the factors ``labels`` (in that order) onto
    ``out_factors`` (defaults to the same factors). The output factors take
    the position of the first input label; ``out_factors`` may be empty.
    Matrices are conjugated, ``op @ rho @ op^dagger``.
    """
    labels = _labels_tuple(labels)
    if out_factors is None:
        out_factors = register.select(labels).factors
    out_factors = tuple(out_factors)
    din = register.select(labels).total_dim
    dout = int(np.prod([d for _, d in out_factors], dtype=int)) if out_factors else 1
    if op.shape != (dout, din):
        raise RegisterError(f"operator shape {op.shape} does not match {(dout, din)}")
    rest = register.without(labels)
    front = list(labels) + list(rest.labels)
    moved = reorder_array(arr, register, front)
    drest = rest.total_dim
    if arr.ndim == 1:
        new = (op @ moved.reshape(din, drest)).reshape(dout * drest)
    else:
        t = moved.reshape(din, drest, din, drest)
        new = np.einsum("xi,ibjc,yj->xbyc", op, t, op.conj()).reshape(dout * drest, dout * drest)
    if not out_factors:
        return new, rest
    mid = Register(out_factors) + rest
    first = register.index(labels[0])
    before = [lab for lab in register.labels[:first] if lab not in labels]
    after = [lab for lab in register.labels[first:] if lab not in labels]
    final = before + [lab for lab, _ in out_factors] + after
    return reorder_array(new, mid, final), mid.select(final)


def entropy_of(matrix: np.ndarray) -> float:
    herm = (matrix + matrix.conj().T) / 2
    w = np.linalg.eigvalsh(herm)
    w = w[w > EIG_CUTOFF]
    return float(-np.sum(w * np.log2(w))) + 0.0


# ---------------------------------------------------------------------------
# typed states


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    register: Register

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape[0] != self.register.total_dim:
            raise StateError(f"length {amps.shape[0]} != register dim {self.register.total_dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > TOL_ALGEBRA:
            raise StateError(f"state vector has norm {norm}")

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.register)

    def reorder(self, labels: Sequence[str]) -> "StateVector":
        return StateVector(reorder_array(self.amplitudes, self.register, labels), self.register.select(labels))

    def overlap(self, other: "StateVector") -> complex:
        other = other.reorder(self.register.labels)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    register: Register

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = self.register.total_dim
        if m.shape != (d, d):
            raise StateError(f"matrix shape {m.shape} != ({d}, {d})")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > TOL_ALGEBRA:
            raise StateError(f"matrix is not Hermitian (residual {herm:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1) > TOL_ALGEBRA:
            raise StateError(f"trace {tr} != 1")
        lam = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
        if lam < -TOL_ALGEBRA:
            raise StateError(f"matrix is not positive semidefinite (min eigenvalue {lam:.3g})")

    @classmethod
    def maximally_mixed(cls, register: Register) -> "DensityMatrix":
        d = register.total_dim
        return cls(np.eye(d, dtype=complex) / d, register)

    def reorder(self, labels: Sequence[str]) -> "DensityMatrix":
        return DensityMatrix(reorder_array(self.matrix, self.register, labels), self.register.select(labels))

    def fidelity(self, psi: StateVector) -> float:
        """<psi|rho|psi> against a pure target on the same labels."""
        psi = psi.reorder(self.register.labels)
        return float(np.real(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes)))


@dataclass(frozen=True)
class UnitaryOp:
    matrix: np.ndarray
    register: Register

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = self.register.total_dim
        if m.shape != (d, d):
            raise StateError(f"operator shape {m.shape} != ({d}, {d})")
        res = unitarity_residual(m)
        if res > TOL_ALGEBRA:
            raise StateError(f"operator is not unitary (residual {res:.3g})")

    @classmethod
    def on(cls, matrix, *labels: str) -> "UnitaryOp":
        """Unitary on qubit labels, e.g. ``UnitaryOp.on(Z, "C1")``."""
        return cls(matrix, Register.qubits(*labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return self.register.labels


@dataclass(frozen=True)
class Ensemble:
    entries: tuple[tuple[float, DensityMatrix], ...]
    register: Register = field(init=False)

    def __post_init__(self):
        entries = tuple((float(p), rho) for p, rho in self.entries)
        if not entries:
            raise StateError("empty ensemble")
        object.__setattr__(self, "entries", entries)
        probs = np.array([p for p, _ in entries])
        if np.any(probs < 0) or np.any(probs > 1):
            raise StateError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1) > TOL_ALGEBRA:
            raise StateError(f"probabilities sum to {probs.sum()}")
        reg = entries[0][1].register
        if any(rho.register != reg for _, rho in entries):
            raise StateError("ensemble members must share one register")
        object.__setattr__(self, "register", reg)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    def average(self) -> DensityMatrix:
        return DensityMatrix(sum(p * rho.matrix for p, rho in self.entries), self.register)


State = Union[StateVector, DensityMatrix]


def unitarity_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[1])))


# ---------------------------------------------------------------------------
# operations


def tensor(a, b):
    """Kronecker product of two objects of the same kind on disjoint labels."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    reg = a.register + b.register
    if isinstance(a, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), reg)
    if isinstance(a, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), reg)
    if isinstance(a, UnitaryOp):
        return UnitaryOp(np.kron(a.matrix, b.matrix), reg)
    raise TypeError(f"unsupported type {type(a).__name__}")


def partial_trace(rho: State, keep) -> DensityMatrix:
    """Reduced state on ``keep``, reported in the order the labels are given."""
    if isinstance(rho, StateVector):
        rho = rho.dm()
    keep = _labels_tuple(keep)
    if not keep:
        raise RegisterError("keep must be nonempty")
    if len(set(keep)) != len(keep):
        raise RegisterError(f"duplicate labels in keep {keep}")
    sub = rho.register.select(keep)
    return DensityMatrix(ptrace_array(rho.matrix, rho.register, keep), sub)


def apply(op: UnitaryOp, target: State) -> State:
    for lab in op.labels:
        if lab not in target.register:
            raise RegisterError(f"operator label {lab!r} not in target {target.register.labels}")
        if target.register.dim(lab) != op.register.dim(lab):
            raise RegisterError(f"dimension mismatch on {lab!r}")
    if isinstance(target, StateVector):
        arr, reg = apply_local_array(target.amplitudes, target.register, op.matrix, op.labels)
        return StateVector(arr, reg)
    arr, reg = apply_local_array(target.matrix, target.register, op.matrix, op.labels)
    return DensityMatrix(arr, reg)


def vn_entropy(rho: State) -> float:
    """Von Neumann entropy in bits."""
    if isinstance(rho, StateVector):
        return 0.0
    return entropy_of(rho.matrix)


def _check_cover(register: Register, parts: Sequence[tuple[str, ...]]):
    flat = [lab for part in parts for lab in part]
    if len(set(flat)) != len(flat):
        raise RegisterError(f"partition {parts} is not disjoint")
    if sorted(flat) != sorted(register.labels):
        raise RegisterError(f"partition {parts} does not cover {register.labels}")
    if any(not part for part in parts):
        raise RegisterError("partition blocks must be nonempty")


def _marginal_entropy(rho: DensityMatrix, labels: tuple[str, ...]) -> float:
    return entropy_of(ptrace_array(rho.matrix, rho.register, labels))


def mutual_information(rho: State, partition) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for a bipartition covering ``rho``."""
    if isinstance(rho, StateVector):
        rho = rho.dm()
    a, b = (_labels_tuple(p) for p in partition)
    _check_cover(rho.register, (a, b))
    return _marginal_entropy(rho, a) + _marginal_entropy(rho, b) - vn_entropy(rho)


def cond_mutual_information(rho: State, partition) -> float:
    """I(A:B|R) = S(AR) + S(BR) - S(ABR) - S(R)."""
    if isinstance(rho, StateVector):
        rho = rho.dm()
    a, b, r = (_labels_tuple(p) for p in partition)
    _check_cover(rho.register, (a, b, r))
    return (
        _marginal_entropy(rho, a + r)
        + _marginal_entropy(rho, b + r)
        - vn_entropy(rho)
        - _marginal_entropy(rho, r)
    )


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise QCoreError("negative probability")
    if abs(p.sum() - 1) > TOL_ALGEBRA:
        raise QCoreError(f"probabilities sum to {p.sum()}")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def classical_mutual_information(prior, channel) -> float:
    """Mutual information of a classical channel ``channel[x, y] = p(y|x)``."""
    prior = np.asarray(prior, dtype=float)
    channel = np.asarray(channel, dtype=float)
    joint = prior[:, None] * channel
    py = joint.sum(axis=0)
    return shannon_entropy(prior) + shannon_entropy(py / py.sum()) - shannon_entropy(joint.ravel() / joint.sum())


def purify(rho: DensityMatrix, env_label: str = "E") -> StateVector:
    """Purification on ``register + env``; env dimension equals ``total_dim``."""
    d = rho.register.total_dim
    herm = (rho.matrix + rho.matrix.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    w = np.clip(w, 0, None)
    w = w / w.sum()
    # |Phi> = sum_k sqrt(w_k) |v_k> |k>_E
    amps = (v * np.sqrt(w)[None, :]).reshape(d * d)
    return StateVector(amps / np.linalg.norm(amps), rho.register + Register(((env_label, d),)))


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary_matrix(dim: int, seed: SeedLike = None) -> np.ndarray:
    rng = _rng(seed)
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases[None, :]


def _default_register(dim: int, register: Register | None) -> Register:
    if register is not None:
        if register.total_dim != dim:
            raise RegisterError(f"register dim {register.total_dim} != {dim}")
        return register
    n = int(round(np.log2(dim)))
    if 2**n == dim:
        return Register.qubits(*(f"q{k}" for k in range(n)))
    return Register((("q0", dim),))


def haar_unitary(dim: int, seed: SeedLike = None, register: Register | None = None) -> UnitaryOp:
    if dim < 2:
        raise QCoreError("dim must be >= 2")
    return UnitaryOp(haar_unitary_matrix(dim, seed), _default_register(dim, register))


def random_density_matrix(dim: int, rank: int | None = None, seed: SeedLike = None) -> np.ndarray:
    rng = _rng(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    w = g @ g.conj().T
    return w / np.trace(w).real


def random_density(
    dim: int, rank: int | None = None, seed: SeedLike = None, register: Register | None = None
) -> DensityMatrix:
    """Normalized Wishart state of the given rank (full rank by default)."""
    if dim < 2:
        raise QCoreError("dim must be >= 2")
    m = random_density_matrix(dim, rank, seed)
    return DensityMatrix((m + m.conj().T) / 2, _default_register(dim, register))


def random_state(dim: int, seed: SeedLike = None, register: Register | None = None) -> StateVector:
    rng = _rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v), _default_register(dim, register))


def max_entangled_factor(psi: StateVector) -> UnitaryOp:
    """Return M with ``psi = (M x 1)|Psi+>``, acting on psi's first qubit.

    Raises :class:`NotMaxEntangled` when M = sqrt(2) * fold(psi) is not unitary.
    """
    if psi.register.dims != (2, 2):
        raise RegisterError("max_entangled_factor expects a two-qubit state")
    m = np.sqrt(2) * psi.amplitudes.reshape(2, 2)
    res = unitarity_residual(m)
    if res > TOL_INEQ:
        raise NotMaxEntangled(f"state is not maximally entangled (unitarity residual {res:.3g})")
    return UnitaryOp(m, psi.register.select(psi.register.labels[:1]))


def trace_distance(a, b) -> float:
    a = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    b = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    d = (a - b + (a - b).conj().T) / 2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))
