"""
Entanglement-swapping boxes in standard form, the UU*-twirl, and the two
sub-primitive boxes (two EPR pairs -> GHZ, GHZ -> EPR pair).

A standard-form box is a list of branches. Branch ``i`` applies the rank-one
operator ``e_c = |u><psi|`` on Charlie's qubits C1C2 (``psi`` maximally
entangled), Charlie broadcasts ``i``, and Alice and Bob apply ``u_a`` and
``u_b``. Charlie's qubits are traced out at the end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from .qcore import (
    I2,
    TOL_ALGEBRA,
    TOL_INEQ,
    X,
    Z,
    DensityMatrix,
    NotMaxEntangled,
    QCoreError,
    Register,
    SeedLike,
    StateVector,
    _rng,
    apply_local_array,
    haar_unitary_matrix,
    max_entangled_factor,
    ptrace_array,
    reorder_array,
    shannon_entropy,
    unitarity_residual,
)

CANONICAL_REGISTER = Register.qubits("A", "C1", "B", "C2")
CHARLIE = ("C1", "C2")

_PAULIS = (I2, Z, X, X @ Z)
PSI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
P_PLUS = np.outer(PSI_PLUS, PSI_PLUS.conj())


class BoxError(QCoreError):
    pass


def bell_state(which: int = 0, labels: Sequence[str] = ("A", "B")) -> StateVector:
    """``(1 x sigma)|Psi+>`` for sigma in (1, Z, X, XZ)."""
    if which not in range(4):
        raise BoxError(f"bell index {which} not in 0..3")
    amps = np.kron(I2, _PAULIS[which]) @ PSI_PLUS
    return StateVector(amps, Register.qubits(*labels))


def ghz_state(labels: Sequence[str] = ("A", "B", "C1")) -> StateVector:
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / np.sqrt(2)
    return StateVector(amps, Register.qubits(*labels))


def canonical_input() -> StateVector:
    """|Psi+>_{A C1} |Psi+>_{B C2} on register [A, C1, B, C2]."""
    return StateVector(np.kron(PSI_PLUS, PSI_PLUS), CANONICAL_REGISTER)


def fix_phase(m: np.ndarray) -> np.ndarray:
    """Rescale by a global phase so the first nonzero entry is real positive."""
    flat = m.reshape(-1)
    nz = np.flatnonzero(np.abs(flat) > TOL_ALGEBRA)
    if nz.size == 0:
        return m
    v = flat[nz[0]]
    return m * (abs(v) / v)


@dataclass(frozen=True)
class Branch:
    e_c: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray

    def __post_init__(self):
        for name, shape in (("e_c", (4, 4)), ("u_a", (2, 2)), ("u_b", (2, 2))):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != shape:
                raise BoxError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ESBox:
    branches: tuple[Branch, ...]
    post_twirl: bool = False
    name: str = "es-box"

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise BoxError("an ES-box needs at least one branch")

    @property
    def n_outcomes(self) -> int:
        return len(self.branches)

    @property
    def charlie_labels(self) -> tuple[str, ...]:
        return CHARLIE


class SubKind(str, Enum):
    GHZ_FROM_TWO_EPR = "ghz_from_two_epr"
    BELL_FROM_GHZ = "bell_from_ghz"


@dataclass(frozen=True)
class SubBranch:
    """Charlie's operator maps ``c_in`` onto the kept ``c_out`` qubits."""

    kraus_c: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray


@dataclass(frozen=True)
class SubPrimitiveBox:
    kind: SubKind
    branches: tuple[SubBranch, ...]
    c_in: tuple[str, ...]
    c_out: tuple[str, ...]
    name: str = ""

    @property
    def n_outcomes(self) -> int:
        return len(self.branches)

    @property
    def bits(self) -> int:
        return math.ceil(math.log2(self.n_outcomes))

    @property
    def charlie_labels(self) -> tuple[str, ...]:
        return self.c_in

    def canonical_input(self) -> StateVector:
        if self.kind is SubKind.GHZ_FROM_TWO_EPR:
            return canonical_input()
        return ghz_state(("A", "B") + self.c_in)

    def target(self) -> StateVector:
        if self.kind is SubKind.GHZ_FROM_TWO_EPR:
            return ghz_state(("A", "B") + self.c_out)
        return bell_state(0)


Box = Union[ESBox, SubPrimitiveBox]


def box_canonical_input(box: Box) -> StateVector:
    return box.canonical_input() if isinstance(box, SubPrimitiveBox) else canonical_input()


def box_target(box: Box) -> StateVector:
    return box.target() if isinstance(box, SubPrimitiveBox) else bell_state(0)


# ---------------------------------------------------------------------------
# constructors


def _branch_for(psi: np.ndarray, u: np.ndarray) -> Branch:
    """Branch measuring ``psi`` on C1C2 with a correction on Alice's side.

    Projecting the canonical input onto <psi| leaves (conj(M) x 1)|Psi+>
    on AB, where psi = (M x 1)|Psi+>; Alice undoes it with M^T.
    """
    m = max_entangled_factor(StateVector(psi, Register.qubits("C1", "C2"))).matrix
    return Branch(e_c=np.outer(u, psi.conj()), u_a=fix_phase(m.T), u_b=I2)


def teleportation_box() -> ESBox:
    """Bell measurement on C1C2 with Pauli correction at Alice."""
    branches = []
    for i in range(4):
        record = np.zeros(4, dtype=complex)
        record[i] = 1
        branches.append(_branch_for(bell_state(i).amplitudes, record))
    return ESBox(tuple(branches), name="teleport")


def random_es_box(n_outcomes: int = 4, seed: SeedLike = None) -> ESBox:
    """Rotated Bell-basis measurement; 8 outcomes mixes two bases with weight 1/2."""
    if n_outcomes not in (4, 8):
        raise BoxError("n_outcomes must be 4 or 8")
    rng = _rng(seed)
    n_bases = n_outcomes // 4
    weight = 1 / np.sqrt(n_bases)
    branches = []
    for _ in range(n_bases):
        w = np.kron(haar_unitary_matrix(2, rng), haar_unitary_matrix(2, rng))
        for i in range(4):
            record = np.zeros(4, dtype=complex)
            record[i] = weight
            branches.append(_branch_for(w @ bell_state(i).amplitudes, record))
    return ESBox(tuple(branches), name=f"random{n_outcomes}")


def twirled_box(inner: ESBox) -> ESBox:
    report = validate_es_box(inner)
    if not report.passed:
        raise BoxError(f"inner box is not a valid ES-box: failed {report.failed}")
    return ESBox(inner.branches, post_twirl=True, name=f"twirled-{inner.name}")


def ghz_box() -> SubPrimitiveBox:
    """CNOT C1->C2, measure C2, Bob flips on outcome 1."""
    cnot = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    branches = []
    for m in range(2):
        proj = np.kron(I2, np.eye(2, dtype=complex)[m][None, :])
        branches.append(SubBranch(proj @ cnot, I2, X if m else I2))
    return SubPrimitiveBox(SubKind.GHZ_FROM_TWO_EPR, tuple(branches), ("C1", "C2"), ("C1",), name="ghz")


def bell_from_ghz_box(charlie: str = "C1") -> SubPrimitiveBox:
    """Charlie measures in the |+>,|-> basis, Alice applies Z on '-'."""
    plus = np.array([[1, 1]], dtype=complex) / np.sqrt(2)
    minus = np.array([[1, -1]], dtype=complex) / np.sqrt(2)
    branches = (SubBranch(plus, I2, I2), SubBranch(minus, Z, I2))
    return SubPrimitiveBox(SubKind.BELL_FROM_GHZ, branches, (charlie,), (), name="bell-from-ghz")


# ---------------------------------------------------------------------------
# twirl


def twirl_array(arr: np.ndarray, register: Register) -> np.ndarray:
    """Exact UU*-twirl on the AB factors of ``arr``; other factors untouched.

    T(X) = P+ x Tr_AB[(P+ x 1)X] + (1-P+)/3 x Tr_AB[((1-P+) x 1)X]
    """
    rest = register.without(("A", "B"))
    order = ("A", "B") + rest.labels
    moved = reorder_array(arr, register, order)
    dr = rest.total_dim
    t = moved.reshape(4, dr, 4, dr)
    on_plus = np.einsum("ji,ibjc->bc", P_PLUS, t)
    total = np.einsum("ibic->bc", t)
    q = (np.eye(4) - P_PLUS) / 3
    out = np.einsum("ij,bc->ibjc", P_PLUS, on_plus) + np.einsum("ij,bc->ibjc", q, total - on_plus)
    out = out.reshape(4 * dr, 4 * dr)
    return reorder_array(out, Register.qubits("A", "B") + rest, register.labels)


def twirl(sigma: DensityMatrix) -> DensityMatrix:
    """Isotropic projection F P+ + (1-F)(1-P+)/3 with F = <Psi+|sigma|Psi+>."""
    return DensityMatrix(twirl_array(sigma.matrix, sigma.register), sigma.register)


# ---------------------------------------------------------------------------
# application


class Transcript(NamedTuple):
    n_outcomes: int
    broadcast_bits: int
    outcome_entropy: float


class BoxOutput(NamedTuple):
    output: DensityMatrix
    outcome_distribution: np.ndarray
    transcript: Transcript


def _check_register(box: Box, register: Register):
    need = ("A", "B") + tuple(box.charlie_labels)
    missing = [lab for lab in need if lab not in register]
    if missing:
        raise BoxError(f"register {register.labels} lacks box labels {missing}")
    for lab in need:
        if register.dim(lab) != 2:
            raise BoxError(f"box label {lab!r} must be a qubit")


def branch_terms(box: Box, arr: np.ndarray, register: Register, corrected: bool = True):
    """Unnormalized per-branch outputs ``(U_a U_b) Tr_C[E rho E^+] (U_a U_b)^+``.

    Returns (list of matrices, output register). Linear in ``arr``; no
    normalization or validity checks, so it serves invalid candidate boxes
    and the Choi construction alike. With ``corrected=False`` the terms stop
    right after Charlie's measurement (no corrections, no twirl).
    """
    _check_register(box, register)
    terms = []
    out_reg = None
    for br in box.branches:
        if isinstance(box, ESBox):
            m, reg = apply_local_array(arr, register, br.e_c, CHARLIE)
            keep = reg.without(CHARLIE).labels
            m, reg = ptrace_array(m, reg, keep), reg.select(keep)
        else:
            out_factors = tuple((lab, 2) for lab in box.c_out)
            m, reg = apply_local_array(arr, register, br.kraus_c, box.c_in, out_factors)
        if corrected:
            m, reg = apply_local_array(m, reg, br.u_a, ("A",))
            m, reg = apply_local_array(m, reg, br.u_b, ("B",))
        if corrected and getattr(box, "post_twirl", False):
            m = twirl_array(m, reg)
        terms.append(m)
        out_reg = reg
    return terms, out_reg


def apply_box(box: Box, rho) -> BoxOutput:
    """Run the box on ``rho``; ancilla factors pass through untouched."""
    if isinstance(rho, StateVector):
        rho = rho.dm()
    terms, reg = branch_terms(box, rho.matrix, rho.register)
    probs = np.array([max(np.trace(t).real, 0.0) for t in terms])
    # zero-probability branches are skipped
    out = sum(t for t, p in zip(terms, probs) if p > 0)
    total = probs.sum()
    dist = probs / total if total > 0 else probs
    transcript = Transcript(
        n_outcomes=box.n_outcomes,
        broadcast_bits=math.ceil(math.log2(box.n_outcomes)) if box.n_outcomes > 1 else 0,
        outcome_entropy=shannon_entropy(dist),
    )
    out = (out + out.conj().T) / 2
    return BoxOutput(DensityMatrix(out, reg), dist, transcript)


def branch_ensemble(box: Box, rho, corrected: bool = True) -> list[tuple[float, DensityMatrix]]:
    """Ensemble {p_i, rho_i} with Charlie's output traced out.

    ``corrected=False`` gives the ensemble Alice and Bob hold before they
    learn the outcome.
    """
    if isinstance(rho, StateVector):
        rho = rho.dm()
    terms, reg = branch_terms(box, rho.matrix, rho.register, corrected)
    keep = [lab for lab in reg.labels if lab not in box.charlie_labels]
    out = []
    for t in terms:
        p = np.trace(t).real
        if p > 0:
            m = ptrace_array(t, reg, keep) / p
            out.append((float(p), DensityMatrix((m + m.conj().T) / 2, reg.select(keep))))
    return out


# ---------------------------------------------------------------------------
# validation


class Check(NamedTuple):
    name: str
    passed: bool
    residual: float


@dataclass
class ValidationReport:
    box_name: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


STRUCTURAL_CHECKS = ("rank_one", "max_entangled", "completeness", "unitary")


def canonical_fidelity(box: Box) -> float:
    """<target| box(canonical) |target>, on the raw (possibly invalid) box."""
    psi = box_canonical_input(box)
    terms, reg = branch_terms(box, np.outer(psi.amplitudes, psi.amplitudes.conj()), psi.register)
    target = box_target(box)
    keep = target.register.labels
    out = ptrace_array(sum(terms), reg, keep)
    return float(np.real(np.vdot(target.amplitudes, out @ target.amplitudes)))


def validate_es_box(box: ESBox, tol: float = TOL_ALGEBRA) -> ValidationReport:
    """Standard-form checks: rank one, maximally entangled measurement vector,
    completeness, unitary corrections, and canonical action."""
    report = ValidationReport(box.name)
    rank_res, ent_res, unit_res = 0.0, 0.0, 0.0
    for br in box.branches:
        _, s, vh = np.linalg.svd(br.e_c)
        rank_res = max(rank_res, float(s[1]))
        psi = vh[0].conj()
        m = np.sqrt(2) * psi.reshape(2, 2)
        ent_res = max(ent_res, unitarity_residual(m))
        unit_res = max(unit_res, unitarity_residual(br.u_a), unitarity_residual(br.u_b))
    completeness = sum(br.e_c.conj().T @ br.e_c for br in box.branches)
    comp_res = float(np.linalg.norm(completeness - np.eye(4)))
    fid = canonical_fidelity(box)
    report.checks = [
        Check("rank_one", rank_res <= tol, rank_res),
        Check("max_entangled", ent_res <= tol, ent_res),
        Check("completeness", comp_res <= tol, comp_res),
        Check("unitary", unit_res <= tol, unit_res),
        Check("canonical_action", 1 - fid <= TOL_INEQ, 1 - fid),
    ]
    return report


def validate_subprimitive(box: SubPrimitiveBox, tol: float = TOL_ALGEBRA) -> ValidationReport:
    report = ValidationReport(box.name)
    din = 2 ** len(box.c_in)
    completeness = sum(br.kraus_c.conj().T @ br.kraus_c for br in box.branches)
    comp_res = float(np.linalg.norm(completeness - np.eye(din)))
    unit_res = max(max(unitarity_residual(br.u_a), unitarity_residual(br.u_b)) for br in box.branches)
    fid = canonical_fidelity(box)
    report.checks = [
        Check("completeness", comp_res <= tol, comp_res),
        Check("unitary", unit_res <= tol, unit_res),
        Check("canonical_action", 1 - fid <= tol, 1 - fid),
    ]
    return report


def validate(box: Box, tol: float = TOL_ALGEBRA) -> ValidationReport:
    if isinstance(box, SubPrimitiveBox):
        return validate_subprimitive(box, tol)
    return validate_es_box(box, tol)


# ---------------------------------------------------------------------------
# Kraus form of the AB channel


def channel_kraus(box: Box) -> tuple[np.ndarray, Register, Register]:
    """Minimal Kraus operators of rho_in -> rho_AB, all Charlie output traced.

    Built from the Choi matrix of :func:`branch_terms`, so it includes the
    post-twirl. Input register is the box's canonical-input register.
    """
    in_reg = box_canonical_input(box).register
    d_in = in_reg.total_dim
    out_reg = Register.qubits("A", "B")
    choi = np.zeros((4 * d_in, 4 * d_in), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, j] = 1
            terms, reg = branch_terms(box, unit, in_reg)
            out = ptrace_array(sum(terms), reg, ("A", "B"))
            # choi indices (out, in); K_k[a, i] = sqrt(l_k) v_k[a, i]
            choi.reshape(4, d_in, 4, d_in)[:, i, :, j] = out
    w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
    keep = w > TOL_ALGEBRA
    kraus = (v[:, keep] * np.sqrt(w[keep])[None, :]).T.reshape(-1, 4, d_in)
    return kraus, in_reg, out_reg


# ---------------------------------------------------------------------------
# serialization


def _encode(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def _decode(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def box_to_dict(box: Box) -> dict:
    if isinstance(box, ESBox):
        return {
            "kind": "es",
            "name": box.name,
            "post_twirl": box.post_twirl,
            "branches": [
                {"e_c": _encode(b.e_c), "u_a": _encode(b.u_a), "u_b": _encode(b.u_b)} for b in box.branches
            ],
        }
    return {
        "kind": box.kind.value,
        "name": box.name,
        "post_twirl": False,
        "c_in": list(box.c_in),
        "c_out": list(box.c_out),
        "branches": [
            {"kraus_c": _encode(b.kraus_c), "u_a": _encode(b.u_a), "u_b": _encode(b.u_b)} for b in box.branches
        ],
    }


def box_from_dict(doc: dict) -> Box:
    try:
        kind = doc.get("kind", "es")
        if kind == "es":
            branches = tuple(
                Branch(_decode(b["e_c"]), _decode(b["u_a"]), _decode(b["u_b"])) for b in doc["branches"]
            )
            return ESBox(branches, bool(doc.get("post_twirl", False)), doc.get("name", "box-file"))
        branches = tuple(
            SubBranch(_decode(b["kraus_c"]), _decode(b["u_a"]), _decode(b["u_b"])) for b in doc["branches"]
        )
        return SubPrimitiveBox(
            SubKind(kind), branches, tuple(doc["c_in"]), tuple(doc["c_out"]), doc.get("name", "box-file")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BoxError(f"malformed box document: {exc}") from exc


def save_box(box: Box, path) -> None:
    Path(path).write_text(json.dumps(box_to_dict(box), indent=2) + "\n", encoding="utf-8")


def load_box(path) -> Box:
    return box_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "Box",
    "BoxError",
    "BoxOutput",
    "Branch",
    "CANONICAL_REGISTER",
    "Check",
    "ESBox",
    "NotMaxEntangled",
    "P_PLUS",
    "PSI_PLUS",
    "SubBranch",
    "SubKind",
    "SubPrimitiveBox",
    "Transcript",
    "ValidationReport",
    "apply_box",
    "bell_from_ghz_box",
    "bell_state",
    "box_from_dict",
    "box_to_dict",
    "branch_ensemble",
    "canonical_fidelity",
    "canonical_input",
    "channel_kraus",
    "ghz_box",
    "ghz_state",
    "load_box",
    "random_es_box",
    "save_box",
    "teleportation_box",
    "twirl",
    "twirled_box",
    "validate",
    "validate_es_box",
    "validate_subprimitive",
]
