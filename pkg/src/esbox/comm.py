"""
Communication analysis of ES-boxes: the entropic lower bound on the cost
of running a box, signaling protocols that bound its communication value
from below, and the entanglement-assisted capacity that bounds it from
above.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .boxes import (
    CANONICAL_REGISTER,
    P_PLUS,
    PSI_PLUS,
    Box,
    BoxError,
    ESBox,
    SubKind,
    SubPrimitiveBox,
    apply_box,
    bell_from_ghz_box,
    bell_state,
    box_canonical_input,
    branch_ensemble,
    canonical_input,
    channel_kraus,
    ghz_box,
    ghz_state,
    validate,
)
from .qcore import (
    I2,
    TOL_ALGEBRA,
    TOL_INEQ,
    TOL_OPT,
    X,
    Z,
    DensityMatrix,
    Ensemble,
    QCoreError,
    Register,
    SeedLike,
    StateVector,
    _rng,
    apply_local_array,
    classical_mutual_information,
    haar_unitary_matrix,
    mutual_information,
    partial_trace,
    purify,
    random_density,
    random_density_matrix,
    shannon_entropy,
    trace_distance,
    vn_entropy,
)

log = logging.getLogger(__name__)

NS_THRESHOLD = 1e-8
CAPACITY_FLOOR = 1e-3


class ProtocolInapplicable(QCoreError):
    """The protocol's precondition does not hold for this box."""


def holevo_quantity(entries: Sequence[tuple[float, DensityMatrix]]) -> float:
    avg = sum(p * rho.matrix for p, rho in entries)
    return vn_entropy(DensityMatrix(avg, entries[0][1].register)) - sum(p * vn_entropy(rho) for p, rho in entries)


# ---------------------------------------------------------------------------
# ensemble gap


class Lemma1Gap(NamedTuple):
    delta_i: float
    delta_s: float
    identity_residual: float


def flagged_state(ensemble: Ensemble, flag: str = "R") -> DensityMatrix:
    """sum_i p_i rho_i x |i><i|_R; the flag dimension is padded to at least 2."""
    n = max(len(ensemble.entries), 2)
    mat = 0
    for i, (p, rho) in enumerate(ensemble.entries):
        proj = np.zeros((n, n))
        proj[i, i] = 1
        mat = mat + p * np.kron(rho.matrix, proj)
    return DensityMatrix(mat, ensemble.register + Register(((flag, n),)))


def lemma1_gap(ensemble: Ensemble, partition=("A", "B")) -> Lemma1Gap:
    """Average gain of mutual information versus average loss of entropy.

    Also returns ``|(dI - dS) + I(A:R) + I(B:R)|`` evaluated on the flagged
    extension, which vanishes identically.
    """
    a, b = partition
    avg = ensemble.average()
    delta_i = sum(p * mutual_information(rho, (a, b)) for p, rho in ensemble.entries) - mutual_information(
        avg, (a, b)
    )
    delta_s = vn_entropy(avg) - sum(p * vn_entropy(rho) for p, rho in ensemble.entries)
    ext = flagged_state(ensemble)
    i_ar = mutual_information(partial_trace(ext, _flat(a, "R")), (a, "R"))
    i_br = mutual_information(partial_trace(ext, _flat(b, "R")), (b, "R"))
    residual = abs((delta_i - delta_s) + i_ar + i_br)
    return Lemma1Gap(delta_i, delta_s, residual)


def _flat(*parts) -> tuple[str, ...]:
    out = []
    for p in parts:
        out.extend((p,) if isinstance(p, str) else p)
    return tuple(out)


def random_ensemble(seed: SeedLike) -> Ensemble:
    """2-6 random two-qubit states with Dirichlet weights."""
    rng = _rng(seed)
    n = int(rng.integers(2, 7))
    probs = rng.dirichlet(np.ones(n))
    reg = Register.qubits("A", "B")
    states = [random_density(4, int(rng.integers(1, 5)), rng, reg) for _ in range(n)]
    return Ensemble(tuple(zip(probs, states)))


@dataclass
class Lemma1Summary:
    trials: int
    violations: int
    max_gap: float
    max_identity_residual: float


def lemma1_suite(trials: int = 1000, seed: int = 42) -> Lemma1Summary:
    violations, max_gap, max_res = 0, -np.inf, 0.0
    for k in range(trials):
        g = lemma1_gap(random_ensemble([seed, k]))
        gap = g.delta_i - g.delta_s
        violations += gap > TOL_INEQ
        max_gap = max(max_gap, gap)
        max_res = max(max_res, g.identity_residual)
    return Lemma1Summary(trials, int(violations), float(max_gap), float(max_res))


# ---------------------------------------------------------------------------
# communication cost


class EntropicChain(NamedTuple):
    entropy: float
    delta_s: float
    delta_i: float
    intact: bool
    residual: float


def entropic_chain(box: ESBox) -> EntropicChain:
    """H(p) >= dS >= dI = 2 on the canonical input, checked link by link."""
    ensemble = Ensemble(tuple(branch_ensemble(box, canonical_input(), corrected=False)))
    probs = ensemble.probabilities
    h = shannon_entropy(probs / probs.sum())
    gap = lemma1_gap(ensemble)
    links = (gap.delta_s - h, gap.delta_i - gap.delta_s, abs(gap.delta_i - 2))
    residual = max(0.0, *links)
    return EntropicChain(h, gap.delta_s, gap.delta_i, residual <= TOL_INEQ, residual)


def cc_lower_bound(box: Box) -> float:
    """Bits Charlie must broadcast per use: entropy of his outcomes."""
    report = validate(box)
    if not report.passed:
        raise BoxError(f"invalid box: failed {report.failed}")
    if isinstance(box, SubPrimitiveBox):
        return apply_box(box, box.canonical_input()).transcript.outcome_entropy
    chain = entropic_chain(box)
    if not chain.intact:
        raise BoxError(f"entropic chain broken (residual {chain.residual:.3g})")
    return chain.entropy


# ---------------------------------------------------------------------------
# signaling protocols


class Theorem3Result(NamedTuple):
    holevo: float
    accessible: float
    orthogonality_residual: float


def _ab_output(box: Box, rho) -> DensityMatrix:
    return partial_trace(apply_box(box, rho).output, ("A", "B"))


def binary_plus_channel(states: Sequence[DensityMatrix]) -> np.ndarray:
    """p(outcome | letter) for the joint measurement {P+, 1 - P+} on AB."""
    rows = []
    for rho in states:
        f = float(np.real(np.trace(P_PLUS @ rho.reorder(("A", "B")).matrix)))
        f = min(max(f, 0.0), 1.0)
        rows.append([f, 1 - f])
    return np.array(rows)


def theorem3_protocol(box: ESBox) -> Theorem3Result:
    """Charlie encodes one bit as 1 or Z on C1 before the box."""
    psi = canonical_input()
    flipped, _ = apply_local_array(psi.amplitudes, psi.register, Z, ("C1",))
    rho0 = _ab_output(box, psi)
    rho1 = _ab_output(box, StateVector(flipped, psi.register))
    overlap = float(np.real(PSI_PLUS.conj() @ rho1.matrix @ PSI_PLUS))
    accessible = classical_mutual_information([0.5, 0.5], binary_plus_channel([rho0, rho1]))
    holevo = holevo_quantity([(0.5, rho0), (0.5, rho1)])
    return Theorem3Result(holevo, accessible, abs(overlap))


def teleportation_fidelity(box: ESBox, trials: int = 100, seed: SeedLike = 0) -> float:
    """Worst fidelity of C2 -> A teleportation through the box's branches.

    Any post-twirl is ignored: this certifies the underlying protocol.
    """
    inner = ESBox(box.branches, post_twirl=False, name=box.name)
    rng = _rng(seed)
    worst = 1.0
    for _ in range(trials):
        phi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        phi /= np.linalg.norm(phi)
        amps = np.kron(np.kron(PSI_PLUS, [1, 0]), phi)
        out = apply_box(inner, StateVector(amps, CANONICAL_REGISTER)).output
        rho_a = partial_trace(out, ("A",)).matrix
        worst = min(worst, float(np.real(phi.conj() @ rho_a @ phi)))
    return worst


DENSE_REGISTER = Register.qubits("A", "C1", "B", "A'", "C2")
_ENCODINGS = (I2, Z, X, X @ Z)


def dense_coding_confusion(box: ESBox, encodings: Sequence[int] = (0, 1, 2, 3)) -> np.ndarray:
    """p(j | k): Charlie applies Pauli k on C2, Alice Bell-measures A'A."""
    if not isinstance(box, ESBox):
        raise ProtocolInapplicable("dense coding needs an ES-box")
    if 1 - teleportation_fidelity(box) > TOL_ALGEBRA:
        raise ProtocolInapplicable(f"{box.name} does not teleport C2 to A")
    base = np.kron(np.kron(PSI_PLUS, [1, 0]), PSI_PLUS)
    bells = [bell_state(j, ("A'", "A")).amplitudes for j in range(4)]
    rows = []
    for k in encodings:
        amps, _ = apply_local_array(base, DENSE_REGISTER, _ENCODINGS[k], ("C2",))
        out = apply_box(box, StateVector(amps, DENSE_REGISTER)).output
        rho = partial_trace(out, ("A'", "A")).matrix
        rows.append([float(np.real(b.conj() @ rho @ b)) for b in bells])
    confusion = np.clip(np.array(rows), 0, 1)
    used = confusion.sum(axis=0) > TOL_ALGEBRA
    return confusion[:, used] / confusion[:, used].sum(axis=1, keepdims=True)


def dense_coding_cv(box: ESBox, encodings: Sequence[int] = (0, 1, 2, 3)) -> float:
    confusion = dense_coding_confusion(box, encodings)
    return classical_mutual_information(np.full(len(encodings), 1 / len(encodings)), confusion)


# ---------------------------------------------------------------------------
# entanglement-assisted capacity


def eaccqc_objective(box: Box, rho: DensityMatrix) -> float:
    """S(rho) + S(box(rho)) - S((box x id_E)(Phi_rho)), Charlie's output traced."""
    phi = purify(rho, "E")
    ext = apply_box(box, phi).output
    out_ab = partial_trace(ext, ("A", "B"))
    out_abe = partial_trace(ext, ("A", "B", "E"))
    return vn_entropy(rho) + vn_entropy(out_ab) - vn_entropy(out_abe)


def _entropy_bits(w: np.ndarray) -> np.ndarray:
    w = np.where(w > 1e-12, w, 1.0)
    return -np.sum(w * np.log2(w), axis=-1)


def _herm_log(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(m)
    lw = np.log(np.maximum(w, 1e-300))
    return (v * lw[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2)), w


class KrausChannel:
    """Batched evaluation of the capacity objective from Kraus operators.

    f(rho) = S(rho) + S(N(rho)) - S(N^c(rho)); the complementary output
    N^c(rho)_kl = Tr(K_k rho K_l^+) has the spectrum of the extended output.
    """

    def __init__(self, kraus: np.ndarray):
        self.kraus = kraus
        self.k, self.dout, self.din = kraus.shape
        self._flat = kraus.reshape(self.k * self.dout, self.din)
        self._gram = np.einsum("lai,kaj->lkij", kraus.conj(), kraus).reshape(self.k * self.k, self.din**2)

    def outputs(self, rho: np.ndarray):
        y = (self._flat @ rho).reshape(rho.shape[:-2] + (self.k, self.dout, self.din))
        out = np.einsum("...kaj,kbj->...ab", y, self.kraus.conj())
        comp = y.reshape(y.shape[:-3] + (self.k, self.dout * self.din)) @ self._flat.reshape(
            self.k, self.dout * self.din
        ).conj().T
        return out, comp

    def objective(self, rho: np.ndarray) -> np.ndarray:
        out, comp = self.outputs(rho)
        return (
            _entropy_bits(np.linalg.eigvalsh(rho))
            + _entropy_bits(np.linalg.eigvalsh(out))
            - _entropy_bits(np.linalg.eigvalsh(comp))
        )

    def value_and_gradient(self, rho: np.ndarray):
        """Objective in bits and its gradient in nats, up to a multiple of 1."""
        out, comp = self.outputs(rho)
        log_rho, w_rho = _herm_log(rho)
        log_out, w_out = _herm_log(out)
        log_comp, w_comp = _herm_log(comp)
        f = _entropy_bits(w_rho) + _entropy_bits(w_out) - _entropy_bits(w_comp)
        lk = np.einsum("...ab,kbj->...kaj", log_out, self.kraus)
        adj_out = self._flat.conj().T @ lk.reshape(lk.shape[:-3] + (self.k * self.dout, self.din))
        adj_comp = (log_comp.reshape(log_comp.shape[:-2] + (-1,)) @ self._gram).reshape(
            rho.shape
        )
        return f, -log_rho - adj_out + adj_comp


def _normalized_exp(h: np.ndarray) -> np.ndarray:
    h = (h + np.conj(np.swapaxes(h, -1, -2))) / 2
    w, v = np.linalg.eigh(h)
    w = np.exp(w - w.max(axis=-1, keepdims=True))
    r = (v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    return r / np.trace(r, axis1=-2, axis2=-1).real[..., None, None]


@dataclass
class CapacityResult:
    value_bits: float
    argmax_state: DensityMatrix
    restarts: int
    iterations: int
    converged: bool
    history: np.ndarray = field(repr=False, default=None)


MIX_STEPS = (0.5, 0.1, 0.02)


def eaccqc_maximize(box: Box, restarts: int = 200, iters: int = 300, seed: SeedLike = 42) -> CapacityResult:
    """Ascent over input states, all restarts advanced together.

    Each iteration proposes the mixture (1-t) rho + t sigma toward a fresh
    random pure sigma, with t cycling through MIX_STEPS, plus the
    exponentiated-gradient step rho' ~ exp(log rho + grad f). The best proposal is kept if it
    increases the objective, so the sequence is monotone per restart.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = _rng(seed)
    kraus, in_reg, _ = channel_kraus(box)
    chan = KrausChannel(kraus)
    d = chan.din
    rho = np.stack([random_density_matrix(d, d, rng) for _ in range(restarts)])
    f, grad = chan.value_and_gradient(rho)
    history = np.empty(iters + 1)
    history[0] = f.max()
    for it in range(iters):
        log_rho, _ = _herm_log(rho)
        t = MIX_STEPS[it % len(MIX_STEPS)]
        v = rng.standard_normal((restarts, d)) + 1j * rng.standard_normal((restarts, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        proposals = [_normalized_exp(log_rho + grad), (1 - t) * rho + t * np.einsum("ri,rj->rij", v, v.conj())]
        values = np.stack([chan.objective(p) for p in proposals])
        best = values.argmax(axis=0)
        best_val = values[best, np.arange(restarts)]
        accept = best_val > f
        if accept.any():
            idx = np.flatnonzero(accept)
            rho[idx] = np.stack(proposals)[best[idx], idx]
            f_new, g_new = chan.value_and_gradient(rho[idx])
            f[idx], grad[idx] = f_new, g_new
        history[it + 1] = f.max()
    tail = max(1, iters // 10)
    converged = bool(history[-1] - history[-1 - tail] < 1e-8) if iters else False
    k = int(f.argmax())
    m = rho[k]
    arg = DensityMatrix((m + m.conj().T) / 2 / np.trace(m).real, in_reg)
    log.debug("capacity %.9f after %d iterations (converged=%s)", f[k], iters, converged)
    return CapacityResult(float(f[k]), arg, restarts, iters, converged, history)


# ---------------------------------------------------------------------------
# non-signaling


class SignalingResult(NamedTuple):
    is_signaling: bool
    max_residual: float


DIRECTIONS = {"C->A": ("A",), "C->B": ("B",), "C->AB": ("A", "B")}


def _charlie_operations(box: Box, trials: int, rng) -> list[list[np.ndarray]]:
    dc = 2 ** len(box.charlie_labels)
    ops = []
    for k in range(trials):
        if k % 2:
            ops.append([np.diag(e).astype(complex) for e in np.eye(dc)])
        else:
            ops.append([haar_unitary_matrix(dc, rng)])
    return ops


def nonsignaling_check(
    box: Box,
    direction: str = "C->A",
    trials: int = 100,
    seed: SeedLike = 0,
    operations: Sequence[Sequence[np.ndarray]] | None = None,
    inputs: Sequence[DensityMatrix] | None = None,
) -> SignalingResult:
    """Max trace distance between target marginals with and without Charlie's
    operation. Charlie's operations are Kraus lists on his input qubits.
    By default each input gets its own operation, alternating Haar unitaries
    and computational-basis measurements, and the canonical input is the
    first trial input. Explicit ``operations`` are all tried on every input."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {sorted(DIRECTIONS)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = _rng(seed)
    keep = DIRECTIONS[direction]
    if inputs is None:
        psi = box_canonical_input(box)
        d = psi.register.total_dim
        inputs = [psi.dm()] + [
            random_density(d, int(rng.integers(1, d + 1)), rng, psi.register) for _ in range(trials - 1)
        ]
    if operations is None:
        schedule = [[ops] for ops in _charlie_operations(box, len(inputs), rng)]
    else:
        schedule = [list(operations)] * len(inputs)
    labels = box.charlie_labels
    worst = 0.0
    for rho, ops in zip(inputs, schedule):
        base = partial_trace(apply_box(box, rho).output, keep)
        for kraus in ops:
            m = sum(apply_local_array(rho.matrix, rho.register, k, labels)[0] for k in kraus)
            moved = DensityMatrix((m + m.conj().T) / 2, rho.register)
            worst = max(worst, trace_distance(partial_trace(apply_box(box, moved).output, keep), base))
    return SignalingResult(worst > NS_THRESHOLD, worst)


# ---------------------------------------------------------------------------
# sub-primitives


class RandomizationSignal(NamedTuple):
    holevo: float
    rho0: DensityMatrix
    rho1: DensityMatrix


def ghz_randomization_signal() -> RandomizationSignal:
    """Charlie either does nothing or randomizes his qubits before the GHZ box."""
    box = ghz_box()
    rho0 = _ab_output(box, canonical_input())
    rho1 = _ab_output(box, DensityMatrix.maximally_mixed(CANONICAL_REGISTER))
    return RandomizationSignal(holevo_quantity([(0.5, rho0), (0.5, rho1)]), rho0, rho1)


def bell_from_ghz_outputs(encodings=(I2, Z)) -> list[list[tuple[float, DensityMatrix]]]:
    """Per encoding, the branch ensemble of the GHZ -> Bell box."""
    box = bell_from_ghz_box()
    ghz = ghz_state()
    out = []
    for enc in encodings:
        amps, _ = apply_local_array(ghz.amplitudes, ghz.register, enc, box.c_in)
        out.append(branch_ensemble(box, StateVector(amps, ghz.register)))
    return out


def bell_from_ghz_cv() -> float:
    """Accessible information of Charlie's {1, Z} encoding through the box."""
    box = bell_from_ghz_box()
    ghz = ghz_state()
    states = []
    for enc in (I2, Z):
        amps, _ = apply_local_array(ghz.amplitudes, ghz.register, enc, box.c_in)
        states.append(_ab_output(box, StateVector(amps, ghz.register)))
    return classical_mutual_information([0.5, 0.5], binary_plus_channel(states))


def ghz_holevo_reference() -> float:
    """Closed form for the randomization pair: eigenvalues {3/8,3/8,1/8,1/8}."""
    mix = -2 * (3 / 8) * math.log2(3 / 8) - 2 * (1 / 8) * math.log2(1 / 8)
    return mix - 0.5 * 1.0 - 0.5 * 2.0


# ---------------------------------------------------------------------------
# report


@dataclass
class Tolerances:
    algebra: float = TOL_ALGEBRA
    inequality: float = TOL_INEQ
    optimizer: float = TOL_OPT


@dataclass
class Claim:
    id: str
    name: str
    value: float
    bound: float
    residual: float
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _status(ok: bool, inconclusive: bool = False) -> str:
    if ok:
        return "pass"
    return "inconclusive" if inconclusive else "fail"


@dataclass
class CommReport:
    box_id: str
    seed: int
    outcome_entropy_bits: float = float("nan")
    cc_lower_bound_bits: float = float("nan")
    cv_lower_bound_bits: float = float("nan")
    capacity_upper_bound_bits: float | None = None
    nonsignaling: dict = field(default_factory=dict)
    verdicts: list[Claim] = field(default_factory=list)
    informational: dict = field(default_factory=dict)
    capacity: CapacityResult | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.verdicts)

    @property
    def inconclusive(self) -> bool:
        return any(c.status == "inconclusive" for c in self.verdicts)

    def consistency_residuals(self) -> dict:
        """Slack of cv <= capacity and cc-bound <= outcome entropy (negative is fine)."""
        out = {"cc_vs_entropy": self.cc_lower_bound_bits - self.outcome_entropy_bits}
        if self.capacity_upper_bound_bits is not None:
            out["cv_vs_capacity"] = self.cv_lower_bound_bits - self.capacity_upper_bound_bits
        return out


def _es_report(box: ESBox, rep: CommReport, trials, restarts, iters, tol: Tolerances):
    claims = rep.verdicts
    checks = validate(box, tol.algebra)
    structural = max(c.residual for c in checks.checks if c.name != "canonical_action")
    fid = 1 - checks["canonical_action"].residual
    claims.append(Claim("T1", "standard form + canonical action", fid, 1.0, structural, _status(checks.passed)))

    l1 = lemma1_suite(trials, rep.seed)
    claims.append(
        Claim(
            "L1",
            f"dI <= dS over {l1.trials} ensembles",
            l1.max_gap,
            0.0,
            l1.max_identity_residual,
            _status(l1.violations == 0 and l1.max_identity_residual <= tol.inequality),
        )
    )

    chain = entropic_chain(box)
    rep.outcome_entropy_bits = chain.entropy
    rep.cc_lower_bound_bits = chain.entropy
    claims.append(
        Claim(
            "T2",
            "CC chain H >= dS >= dI = 2",
            chain.entropy,
            2.0,
            chain.residual,
            _status(chain.intact and chain.entropy >= 2 - tol.inequality),
        )
    )

    t3 = theorem3_protocol(box)
    claims.append(
        Claim(
            "T3",
            "accessible info of {1, Z_C1} encoding",
            t3.accessible,
            1.0,
            t3.orthogonality_residual,
            _status(abs(t3.accessible - 1) <= tol.inequality and t3.orthogonality_residual <= tol.algebra),
        )
    )
    rep.informational["T3_holevo"] = t3.holevo
    cv_lower = t3.accessible

    dc = None
    try:
        dc = dense_coding_cv(box)
    except ProtocolInapplicable as exc:
        rep.informational["DC"] = f"inapplicable: {exc}"
    if dc is not None:
        if box.post_twirl:
            claims.append(Claim("DC", "dense coding through twirl < 2", dc, 2.0, 0.0, _status(dc < 2 - tol.inequality)))
        else:
            claims.append(
                Claim("DC", "dense coding decodes 2 bits", dc, 2.0, abs(dc - 2), _status(abs(dc - 2) <= tol.inequality))
            )
            cv_lower = max(cv_lower, dc)
    rep.cv_lower_bound_bits = cv_lower

    cap = eaccqc_maximize(box, restarts, iters, rep.seed)
    rep.capacity = cap
    rep.capacity_upper_bound_bits = cap.value_bits
    rep.informational["capacity_converged"] = cap.converged
    if box.post_twirl:
        ok = 1 - CAPACITY_FLOOR <= cap.value_bits <= 1 + tol.optimizer
        short = cap.value_bits < 1 - CAPACITY_FLOOR
        claims.append(
            Claim("T4-cap", "EA capacity of twirled box = 1", cap.value_bits, 1.0, abs(cap.value_bits - 1), _status(ok, short))
        )
    else:
        ok = cap.value_bits >= cv_lower - tol.optimizer
        claims.append(
            Claim(
                "T4-cap",
                "EA capacity >= protocol CV",
                cap.value_bits,
                cv_lower,
                max(0.0, cv_lower - cap.value_bits),
                _status(ok, True),
            )
        )

    ns = {d: nonsignaling_check(box, d, 100, rep.seed) for d in DIRECTIONS}
    rep.nonsignaling = {d: {"signaling": r.is_signaling, "residual": r.max_residual} for d, r in ns.items()}
    if box.post_twirl:
        res = max(ns["C->A"].max_residual, ns["C->B"].max_residual)
        ok = res <= tol.algebra and ns["C->AB"].is_signaling
        claims.append(Claim("T4-ns", "no signaling C->A, C->B; signaling C->AB", res, tol.algebra, res, _status(ok)))
        irr_ok = (
            chain.entropy >= 2 - tol.inequality
            and abs(t3.accessible - 1) <= tol.inequality
            and cap.value_bits <= 1 + tol.optimizer
        )
        claims.append(
            Claim(
                "IRR",
                "CC exceeds CV",
                chain.entropy - cap.value_bits,
                0.0,
                0.0,
                _status(irr_ok and chain.entropy - cap.value_bits > 0.5, cap.value_bits < 1 - CAPACITY_FLOOR),
            )
        )
    else:
        r = ns["C->AB"]
        claims.append(Claim("T4-ns", "signaling C->AB", r.max_residual, NS_THRESHOLD, r.max_residual, _status(r.is_signaling)))


def _sub_report(box: SubPrimitiveBox, rep: CommReport, restarts, iters, tol: Tolerances):
    claims = rep.verdicts
    checks = validate(box)
    fid = 1 - checks["canonical_action"].residual
    cid = "SUB1" if box.kind is SubKind.GHZ_FROM_TWO_EPR else "SUB2"
    claims.append(Claim(cid, "canonical action fidelity", fid, 1.0, 1 - fid, _status(checks.passed)))
    out = apply_box(box, box.canonical_input())
    h = out.transcript.outcome_entropy
    rep.outcome_entropy_bits = h
    rep.cc_lower_bound_bits = h
    claims.append(
        Claim(
            cid,
            "CC: outcome entropy (1 bit broadcast)",
            h,
            1.0,
            abs(h - 1),
            _status(abs(h - 1) <= tol.inequality and out.transcript.broadcast_bits == 1),
        )
    )
    if box.kind is SubKind.GHZ_FROM_TWO_EPR:
        sig = ghz_randomization_signal()
        ref = ghz_holevo_reference()
        claims.append(
            Claim(cid, "CV > 0: randomization Holevo", sig.holevo, ref, abs(sig.holevo - ref), _status(abs(sig.holevo - ref) <= tol.optimizer and sig.holevo > 0))
        )
        rep.cv_lower_bound_bits = sig.holevo
        cap = eaccqc_maximize(box, restarts, iters, rep.seed)
        rep.capacity = cap
        rep.capacity_upper_bound_bits = cap.value_bits
        rep.informational["SUB1_capacity_estimate"] = cap.value_bits
        rep.informational["SUB1_cv_below_one"] = "not certified (full-input capacity estimate only)"
    else:
        cv = bell_from_ghz_cv()
        claims.append(Claim(cid, "CV: accessible info of {1, Z}", cv, 1.0, abs(cv - 1), _status(abs(cv - 1) <= tol.inequality)))
        rep.cv_lower_bound_bits = cv


def build_report(
    box: Box,
    box_id: str,
    seed: int = 42,
    trials: int = 1000,
    restarts: int = 200,
    iters: int = 300,
    tol: Tolerances | None = None,
) -> CommReport:
    tol = tol or Tolerances()
    rep = CommReport(box_id=box_id, seed=seed)
    checks = validate(box, tol.algebra)
    if not checks.passed:
        # nothing downstream is meaningful for a box outside the standard form
        worst = max(c.residual for c in checks.checks)
        rep.verdicts.append(Claim("T1", f"invalid box: {', '.join(checks.failed)}", worst, 0.0, worst, "fail"))
        return rep
    if isinstance(box, SubPrimitiveBox):
        _sub_report(box, rep, restarts, iters, tol)
    else:
        _es_report(box, rep, trials, restarts, iters, tol)
    return rep
