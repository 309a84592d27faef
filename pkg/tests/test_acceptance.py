"""Acceptance criteria, each at its stated tolerance.

Every test logs one PASS/FAIL line; the lines are repeated in the terminal
summary under "acceptance criteria".
"""

import json

import numpy as np
import pytest

from esbox.boxes import (
    CANONICAL_REGISTER,
    P_PLUS,
    STRUCTURAL_CHECKS,
    Branch,
    ESBox,
    apply_box,
    bell_from_ghz_box,
    canonical_input,
    ghz_box,
    ghz_state,
    random_es_box,
    validate,
    validate_es_box,
)
from esbox.cli import main
from esbox.comm import (
    build_report,
    dense_coding_confusion,
    dense_coding_cv,
    bell_from_ghz_cv,
    entropic_chain,
    ghz_randomization_signal,
    lemma1_suite,
    nonsignaling_check,
    theorem3_protocol,
)
from esbox.qcore import I2, DensityMatrix, partial_trace, random_density, trace_distance

PSI = np.array([1, 0, 0, 1]) / np.sqrt(2)


def ab_fidelity(box, rho) -> float:
    ab = partial_trace(apply_box(box, rho).output, ("A", "B")).matrix
    return float(np.real(PSI @ ab @ PSI))


@pytest.fixture(scope="module")
def twirled_report(twirled):
    """Full default budget: 1000 ensembles, 200 restarts x 300 iterations."""
    return build_report(twirled, "twirled-teleport", seed=42)


def test_c01_canonical_action(teleport, twirled, random_boxes, record):
    named = [teleport, twirled, random_es_box(4, 42), random_es_box(8, 42)]
    worst = min(ab_fidelity(b, canonical_input()) for b in named + random_boxes)
    record(1, "canonical input -> Psi+ (fidelity >= 1 - 1e-9)", 1 - worst <= 1e-9, f"worst infidelity {1 - worst:.2e}")


def test_c02_validator(teleport, twirled, random_boxes, record):
    constructed = [teleport, twirled, ghz_box(), bell_from_ghz_box()] + random_boxes
    worst = 0.0
    all_pass = True
    for box in constructed:
        rep = validate(box)
        all_pass &= rep.passed
        worst = max(worst, *(c.residual for c in rep.checks if c.name in STRUCTURAL_CHECKS))

    def failures(box):
        return [n for n in validate_es_box(box).failed if n in STRUCTURAL_CHECKS]

    product = ESBox(tuple(Branch(np.diag(np.eye(4)[i]), I2, I2) for i in range(4)))
    deleted = ESBox(teleport.branches[1:])
    nonunitary = ESBox((Branch(teleport.branches[0].e_c, np.diag([1.0, 0.5]), I2),) + teleport.branches[1:])
    mutants = {
        "max_entangled": failures(product),
        "completeness": failures(deleted),
        "unitary": failures(nonunitary),
    }
    exact = all(found == [intended] for intended, found in mutants.items())
    record(
        2,
        "validator: residuals <= 1e-10, mutants fail exactly the intended check",
        all_pass and worst <= 1e-10 and exact,
        f"max structural residual {worst:.2e}; mutant failures {mutants}",
    )


def test_c03_lemma1(record):
    s = lemma1_suite(1000, seed=42)
    ok = s.violations == 0 and s.max_gap <= 1e-9 and s.max_identity_residual <= 1e-9
    record(
        3,
        "dI <= dS over 1000 ensembles; identity within 1e-9",
        ok,
        f"violations {s.violations}, max dI-dS {s.max_gap:.3e}, identity residual {s.max_identity_residual:.2e}",
    )


def test_c04_cc_chain(teleport, random_boxes, record):
    tp = entropic_chain(teleport)
    chains = [entropic_chain(b) for b in random_boxes]
    min_h = min(c.entropy for c in chains)
    ok = (
        abs(tp.entropy - 2) <= 1e-9
        and tp.intact
        and min_h >= 2 - 1e-9
        and all(c.intact for c in chains)
    )
    record(
        4,
        "H = 2 for teleport, >= 2 for 200 boxes, chain H >= dS >= dI = 2",
        ok,
        f"teleport H={tp.entropy:.9f} dS={tp.delta_s:.9f} dI={tp.delta_i:.9f}; random min H {min_h:.9f}, "
        f"max link residual {max(c.residual for c in chains):.2e}",
    )


def test_c05_phase_flip_protocol(teleport, twirled, random_boxes, record):
    named = [teleport, twirled, random_es_box(4, 42), random_es_box(8, 42)]
    results = [theorem3_protocol(b) for b in named + random_boxes]
    overlap = max(r.orthogonality_residual for r in results)
    acc_err = max(abs(r.accessible - 1) for r in results)
    record(
        5,
        "<Psi+|rho1|Psi+> <= 1e-10 and accessible = 1 +- 1e-9",
        overlap <= 1e-10 and acc_err <= 1e-9,
        f"{len(results)} boxes, max overlap {overlap:.2e}, max |acc - 1| {acc_err:.2e}",
    )


@pytest.mark.slow
def test_c06_twirled_capacity_and_nonsignaling(twirled, twirled_report, record):
    iso = 0.0
    for seed in range(100):
        rho = random_density(16, rank=1 + seed % 16, seed=seed, register=CANONICAL_REGISTER)
        out = partial_trace(apply_box(twirled, rho).output, ("A", "B"))
        f = np.real(PSI @ out.matrix @ PSI)
        target = DensityMatrix(f * P_PLUS + (1 - f) * (np.eye(4) - P_PLUS) / 3, out.register)
        iso = max(iso, trace_distance(out, target))
    cap = twirled_report.capacity
    ns_a = nonsignaling_check(twirled, "C->A", trials=100, seed=42)
    ns_b = nonsignaling_check(twirled, "C->B", trials=100, seed=42)
    ns_ab = nonsignaling_check(twirled, "C->AB", trials=100, seed=42)
    ok = (
        iso <= 1e-10
        and cap.restarts == 200
        and cap.iterations == 300
        and 0.999 <= cap.value_bits <= 1 + 1e-6
        and ns_a.max_residual <= 1e-10
        and ns_b.max_residual <= 1e-10
        and ns_ab.is_signaling
    )
    record(
        6,
        "twirled box isotropic, capacity in [0.999, 1+1e-6], no C->A/C->B signal, C->AB signals",
        ok,
        f"isotropy {iso:.2e}; capacity {cap.value_bits:.12f} ({cap.restarts}x{cap.iterations}); "
        f"C->A {ns_a.max_residual:.2e}, C->B {ns_b.max_residual:.2e}, C->AB {ns_ab.max_residual:.3f}",
    )


def test_c07_dense_coding(teleport, twirled, record):
    confusion = dense_coding_confusion(teleport)
    cv = dense_coding_cv(teleport)
    cv_tw = dense_coding_cv(twirled)
    ok = np.allclose(confusion, np.eye(4), atol=1e-9) and abs(cv - 2) <= 1e-6 and cv_tw < 2
    record(7, "dense coding: identity confusion, 2 bits; twirled < 2", ok, f"teleport {cv:.9f} bits, twirled {cv_tw:.9f} bits")


@pytest.mark.slow
def test_c08_irreversibility(twirled_report, record):
    claims = {c.id: c for c in twirled_report.verdicts}
    cc = twirled_report.cc_lower_bound_bits
    cv_low = twirled_report.cv_lower_bound_bits
    cv_high = twirled_report.capacity_upper_bound_bits
    ok = (
        abs(cc - 2) <= 1e-9
        and abs(cv_low - 1) <= 1e-9
        and 0.999 <= cv_high <= 1 + 1e-6
        and cc > cv_high
        and twirled_report.passed
        and claims["IRR"].passed
    )
    record(
        8,
        "twirled report: CC chain = 2 > CV = 1 (protocol and capacity)",
        ok,
        f"CC {cc:.9f}, CV lower {cv_low:.9f}, CV upper {cv_high:.9f}, "
        f"claims {', '.join(f'{k}:{c.status}' for k, c in claims.items())}",
    )


def test_c09_subprimitives(record):
    g = ghz_box()
    out = apply_box(g, canonical_input())
    target = ghz_state(("A", "B", "C1")).amplitudes
    fid = float(np.real(target @ out.output.reorder(("A", "B", "C1")).matrix @ target))
    holevo = ghz_randomization_signal().holevo
    b = bell_from_ghz_box()
    b_out = apply_box(b, b.canonical_input())
    cv = bell_from_ghz_cv()
    ok = (
        fid >= 1 - 1e-10
        and out.transcript.broadcast_bits == 1
        and abs(holevo - 0.311278) <= 1e-6
        and abs(b_out.transcript.outcome_entropy - 1) <= 1e-9
        and abs(cv - 1) <= 1e-9
    )
    record(
        9,
        "GHZ box fidelity, 1 bit, Holevo 0.311278; Bell-from-GHZ CC = CV = 1",
        ok,
        f"GHZ fidelity {fid:.12f}, broadcast {out.transcript.broadcast_bits} bit, Holevo {holevo:.9f}; "
        f"Bell-from-GHZ entropy {b_out.transcript.outcome_entropy:.9f}, CV {cv:.9f}",
    )


@pytest.mark.slow
def test_c10_determinism(tmp_path, record):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    codes = [main(["report", "--box", "teleport", "--seed", "42", "--format", "json", "--out", str(p)]) for p in paths]
    same = paths[0].read_bytes() == paths[1].read_bytes()
    json.loads(paths[0].read_text())
    record(10, "identical seeds give byte-identical report JSON", same and codes == [0, 0], f"exit codes {codes}, identical={same}")
