"""Command-line interface: protocol runs, verification suites, metrics.

File formats are JSON. A secret file is {"m": ..., "amplitudes": [[re, im],
...]} with 2**m amplitude pairs; a transcript file serializes the full
Transcript plus the tool version. Verification suites print one JSON object
per line on stdout.

Exit codes: 0 verified / fidelity reached, 1 verification or fidelity
failure, 2 invalid input (including capacity errors).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import QstsError
from .metrics import efficiency, threshold_success
from .protocol import (
    ENUMERATE,
    SAMPLE,
    Forced,
    ProtocolConfig,
    SecretState,
    Transcript,
    enumerate_branches,
    random_secret,
    run_protocol,
)
from .statevector import BellOutcome, CorrectionOp, SignOutcome
from .tables import diff_against_golden

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2

FIDELITY_PASS = 1 - 1e-9
PROBABILITY_ATOL = 1e-9

# Secret-file load policy: accept silently up to this norm deviation...
SECRET_NORM_WARN = 1e-6
# ...renormalize with a warning up to this one, reject beyond it.
SECRET_NORM_REJECT = 1e-3

_ENUMERATE_GRID = tuple(
    (m, n) for m in (1, 2, 3) for n in (1, 2, 3)
)
_THRESHOLD_GRID = tuple((m, n) for m in (1, 2, 3) for n in (1, 2))
_THRESHOLD_SEEDS = 10


# ---------------------------------------------------------------------------
# Secret and transcript files
# ---------------------------------------------------------------------------

def save_secret(path: str, secret: SecretState) -> None:
    data = {
        "m": secret.m,
        "amplitudes": [[z.real, z.imag] for z in secret.amplitudes],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_secret(path: str) -> SecretState:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    m = data["m"]
    pairs = data["amplitudes"]
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"secret file: m must be a positive integer, got {m!r}")
    if len(pairs) != 1 << m:
        raise ValueError(
            f"secret file: expected {1 << m} amplitudes for m={m}, got {len(pairs)}"
        )
    amps = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > SECRET_NORM_REJECT:
        raise ValueError(f"secret file: norm {norm!r} is too far from 1")
    if abs(norm**2 - 1.0) > 1e-9:
        if abs(norm - 1.0) > SECRET_NORM_WARN:
            print(
                f"warning: secret norm {norm!r} deviates from 1; renormalizing",
                file=sys.stderr,
            )
        amps = amps / norm
    return SecretState(amps)


def _policy_to_json(policy):
    if isinstance(policy, Forced):
        return {"forced": [o.value for o in policy.outcomes]}
    return policy


def _policy_from_json(value, m: int):
    if isinstance(value, str):
        return value
    names = value["forced"]
    outcomes = tuple(
        BellOutcome(name) if k < m else SignOutcome(name)
        for k, name in enumerate(names)
    )
    return Forced(outcomes)


def transcript_to_dict(transcript: Transcript) -> dict:
    config = transcript.config
    return {
        "version": __version__,
        "config": {
            "m": config.m,
            "n": config.n,
            "receiver": config.receiver,
            "seed": config.seed,
            "outcome_policy": _policy_to_json(config.outcome_policy),
        },
        "bell_outcomes": [o.value for o in transcript.bell_outcomes],
        "sign_outcomes": [[s.value for s in row] for row in transcript.sign_outcomes],
        "minus_counts": list(transcript.minus_counts),
        "parities": ["+" if p > 0 else "-" for p in transcript.parities],
        "corrections": [op.value for op in transcript.corrections],
        "branch_probability": transcript.branch_probability,
        "fidelity": transcript.fidelity,
        "classical_bits": transcript.classical_bits,
    }


def transcript_from_dict(data: dict) -> Transcript:
    cfg = data["config"]
    config = ProtocolConfig(
        m=cfg["m"],
        n=cfg["n"],
        receiver=cfg["receiver"],
        seed=cfg["seed"],
        outcome_policy=_policy_from_json(cfg["outcome_policy"], cfg["m"]),
    )
    return Transcript(
        config=config,
        bell_outcomes=tuple(BellOutcome(name) for name in data["bell_outcomes"]),
        sign_outcomes=tuple(
            tuple(SignOutcome(s) for s in row) for row in data["sign_outcomes"]
        ),
        minus_counts=tuple(data["minus_counts"]),
        parities=tuple(1 if p == "+" else -1 for p in data["parities"]),
        corrections=tuple(CorrectionOp(op) for op in data["corrections"]),
        branch_probability=data["branch_probability"],
        fidelity=data["fidelity"],
        classical_bits=data["classical_bits"],
    )


def save_transcript(path: str, transcript: Transcript) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(transcript_to_dict(transcript), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_transcript(path: str) -> Transcript:
    with open(path, "r", encoding="utf-8") as fh:
        return transcript_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Flag parsing helpers
# ---------------------------------------------------------------------------

def parse_forced(text: str, m: int, n: int) -> Forced:
    """Parse the --forced grammar: m Bell outcome names comma-separated, then
    one ';'-separated row of m signs per controller."""
    parts = [part.strip() for part in text.split(";")]
    if len(parts) != 1 + n:
        raise ValueError(
            f"--forced needs the Bell outcomes plus {n} controller rows, got {len(parts)} sections"
        )
    bell_names = [tok.strip() for tok in parts[0].split(",")]
    if len(bell_names) != m:
        raise ValueError(f"--forced needs {m} Bell outcomes, got {len(bell_names)}")
    try:
        bells = [BellOutcome(name) for name in bell_names]
    except ValueError:
        raise ValueError(
            f"Bell outcomes must be one of {[o.value for o in BellOutcome]}, got {bell_names}"
        ) from None
    rows = []
    for row_text in parts[1:]:
        signs = [tok.strip() for tok in row_text.split(",")]
        if len(signs) != m:
            raise ValueError(f"each controller row needs {m} signs, got {row_text!r}")
        try:
            rows.append([SignOutcome(s) for s in signs])
        except ValueError:
            raise ValueError(f"signs must be '+' or '-', got {row_text!r}") from None
    # Rows arrive per controller; the flat policy wants group-major order.
    sign_rows = [[rows[slot][i] for slot in range(n)] for i in range(m)]
    return Forced.from_parts(bells, sign_rows)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    policy = parse_forced(args.forced, args.m, args.n) if args.forced else SAMPLE
    config = ProtocolConfig(
        m=args.m, n=args.n, receiver=args.receiver, seed=args.seed, outcome_policy=policy
    )
    if args.secret:
        secret = load_secret(args.secret)
        if secret.m != args.m:
            raise ValueError(f"secret file has m={secret.m}, flags say m={args.m}")
    else:
        secret = random_secret(args.m, np.random.default_rng(args.seed))
    transcript = run_protocol(config, secret)
    if args.out:
        save_transcript(args.out, transcript)
    print(f"fidelity={transcript.fidelity!r}")
    print(f"branch_probability={transcript.branch_probability!r}")
    return EXIT_OK if transcript.fidelity >= FIDELITY_PASS else EXIT_FAILURE


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def _verify_tables() -> bool:
    report = diff_against_golden()
    record = {
        "suite": "tables",
        "rows_checked": report.rows_checked,
        "mismatches": len(report.mismatches),
        "ok": report.ok,
    }
    if report.mismatches:
        record["details"] = [
            {
                "table": mm.table,
                "key": list(mm.key),
                "derived": mm.derived,
                "golden": mm.golden,
            }
            for mm in report.mismatches
        ]
    _emit(record)
    return report.ok


def _verify_enumerate(grid, seed: int) -> bool:
    all_ok = True
    for m, n in grid:
        config = ProtocolConfig(m=m, n=n, outcome_policy=ENUMERATE)
        secret = random_secret(m, np.random.default_rng(seed))
        transcripts = enumerate_branches(config, secret)
        target = 1.0 / config.branch_count
        min_fidelity = min(t.fidelity for t in transcripts)
        prob_sum = math.fsum(t.branch_probability for t in transcripts)
        max_prob_err = max(abs(t.branch_probability - target) for t in transcripts)
        ok = (
            len(transcripts) == config.branch_count
            and min_fidelity >= FIDELITY_PASS
            and abs(prob_sum - 1.0) <= PROBABILITY_ATOL
            and max_prob_err <= PROBABILITY_ATOL
        )
        _emit(
            {
                "suite": "enumerate",
                "m": m,
                "n": n,
                "branches": len(transcripts),
                "min_fidelity": min_fidelity,
                "probability_sum": prob_sum,
                "max_probability_error": max_prob_err,
                "ok": ok,
            }
        )
        all_ok = all_ok and ok
    return all_ok


def _verify_threshold(grid, seed: int) -> bool:
    all_ok = True
    for m, n in grid:
        expected = Fraction(1, 2**m)
        checks = 0
        ok = True
        for offset in range(_THRESHOLD_SEEDS):
            secret = random_secret(m, np.random.default_rng(seed + offset))
            for slot in range(1, n + 1):
                ok = ok and threshold_success(m, n, secret, withheld=slot) == expected
                checks += 1
        _emit(
            {
                "suite": "threshold",
                "m": m,
                "n": n,
                "checks": checks,
                "expected": str(expected),
                "success": str(expected) if ok else "mismatch",
                "ok": ok,
            }
        )
        all_ok = all_ok and ok
    return all_ok


def cmd_verify(args) -> int:
    ok = True
    if args.suite in ("tables", "all"):
        ok = _verify_tables() and ok
    if args.suite in ("enumerate", "all"):
        if args.m is not None and args.n is not None:
            grid = [(args.m, args.n)]
        else:
            grid = list(_ENUMERATE_GRID)
        ok = _verify_enumerate(grid, args.seed) and ok
    if args.suite in ("threshold", "all"):
        if args.m is not None and args.n is not None:
            grid = [(args.m, args.n)]
        else:
            grid = list(_THRESHOLD_GRID)
        ok = _verify_threshold(grid, args.seed) and ok
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_metrics(args) -> int:
    report = efficiency(args.m, args.n)
    print(f"q_u={report.useful_qubits}")
    print(f"q_t={report.transmitted_qubits}")
    print(f"b_t={report.classical_bits}")
    print(f"eta_q={report.qubit_efficiency}")
    print(f"eta_t={report.total_efficiency}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsts",
        description="Share an m-qubit secret among n+1 agents over GHZ channels "
        "and verify the protocol's tables, reconstruction, and threshold claims.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the protocol once and report fidelity")
    run.add_argument("--m", type=int, required=True, help="secret qubits")
    run.add_argument("--n", type=int, required=True, help="number of controllers")
    run.add_argument("--seed", type=int, default=0, help="RNG seed (outcomes and default secret)")
    run.add_argument("--secret", help="secret file; omitted means a seeded random secret")
    run.add_argument("--receiver", type=int, default=None, help="receiving agent in [1, n+1]")
    run.add_argument(
        "--forced",
        help="force outcomes: m Bell names comma-separated, then one ';'-separated "
        "row of m signs per controller, e.g. \"PhiPlus,PhiPlus;+,-\"",
    )
    run.add_argument("--out", help="write the transcript file here")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument(
        "--suite", required=True, choices=["tables", "enumerate", "threshold", "all"]
    )
    verify.add_argument("--m", type=int, default=None)
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(func=cmd_verify)

    metrics = sub.add_parser("metrics", help="print exact efficiency figures")
    metrics.add_argument("--n", type=int, required=True, help="number of controllers")
    metrics.add_argument("--m", type=int, default=1, help="secret qubits")
    metrics.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QstsError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
