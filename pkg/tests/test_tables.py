"""Table derivations, golden diffs, and cross-table consistency."""
from dataclasses import replace
from itertools import product

import numpy as np

from qsts import (
    BELL_OUTCOMES,
    CorrectionOp,
    Forced,
    ProtocolConfig,
    SignOutcome,
    compute_correction,
    derive_coefficient_table,
    derive_correction_map,
    derive_two_agent_table,
    diff_against_golden,
    execute,
    load_golden_coefficients,
    load_golden_corrections,
    load_golden_two_agent,
    random_secret,
)

PLUS, MINUS = SignOutcome.PLUS, SignOutcome.MINUS


def by_key(rows):
    return {row.key: row for row in rows}


class TestGoldenFiles:
    def test_two_agent_rows_parse(self):
        rows = load_golden_two_agent()
        assert len(rows) == 16
        assert len({row.key for row in rows}) == 16

    def test_coefficient_rows_parse(self):
        rows = load_golden_coefficients()
        assert len(rows) == 16

    def test_correction_entries_parse(self):
        entries = load_golden_corrections()
        assert len(entries) == 4


class TestDeriveTwoAgent:
    def test_all_plus_class(self):
        row = by_key(derive_two_agent_table())[(0, 0, 1, 1)]
        assert row.state_slots == ("+a", "+b", "+c", "+d")
        assert row.ops == (CorrectionOp.U0, CorrectionOp.U0)

    def test_mixed_class(self):
        row = by_key(derive_two_agent_table())[(1, 0, -1, 1)]
        # Receiver holds a|10> + b|11> - c|00> - d|01>.
        assert row.state_slots == ("-c", "-d", "+a", "+b")
        assert row.ops == (CorrectionOp.U3, CorrectionOp.U0)

    def test_all_minus_class(self):
        row = by_key(derive_two_agent_table())[(1, 1, -1, -1)]
        assert row.state_slots == ("+d", "-c", "-b", "+a")
        assert row.ops == (CorrectionOp.U3, CorrectionOp.U3)

    def test_signed_permutation_closure(self):
        for row in derive_two_agent_table():
            letters = sorted(slot[1] for slot in row.state_slots)
            assert letters == ["a", "b", "c", "d"]
            assert all(slot[0] in "+-" for slot in row.state_slots)


class TestDeriveCoefficients:
    def test_specific_rows(self):
        rows = by_key(derive_coefficient_table())
        assert rows[(0, 0, 1, 1)].coefficients == ("+a", "+b", "+c", "+d")
        assert rows[(0, 1, 1, -1)].coefficients == ("-b", "+a", "-d", "+c")
        assert rows[(1, 1, -1, -1)].coefficients == ("+d", "-c", "-b", "+a")

    def test_independent_of_controller_count(self):
        assert derive_coefficient_table(n=1) == derive_coefficient_table(n=2)


class TestDeriveCorrectionMap:
    def test_entries(self):
        assert derive_correction_map() == [
            (0, 1, CorrectionOp.U0),
            (0, -1, CorrectionOp.U1),
            (1, 1, CorrectionOp.U2),
            (1, -1, CorrectionOp.U3),
        ]

    def test_seed_independent(self):
        assert derive_correction_map(seed=1) == derive_correction_map(seed=2)


class TestDiff:
    def test_clean_build_has_no_mismatches(self):
        report = diff_against_golden()
        assert report.rows_checked == 36
        assert report.mismatches == ()
        assert report.ok

    def test_fresh_seed_still_matches(self):
        report = diff_against_golden(correction_seed=777)
        assert report.ok

    def test_injected_fault_detected(self):
        golden = load_golden_two_agent()
        # Corrupt the second row, keyed (0, 0, +, -).
        assert golden[1].key == (0, 0, 1, -1)
        golden[1] = replace(golden[1], ops=(CorrectionOp.U1, CorrectionOp.U1))
        report = diff_against_golden(golden_two_agent=golden)
        assert len(report.mismatches) == 1
        assert report.mismatches[0].table == "two_agent"
        assert report.mismatches[0].key == (0, 0, 1, -1)
        assert not report.ok

    def test_missing_golden_row_detected(self):
        report = diff_against_golden(golden_coefficients=load_golden_coefficients()[1:])
        assert len(report.mismatches) == 1
        assert report.mismatches[0].golden == "<missing>"


class TestCrossTableConsistency:
    def test_controller_signs_modulate_coefficients(self):
        # For every measurement class, flipping t controllers on group 1 and
        # q on group 2 must multiply the table coefficients by
        # (1, (-1)^q, (-1)^t, (-1)^(t+q)); checked by direct simulation at
        # n=2 for all (t, q), including a scattered minus pattern.
        secret = random_secret(2, np.random.default_rng(3))
        a, b, c, d = secret.amplitudes
        values = {"a": a, "b": b, "c": c, "d": d}
        coefficients = by_key(derive_coefficient_table())

        def sign_row(count, scattered):
            if count == 0:
                return [PLUS, PLUS]
            if count == 2:
                return [MINUS, MINUS]
            return [PLUS, MINUS] if scattered else [MINUS, PLUS]

        for bell1, bell2 in product(BELL_OUTCOMES, repeat=2):
            tab = coefficients[(bell1.bit_value, bell2.bit_value, bell1.parity, bell2.parity)]
            base = np.array(
                [(1 if sym[0] == "+" else -1) * values[sym[1]] for sym in tab.coefficients]
            )
            for t, q, scattered in product(range(3), range(3), (False, True)):
                rows = [sign_row(t, scattered), sign_row(q, scattered)]
                config = ProtocolConfig(
                    m=2, n=2,
                    outcome_policy=Forced.from_parts((bell1, bell2), rows),
                )
                result = execute(config, secret)
                expected = base * np.array(
                    [1, (-1) ** q, (-1) ** t, (-1) ** (t + q)]
                )
                np.testing.assert_allclose(
                    result.pre_correction.amplitudes, expected, atol=1e-12
                )

    def test_two_agent_table_recovered_from_coefficients(self):
        # Composing the coefficient rows with single-controller signs and the
        # per-qubit correction map must reproduce the two-agent table exactly.
        flip = {"+": "-", "-": "+"}
        coefficients = by_key(load_golden_coefficients())
        corrections = {(v, p): op for v, p, op in load_golden_corrections()}
        two_agent = by_key(load_golden_two_agent())
        for (v1, v2, pb1, pb2), row in coefficients.items():
            for s1, s2 in product((1, -1), repeat=2):
                key = (v1, v2, pb1 * s1, pb2 * s2)
                multipliers = (1, s2, s1, s1 * s2)
                slots = tuple(
                    sym if mult > 0 else flip[sym[0]] + sym[1]
                    for sym, mult in zip(row.coefficients, multipliers)
                )
                expected = two_agent[key]
                ray_matches = slots in (
                    expected.state_slots,
                    tuple(flip[s[0]] + s[1] for s in expected.state_slots),
                )
                assert ray_matches, (key, slots, expected.state_slots)
                if s1 == s2 == 1:
                    assert slots == expected.state_slots
                assert expected.ops == (
                    corrections[(v1, pb1 * s1)],
                    corrections[(v2, pb2 * s2)],
                )

    def test_derived_ops_agree_with_compute_correction(self):
        for row in derive_two_agent_table():
            assert row.ops == (
                compute_correction(row.v1, row.p1),
                compute_correction(row.v2, row.p2),
            )
