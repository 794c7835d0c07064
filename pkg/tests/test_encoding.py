"""Logical processes: encoding, concatenation, pairing strategies, majority."""

from itertools import product

import pytest

from ftsim import (
    Basis,
    ConfigurationError,
    CostLedger,
    CrashStopViolation,
    EncodingError,
    PairingStrategy,
    RngStream,
    concatenate,
    decode_majority,
    encode,
    init_process,
    logical_communicate,
    logical_local_op,
    readout_logical,
    terminate,
)

from conftest import flags, fresh_triple, set_bit, set_phase

NOT = {0: 1, 1: 0}


def logical(label=0, n=3, rng=None):
    rng = rng or RngStream(0)
    return encode([init_process(label, 0.0, rng) for _ in range(n)])


def logical_level2(label=0, rng=None):
    rng = rng or RngStream(0)
    return concatenate([logical(label, rng=rng) for _ in range(3)])


class TestEncode:
    def test_three_fresh_zeros(self, rng):
        lp = logical(0)
        assert lp.level == 1 and lp.n == 3 and lp.label == 0
        assert len(lp.leaves()) == 3

    def test_five_components(self, rng):
        lp = logical(1, n=5)
        assert lp.n == 5 and lp.label == 1

    def test_mixed_labels_rejected(self, rng):
        procs = [init_process(0, 0.0, rng), init_process(1, 0.0, rng),
                 init_process(0, 0.0, rng)]
        with pytest.raises(EncodingError):
            encode(procs)

    def test_even_redundancy_rejected(self, rng):
        with pytest.raises(ConfigurationError):
            encode([init_process(0, 0.0, rng) for _ in range(4)])

    def test_reusing_a_process_rejected(self, rng):
        # The only way to "copy" a label into the encoding is to pass the
        # same process twice; that is refused.
        a, b = init_process(0, 0.0, rng), init_process(0, 0.0, rng)
        with pytest.raises(EncodingError):
            encode([a, b, a])

    def test_terminated_component_rejected(self, rng):
        procs = fresh_triple()
        terminate(procs[0], Basis.BIT, rng)
        with pytest.raises(CrashStopViolation):
            encode(procs)


class TestConcatenate:
    def test_level2_has_nine_leaves(self):
        lp = logical_level2()
        assert lp.level == 2 and lp.n == 3
        assert len(lp.leaves()) == 9
        assert all(child.level == 1 for child in lp.children)

    def test_mismatched_levels_rejected(self):
        rng = RngStream(0)
        level1 = logical(rng=rng)
        level2 = logical_level2(rng=rng)
        with pytest.raises(EncodingError):
            concatenate([level1, level1, level2])

    def test_mixed_logical_labels_rejected(self):
        with pytest.raises(EncodingError):
            concatenate([logical(0), logical(1), logical(0)])


class TestLogicalLocalOp:
    def test_identity(self, rng):
        lp = logical(0)
        logical_local_op({0: 0, 1: 1}, lp, rng)
        assert lp.label == 0
        assert all(p._label == 0 for p in lp.leaves())

    def test_not_flips_every_leaf(self, rng):
        lp = logical(0)
        logical_local_op(NOT, lp, rng)
        assert lp.label == 1
        assert all(p._label == 1 for p in lp.leaves())

    def test_involution(self, rng):
        lp = logical(0)
        logical_local_op(NOT, lp, rng)
        logical_local_op(NOT, lp, rng)
        assert lp.label == 0
        assert all(p._label == 0 for p in lp.leaves())

    def test_terminated_leaf_rejected(self, rng):
        lp = logical(0)
        terminate(lp.leaves()[1], Basis.BIT, rng)
        with pytest.raises(CrashStopViolation):
            logical_local_op(NOT, lp, rng)


class TestLogicalCommunicate:
    def test_fanout_amplifies_source_fault(self, rng, ledger):
        control, target = logical(0), logical(0)
        set_bit(control.leaves()[0])
        logical_communicate(control, target, PairingStrategy.fanout(0), ledger, rng)
        assert [flags(p)[0] for p in target.leaves()] == [True, True, True]
        assert ledger.heads_sent == 3

    def test_transversal_contains_source_fault(self, rng, ledger):
        control, target = logical(0), logical(0)
        set_bit(control.leaves()[0])
        logical_communicate(control, target, PairingStrategy.transversal(), ledger, rng)
        assert [flags(p)[0] for p in target.leaves()] == [True, False, False]
        assert ledger.heads_sent <= 1

    def test_no_faults_costs_nothing(self, rng, ledger):
        control, target = logical(0), logical(0)
        logical_communicate(control, target, PairingStrategy.transversal(), ledger, rng)
        assert ledger.heads_sent == 0
        assert all(flags(p) == (False, False) for p in target.leaves())

    def test_shape_mismatch_rejected(self, rng, ledger):
        with pytest.raises(EncodingError):
            logical_communicate(logical(0), logical(0, n=5),
                                PairingStrategy.transversal(), ledger, rng)
        with pytest.raises(EncodingError):
            logical_communicate(logical(0), logical_level2(),
                                PairingStrategy.transversal(), ledger, rng)

    def test_fanout_needs_level_one(self, rng, ledger):
        with pytest.raises(ConfigurationError):
            logical_communicate(logical_level2(), logical_level2(),
                                PairingStrategy.fanout(0), ledger, rng)

    def test_fanout_source_out_of_range(self, rng, ledger):
        with pytest.raises(ConfigurationError):
            logical_communicate(logical(0), logical(0),
                                PairingStrategy.fanout(3), ledger, rng)

    def test_e_operation_acts_transversally_on_labels(self, rng, ledger):
        control, target = logical(1), logical(0)
        logical_communicate(control, target, PairingStrategy.transversal(), ledger, rng)
        assert target.label == 1
        assert all(p._label == 1 for p in target.leaves())

    def test_descriptor_records_pairs(self, rng, ledger):
        control, target = logical(0), logical(0)
        op = logical_communicate(control, target, PairingStrategy.fanout(1), ledger, rng)
        assert op.pairs == tuple((control.id, 1, target.id, j) for j in range(3))
        op2 = logical_communicate(logical(0), logical(0),
                                  PairingStrategy.transversal(), ledger, rng)
        assert [(i, j) for _, i, _, j in op2.pairs] == [(0, 0), (1, 1), (2, 2)]

    def test_transversal_fault_containment_exhaustive(self):
        """A single fault (per flag kind) never multiplies within an operand
        under transversal pairing.

        One fault of each kind somewhere across the two operands is the
        provable family: with one fault of the same kind in *each* operand,
        the propagation rules themselves can legitimately leave two faults
        in one operand (control bit at 0 plus target bit at 1 ends with
        target bits at 0 and 1), so that stronger reading is not tested.
        """
        spots = [None] + [(operand, i) for operand in (0, 1) for i in range(3)]
        for bit_spot, phase_spot in product(spots, repeat=2):
            rng = RngStream(0)
            ledger = CostLedger()
            operands = (logical(0, rng=rng), logical(0, rng=rng))
            if bit_spot is not None:
                set_bit(operands[bit_spot[0]].leaves()[bit_spot[1]])
            if phase_spot is not None:
                set_phase(operands[phase_spot[0]].leaves()[phase_spot[1]])
            logical_communicate(operands[0], operands[1],
                                PairingStrategy.transversal(), ledger, rng)
            for operand in operands:
                bits = sum(p._box.bit_fault for p in operand.leaves())
                phases = sum(p._box.phase_fault for p in operand.leaves())
                assert bits <= 1 and phases <= 1

    def test_transversal_never_costs_more_than_fanout(self):
        """Cost dominance over the fan-out scenario family: the control's
        bit-faulty set is empty or exactly the fan-out source (other flag
        placements are free)."""
        placements = [None, 0, 1, 2]
        for source_faulty in (False, True):
            for tb, cp, tp in product(placements, repeat=3):
                costs = {}
                for variant in ("fanout", "transversal"):
                    rng = RngStream(0)
                    ledger = CostLedger()
                    control, target = logical(0, rng=rng), logical(0, rng=rng)
                    if source_faulty:
                        set_bit(control.leaves()[0])
                    if tb is not None:
                        set_bit(target.leaves()[tb])
                    if cp is not None:
                        set_phase(control.leaves()[cp])
                    if tp is not None:
                        set_phase(target.leaves()[tp])
                    strategy = (PairingStrategy.fanout(0) if variant == "fanout"
                                else PairingStrategy.transversal())
                    logical_communicate(control, target, strategy, ledger, rng)
                    costs[variant] = ledger.heads_sent
                assert costs["transversal"] <= costs["fanout"]


class TestDecodeMajority:
    def test_unanimous(self):
        assert decode_majority([0, 0, 0]) == (0, [])

    def test_single_minority(self):
        assert decode_majority([0, 1, 0]) == (0, [1])

    def test_five_votes(self):
        assert decode_majority([1, 0, 1, 1, 0]) == (1, [1, 4])

    def test_even_count_rejected(self):
        with pytest.raises(ConfigurationError):
            decode_majority([0, 1])

    @pytest.mark.parametrize("n", [3, 5, 7, 9])
    def test_corrects_exactly_up_to_half_minus_one(self, n):
        """Brute force over all 2^n flip patterns: the encoded value is
        recovered iff at most (n-1)/2 positions flipped."""
        for encoded in (0, 1):
            for pattern in range(1 << n):
                values = [encoded ^ ((pattern >> i) & 1) for i in range(n)]
                weight = bin(pattern).count("1")
                majority, minority = decode_majority(values)
                recovered = majority == encoded
                assert recovered == (weight <= (n - 1) // 2)
                if recovered:
                    assert sorted(minority) == [i for i in range(n)
                                                if (pattern >> i) & 1]


class TestReadoutLogical:
    def test_clean_zero(self, rng):
        assert readout_logical(logical(0), Basis.BIT, rng) == 0

    def test_single_fault_overridden_by_majority(self, rng):
        lp = logical(0)
        set_bit(lp.leaves()[1])
        assert readout_logical(lp, Basis.BIT, rng) == 0

    def test_two_faults_defeat_majority(self, rng):
        lp = logical(0)
        set_bit(lp.leaves()[0])
        set_bit(lp.leaves()[2])
        assert readout_logical(lp, Basis.BIT, rng) == 1

    def test_level2_recursive_majority(self, rng):
        lp = logical_level2(0)
        # Two corrupted leaves inside one block spoil only that block.
        set_bit(lp.leaves()[0])
        set_bit(lp.leaves()[1])
        assert readout_logical(lp, Basis.BIT, rng) == 0

    def test_level2_two_bad_blocks_fail(self, rng):
        lp = logical_level2(0)
        for leaf in (0, 1, 3, 4):
            set_bit(lp.leaves()[leaf])
        assert readout_logical(lp, Basis.BIT, rng) == 1

    def test_partially_terminated_tree_rejected(self, rng):
        lp = logical(0)
        terminate(lp.leaves()[0], Basis.BIT, rng)
        with pytest.raises(CrashStopViolation):
            readout_logical(lp, Basis.BIT, rng)


class TestPairwiseFailureProduct:
    def test_two_components_fail_together_at_product_rate(self):
        import math
        rng = RngStream(4242)
        n, tau = 1_000_000, 0.05
        a = init_process(0, 0.0, rng)
        b = init_process(0, 0.0, rng)
        a._box.tau = tau
        b._box.tau = tau
        both = 0
        for _ in range(n):
            a._box.bit_fault = False
            b._box.bit_fault = False
            from ftsim import toss
            toss(a, rng)
            toss(b, rng)
            both += a._box.bit_fault and b._box.bit_fault
        expected = tau * tau
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert abs(both / n - expected) <= 3 * sigma
