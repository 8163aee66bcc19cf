import numpy as np
import pytest

from lutbnn import core
from lutbnn.core import (
    ActivationThresholds,
    ClassLabel,
    Genome,
    NetworkShape,
    activate,
    cam_multiply,
    classify,
    first_layer_op,
    forward,
    forward_batch,
    genome_from_text,
    genome_to_text,
    nonzero_weight_count,
    quantize_12_to_7,
    quantize_frame,
    thresholds_for,
    tree_sum,
)


def random_genome(shape, seed=0):
    rng = np.random.default_rng(seed)
    return Genome(shape, rng.integers(0, 4, shape.total_weights, dtype=np.uint8))


class TestQuantize:
    def test_endpoints(self):
        assert quantize_12_to_7(0) == 0
        assert quantize_12_to_7(4095) == 127

    def test_example(self):
        # oracle: integer division by 32
        assert quantize_12_to_7(64) == 64 // 32 == 2

    def test_exhaustive_and_monotone(self):
        vals = [quantize_12_to_7(r) for r in range(4096)]
        assert vals == [r // 32 for r in range(4096)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            quantize_12_to_7(4096)
        with pytest.raises(ValueError):
            quantize_12_to_7(-1)

    def test_frame_matches_scalar(self):
        raw = np.arange(0, 4096, 7)
        assert quantize_frame(raw).tolist() == [int(r) // 32 for r in raw]


CAM_EXPECTED = [
    [0, 0, 0, 0],
    [0, 1, 2, 3],
    [1, 2, 3, 3],
    [3, 2, 1, 0],
]


class TestCamMultiply:
    def test_all_16_entries(self):
        for w in range(4):
            for x in range(4):
                assert cam_multiply(w, x) == CAM_EXPECTED[w][x]

    def test_negation_involution(self):
        for x in range(4):
            assert cam_multiply(3, cam_multiply(3, x)) == x

    def test_rejects_bad_codes(self):
        with pytest.raises(ValueError):
            cam_multiply(4, 0)
        with pytest.raises(ValueError):
            cam_multiply(0, 5)


class TestFirstLayerOp:
    def test_block(self):
        assert first_layer_op(0, 99) == 0

    def test_incr_saturates(self):
        assert first_layer_op(2, 100) == min(100 * 2, 127) == 127

    def test_neg_is_7bit_complement(self):
        assert first_layer_op(3, 5) == 127 - 5 == 122

    def test_exhaustive_definition_and_closure(self):
        for x in range(128):
            expected = {0: 0, 1: x, 2: min(2 * x, 127), 3: 127 - x}
            for w in range(4):
                r = first_layer_op(w, x)
                assert r == expected[w]
                assert 0 <= r <= 127


class TestTreeSum:
    def test_small(self):
        assert tree_sum([1, 2, 3, 4]) == (10, 2)

    def test_singleton(self):
        assert tree_sum([7]) == (7, 0)

    def test_worst_case_first_layer(self):
        total, depth = tree_sum([127] * 128)
        assert total == sum([127] * 128) == 16256
        assert depth == 7

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            tree_sum([])

    def test_matches_sequential_sum(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 257))
            vals = rng.integers(0, 128, n).tolist()
            total, depth = tree_sum(vals)
            assert total == sum(vals)
            assert depth == int(np.ceil(np.log2(n))) if n > 1 else depth == 0


class TestThresholds:
    def test_hidden_example(self):
        assert thresholds_for(4, 3) == ActivationThresholds(3, 6, 9)

    def test_degenerate(self):
        assert thresholds_for(0, 3) == ActivationThresholds(0, 0, 0)

    def test_first_layer_full_fanin(self):
        assert thresholds_for(128, 127) == ActivationThresholds(4064, 8128, 12192)

    def test_quartile_formula(self):
        for nz in range(1, 40):
            for mx in (3, 127):
                th = thresholds_for(nz, mx)
                s = nz * mx
                assert (th.t1, th.t2, th.t3) == (
                    int(np.ceil(s / 4)), int(np.ceil(s / 2)),
                    int(np.ceil(3 * s / 4)))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            thresholds_for(-1, 3)


class TestActivate:
    def test_bins(self):
        th = ActivationThresholds(3, 6, 9)
        assert activate(0, th) == 0
        assert activate(6, th) == 2  # lower-inclusive boundary
        assert activate(12, th) == 3

    def test_enumerated_bins(self):
        th = ActivationThresholds(3, 6, 9)
        for s in range(13):
            expected = 0 if s < 3 else 1 if s < 6 else 2 if s < 9 else 3
            assert activate(s, th) == expected

    def test_monotone(self):
        th = ActivationThresholds(5, 11, 17)
        vals = [activate(s, th) for s in range(25)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_degenerate_thresholds(self):
        th = ActivationThresholds(0, 0, 0)
        assert activate(0, th) == 3
        assert activate(100, th) == 3


class TestClassify:
    def test_paper_convention(self):
        assert classify([3, 1]) is ClassLabel.GOOD
        assert classify([0, 2]) is ClassLabel.UGLY
        assert classify([2, 3]) is ClassLabel.EITHER

    def test_truth_table(self):
        for a in range(4):
            for b in range(4):
                on_a, on_b = a >= 2, b >= 2
                expected = (ClassLabel.GOOD if on_a and not on_b else
                            ClassLabel.UGLY if on_b and not on_a else
                            ClassLabel.EITHER)
                assert classify([a, b]) is expected

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            classify([1, 2, 3])


class TestNetworkShape:
    def test_total_weights(self):
        sh = NetworkShape.parse("128-32-32-2")
        assert sh.total_weights == 128 * 32 + 32 * 32 + 32 * 2 == 5184

    def test_power_of_two_enforced(self):
        with pytest.raises(ValueError):
            NetworkShape(128, (33,), 2)

    def test_round_trip(self):
        sh = NetworkShape.parse("128-64-128-2")
        assert NetworkShape.parse(str(sh)) == sh


def reference_forward(genome, x):
    """Slow oracle: explicit per-connection ops, sequential sums."""
    values = list(x)
    for li, w_mat in enumerate(genome.layer_matrices()):
        first = li == 0
        input_max = 127 if first else 3
        nxt = []
        for j in range(w_mat.shape[0]):
            row = w_mat[j]
            nz = int(np.count_nonzero(row))
            if nz == 0:
                nxt.append(0)
                continue
            terms = [
                first_layer_op(int(w), int(v)) if first
                else cam_multiply(int(w), int(v))
                for w, v in zip(row, values)
            ]
            nxt.append(activate(sum(terms), thresholds_for(nz, input_max)))
        values = nxt
    return values


class TestForward:
    def test_all_block_is_silent(self):
        sh = NetworkShape(8, (4,), 2)
        g = Genome(sh, np.zeros(sh.total_weights, dtype=np.uint8))
        assert forward(g, [100] * 8) == [0, 0]

    def test_pass_chain_1_1_1(self):
        sh = NetworkShape(1, (1,), 1)
        g = Genome(sh, np.array([1, 1], dtype=np.uint8))
        # hand oracle: 50 -> bin 1 of (32,64,96); cam(1,1)=1 -> bin 1 of (1,2,3)
        assert forward(g, [50]) == [1]

    def test_matches_reference_on_random_genomes(self):
        rng = np.random.default_rng(7)
        sh = NetworkShape(16, (8, 4), 2)
        for seed in range(5):
            g = random_genome(sh, seed)
            for _ in range(10):
                x = rng.integers(0, 128, sh.input_len).tolist()
                assert forward(g, x) == reference_forward(g, x)

    def test_deterministic_with_trace(self):
        sh = NetworkShape(16, (8,), 2)
        g = random_genome(sh, 3)
        x = list(range(16))
        out1, tr1 = forward(g, x, trace=True)
        out2, tr2 = forward(g, x, trace=True)
        assert out1 == out2 and tr1 == tr2

    def test_batch_matches_single(self):
        sh = NetworkShape(16, (8, 8), 2)
        g = random_genome(sh, 11)
        rng = np.random.default_rng(2)
        xs = rng.integers(0, 128, (32, 16), dtype=np.uint8)
        batch = forward_batch(g, xs)
        for i in range(len(xs)):
            assert batch[i].tolist() == forward(g, xs[i].tolist())

    def test_block_equals_prune(self):
        # zeroing a weight == dropping the connection and re-deriving thresholds
        sh = NetworkShape(8, (4,), 2)
        g = random_genome(sh, 5)
        rng = np.random.default_rng(9)
        w = np.array(g.weights)
        w[rng.integers(0, len(w))] = 0
        g0 = Genome(sh, w)
        for _ in range(20):
            x = rng.integers(0, 128, 8).tolist()
            assert forward(g0, x) == reference_forward(g0, x)

    def test_shape_mismatch(self):
        sh = NetworkShape(8, (4,), 2)
        g = random_genome(sh, 0)
        with pytest.raises(ValueError):
            forward(g, [1] * 7)

    def test_no_overflow_all_incr(self):
        sh = NetworkShape(128, (2,), 2)
        g = Genome(sh, np.full(sh.total_weights, 2, dtype=np.uint8))
        _, trace = forward(g, [127] * 128, trace=True)
        sums = trace[0][0]
        assert max(sums) <= 128 * 127


class TestNonzeroCount:
    def test_all_block(self):
        sh = NetworkShape(8, (4,), 2)
        assert nonzero_weight_count(
            Genome(sh, np.zeros(sh.total_weights, dtype=np.uint8))) == 0

    def test_all_pass_full_size(self):
        sh = NetworkShape.parse("128-32-32-2")
        g = Genome(sh, np.ones(sh.total_weights, dtype=np.uint8))
        assert nonzero_weight_count(g) == 5184

    def test_matches_scan(self):
        g = random_genome(NetworkShape(16, (8,), 2), 4)
        assert nonzero_weight_count(g) == sum(1 for w in g.weights if w != 0)


class TestGenomeFormat:
    def test_round_trip_is_byte_stable(self):
        g = random_genome(NetworkShape(16, (8, 4), 2), 21)
        text = genome_to_text(g)
        g2 = genome_from_text(text)
        assert g2 == g
        assert genome_to_text(g2) == text

    def test_rejects_bad_documents(self):
        with pytest.raises(ValueError):
            genome_from_text("not a genome")
        g = random_genome(NetworkShape(4, (2,), 2), 0)
        bad = genome_to_text(g).replace("weights ", "weights 9")
        with pytest.raises(ValueError):
            genome_from_text(bad)

    def test_wrong_length_rejected(self):
        sh = NetworkShape(4, (2,), 2)
        with pytest.raises(ValueError):
            Genome(sh, np.zeros(sh.total_weights + 1, dtype=np.uint8))
        with pytest.raises(ValueError):
            Genome(sh, np.full(sh.total_weights, 4, dtype=np.uint8))
