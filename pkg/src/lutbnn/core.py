"""Bit-exact forward inference for the LUT-constrained 2-bit network.

All arithmetic is integer-only and reproduces exactly what the generated
combinatorial hardware computes: a 4x4 CAM lookup replaces multiplication in
the hidden layers, the first layer applies one of four weight operations
(Block / Pass / Incr / Neg) to 7-bit input samples, per-neuron sums are
reduced by a balanced pairwise adder tree, and a three-threshold activation
maps each sum back to a 2-bit neuron value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

MAX_INT = 127           # 7-bit input ceiling
RAW_MAX = 4095          # 12-bit ADC ceiling
NEURON_MAX = 3          # 2-bit neuron ceiling
GENOME_FORMAT_VERSION = 1
GENOME_LAYOUT = "layer-major,dest-major,src-major"


class WeightOp(IntEnum):
    """The four 2-bit weight codes and their first-layer semantics."""

    BLOCK = 0
    PASS = 1
    INCR = 2
    NEG = 3


class ClassLabel(Enum):
    GOOD = "Good"
    UGLY = "Ugly"
    EITHER = "Either"


# 2-bit multiply table, indexed [weight][neuron value].
CAM_TABLE = np.array(
    [
        [0, 0, 0, 0],
        [0, 1, 2, 3],
        [1, 2, 3, 3],
        [3, 2, 1, 0],
    ],
    dtype=np.int64,
)


def _check_code(code: int) -> int:
    if code not in (0, 1, 2, 3):
        raise ValueError(f"weight code must be in 0..3, got {code}")
    return int(code)


def _check_neuron(value: int) -> int:
    if value not in (0, 1, 2, 3):
        raise ValueError(f"neuron value must be in 0..3, got {value}")
    return int(value)


def _check_input(value: int) -> int:
    if not 0 <= value <= MAX_INT:
        raise ValueError(f"input sample must be in 0..{MAX_INT}, got {value}")
    return int(value)


def _check_raw(value: int) -> int:
    if not 0 <= value <= RAW_MAX:
        raise ValueError(f"raw sample must be in 0..{RAW_MAX}, got {value}")
    return int(value)


@dataclass(frozen=True)
class NetworkShape:
    """Layer widths: input fan-in, hidden widths (each a power of two), outputs."""

    input_len: int
    hidden: tuple[int, ...]
    output_len: int

    def __post_init__(self):
        if self.input_len < 1 or self.output_len < 1:
            raise ValueError("input_len and output_len must be >= 1")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        for h in self.hidden:
            if h < 1 or (h & (h - 1)) != 0:
                raise ValueError(f"hidden layer width {h} is not a power of two")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """Per layer (fan_in, fan_out), first layer first."""
        widths = [self.input_len, *self.hidden, self.output_len]
        return [(widths[i], widths[i + 1]) for i in range(len(widths) - 1)]

    @property
    def total_weights(self) -> int:
        return sum(n_in * n_out for n_in, n_out in self.layer_dims)

    def __str__(self) -> str:
        return "-".join(str(w) for w in (self.input_len, *self.hidden, self.output_len))

    @classmethod
    def parse(cls, text: str) -> "NetworkShape":
        parts = text.strip().split("-")
        if len(parts) < 2:
            raise ValueError(f"bad shape string {text!r}, expected e.g. 128-32-32-2")
        widths = [int(p) for p in parts]
        return cls(widths[0], tuple(widths[1:-1]), widths[-1])


@dataclass(frozen=True)
class Genome:
    """A flat vector of 2-bit weight codes plus the network shape.

    Layout is layer-major, then destination-neuron-major, then source-major:
    weight (layer l, dest j, src i) sits at offset(l) + j * fan_in(l) + i.
    """

    shape: NetworkShape
    weights: np.ndarray  # uint8, values 0..3

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.uint8)
        if w.ndim != 1 or len(w) != self.shape.total_weights:
            raise ValueError(
                f"genome needs {self.shape.total_weights} weights, got {w.shape}"
            )
        if w.size and w.max() > 3:
            raise ValueError("weight codes must be in 0..3")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def layer_matrices(self) -> list[np.ndarray]:
        """Weight matrices per layer, each shaped (fan_out, fan_in)."""
        mats, off = [], 0
        for n_in, n_out in self.shape.layer_dims:
            mats.append(self.weights[off : off + n_in * n_out].reshape(n_out, n_in))
            off += n_in * n_out
        return mats

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Genome)
            and self.shape == other.shape
            and np.array_equal(self.weights, other.weights)
        )


def quantize_12_to_7(raw: int) -> int:
    """Truncate a 12-bit ADC count to its top 7 bits (a wire slice in hardware)."""
    return _check_raw(raw) >> 5


def quantize_frame(samples: np.ndarray) -> np.ndarray:
    """Vectorized 12->7 bit truncation of a whole frame."""
    s = np.asarray(samples, dtype=np.int64)
    if s.size and (s.min() < 0 or s.max() > RAW_MAX):
        raise ValueError("raw samples out of 12-bit range")
    return (s >> 5).astype(np.uint8)


def cam_multiply(w: int, x: int) -> int:
    """2-bit multiply via the 4x4 CAM table."""
    return int(CAM_TABLE[_check_code(w), _check_neuron(x)])


INCR_SHIFT = 1  # global shift amount for the Incr first-layer operation


def first_layer_op(w: int, x: int) -> int:
    """Apply one weight operation to a 7-bit sample: Block/Pass/Incr/Neg."""
    _check_code(w)
    _check_input(x)
    if w == WeightOp.BLOCK:
        return 0
    if w == WeightOp.PASS:
        return x
    if w == WeightOp.INCR:
        return min(x << INCR_SHIFT, MAX_INT)
    return MAX_INT - x  # NEG: bitwise complement in 7 bits


def tree_sum(values) -> tuple[int, int]:
    """Balanced pairwise reduction; returns (sum, tree depth).

    Depth is ceil(log2(n)), the carry-chain depth of the matching adder tree.
    """
    level = [int(v) for v in values]
    if not level:
        raise ValueError("tree_sum needs at least one value")
    depth = 0
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
        depth += 1
    return level[0], depth


@dataclass(frozen=True)
class ActivationThresholds:
    t1: int
    t2: int
    t3: int

    def __post_init__(self):
        if not 0 <= self.t1 <= self.t2 <= self.t3:
            raise ValueError(f"thresholds must satisfy 0 <= t1 <= t2 <= t3, got {self}")


def thresholds_for(nonzero_count: int, input_max: int) -> ActivationThresholds:
    """Quartile thresholds over the reachable sum range [0, nonzero*input_max]."""
    if nonzero_count < 0 or input_max < 0:
        raise ValueError("nonzero_count and input_max must be non-negative")
    if nonzero_count == 0:
        return ActivationThresholds(0, 0, 0)
    s = nonzero_count * input_max
    return ActivationThresholds(-(-s // 4), -(-s // 2), -(-3 * s // 4))


def activate(total: int, th: ActivationThresholds) -> int:
    """Map a sum to a 2-bit value: bins are lower-inclusive at t1, t2, t3."""
    if total < th.t1:
        return 0
    if total < th.t2:
        return 1
    if total < th.t3:
        return 2
    return 3


def nonzero_weight_count(genome: Genome) -> int:
    """Number of non-Block weight codes across all layers."""
    return int(np.count_nonzero(genome.weights))


# --- batched forward pass -------------------------------------------------
#
# Sums are decomposed per weight code so each layer is three matmuls:
#   sum_j = sum_{i: w=1} f1(x_i) + sum_{i: w=2} f2(x_i) + sum_{i: w=3} f3(x_i)
# All values fit exactly in float64 (first-layer worst case 128*127 = 16256),
# so BLAS matmuls stay bit-exact.


def _layer_masks(w_mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        (w_mat == 1).astype(np.float64).T,
        (w_mat == 2).astype(np.float64).T,
        (w_mat == 3).astype(np.float64).T,
    )


def _layer_sums(x: np.ndarray, w_mat: np.ndarray, first: bool) -> np.ndarray:
    xf = x.astype(np.float64)
    if first:
        f1, f2, f3 = xf, np.minimum(xf * 2, MAX_INT), MAX_INT - xf
    else:
        f1, f2, f3 = xf, np.minimum(xf + 1, NEURON_MAX), NEURON_MAX - xf
    m1, m2, m3 = _layer_masks(w_mat)
    return (f1 @ m1 + f2 @ m2 + f3 @ m3).astype(np.int64)


def _activate_layer(sums: np.ndarray, w_mat: np.ndarray, input_max: int) -> np.ndarray:
    nz = np.count_nonzero(w_mat, axis=1).astype(np.int64)
    span = nz * input_max
    t1, t2, t3 = -(-span // 4), -(-span // 2), -(-3 * span // 4)
    vals = (sums >= t1).astype(np.uint8)
    vals += sums >= t2
    vals += sums >= t3
    vals[:, nz == 0] = 0  # fully pruned neuron is silent
    return vals


def forward_batch(genome: Genome, inputs: np.ndarray) -> np.ndarray:
    """Run many frames at once; inputs (B, input_len) of 7-bit samples.

    Returns (B, output_len) 2-bit neuron values, bit-identical to `forward`
    applied row by row.
    """
    x = np.asarray(inputs, dtype=np.uint8)
    if x.ndim != 2 or x.shape[1] != genome.shape.input_len:
        raise ValueError(
            f"inputs must be (B, {genome.shape.input_len}), got {x.shape}"
        )
    mats = genome.layer_matrices()
    for li, w_mat in enumerate(mats):
        first = li == 0
        sums = _layer_sums(x, w_mat, first)
        x = _activate_layer(sums, w_mat, MAX_INT if first else NEURON_MAX)
    return x


def forward(genome: Genome, inputs, trace: bool = False):
    """Forward one frame of 7-bit samples through the network.

    Returns the list of output neuron values; with trace=True also a list of
    per-layer (sums, activations) pairs.
    """
    x = np.asarray(list(inputs), dtype=np.int64)
    if x.shape != (genome.shape.input_len,):
        raise ValueError(
            f"expected {genome.shape.input_len} input samples, got {x.shape}"
        )
    if x.size and (x.min() < 0 or x.max() > MAX_INT):
        raise ValueError("input samples out of 7-bit range")
    layers = []
    row = x[None, :].astype(np.uint8)
    mats = genome.layer_matrices()
    for li, w_mat in enumerate(mats):
        first = li == 0
        sums = _layer_sums(row, w_mat, first)
        row = _activate_layer(sums, w_mat, MAX_INT if first else NEURON_MAX)
        layers.append((sums[0].tolist(), row[0].tolist()))
    out = [int(v) for v in row[0]]
    return (out, layers) if trace else out


def classify(output) -> ClassLabel:
    """Decode a two-neuron one-hot output: values >= 2 count as 'on'."""
    out = list(output)
    if len(out) != 2:
        raise ValueError(f"classification expects 2 output neurons, got {len(out)}")
    good_on, ugly_on = out[0] >= 2, out[1] >= 2
    if good_on and not ugly_on:
        return ClassLabel.GOOD
    if ugly_on and not good_on:
        return ClassLabel.UGLY
    return ClassLabel.EITHER


# --- genome file format (v1) ------------------------------------------------
#
#   lutbnn-genome 1
#   shape 128-32-32-2
#   layout layer-major,dest-major,src-major
#   weights 01230123...  (one digit per weight code)


def genome_to_text(genome: Genome) -> str:
    digits = "".join(str(int(w)) for w in genome.weights)
    return (
        f"lutbnn-genome {GENOME_FORMAT_VERSION}\n"
        f"shape {genome.shape}\n"
        f"layout {GENOME_LAYOUT}\n"
        f"weights {digits}\n"
    )


def genome_from_text(text: str) -> Genome:
    fields = {}
    for line in text.strip().splitlines():
        key, _, val = line.partition(" ")
        fields[key] = val.strip()
    if fields.get("lutbnn-genome") != str(GENOME_FORMAT_VERSION):
        raise ValueError("not a lutbnn-genome v1 document")
    if fields.get("layout") != GENOME_LAYOUT:
        raise ValueError(f"unsupported genome layout {fields.get('layout')!r}")
    shape = NetworkShape.parse(fields["shape"])
    digits = fields["weights"]
    if not re.fullmatch(r"[0-3]*", digits):
        raise ValueError("weights must be digits 0-3")
    weights = np.frombuffer(digits.encode(), dtype=np.uint8) - ord("0")
    return Genome(shape, weights)


def save_genome(genome: Genome, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(genome_to_text(genome))


def load_genome(path) -> Genome:
    with open(path, encoding="utf-8") as f:
        return genome_from_text(f.read())
