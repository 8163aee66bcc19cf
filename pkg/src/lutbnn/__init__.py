"""lutbnn: hardware-constrained 2-bit networks for SiPM waveform classification.

Subpackages:
  core — bit-exact LUT-style inference (CAM multiply, adder trees, activation)
  sim  — synthetic SiPM waveform generator (good / pile-up / noise frames)
  ga   — genetic-algorithm trainer with noisy resampled fitness and elitism
  hdl  — VHDL emitter and structural mirror evaluator
  cli  — the `lutbnn` command-line entry point
"""

from .core import (
    ClassLabel,
    Genome,
    NetworkShape,
    WeightOp,
    activate,
    cam_multiply,
    classify,
    first_layer_op,
    forward,
    forward_batch,
    genome_from_text,
    genome_to_text,
    load_genome,
    nonzero_weight_count,
    quantize_12_to_7,
    quantize_frame,
    save_genome,
    thresholds_for,
    tree_sum,
)
from .sim import (
    PulseParams,
    SimConfig,
    TrueLabel,
    Waveform,
    double_exp,
    gen_batch,
    gen_good,
    gen_noise,
    gen_ugly,
    load_dataset,
    save_dataset,
)
from .ga import (
    FitnessScore,
    GaConfig,
    GenerationRecord,
    confusion_matrix,
    crossover,
    evaluate_fitness,
    evolve,
    mutate,
    one_hot_bits,
    score_prediction,
    tournament_select,
)
from .hdl import (
    EmittedDesign,
    NetlistMirror,
    build_mirror,
    emit_entity,
    emit_package,
    estimate_structure,
    mirror_evaluate,
    write_design,
)

__version__ = "0.1.0"
