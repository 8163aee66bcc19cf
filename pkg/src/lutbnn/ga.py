"""Genetic-algorithm trainer for the 2-bit network.

A simple generational loop with elitism: evaluate, copy the best unchanged,
refill via tournament selection, two-point crossover and per-gene mutation.
Fitness is partial-credit accuracy on a freshly resampled waveform batch per
individual (noisy fitness), zeroed for constant-output "broken clock"
genomes, scalarized 10:1 against the non-zero weight fraction.

All randomness is derived from (master seed, generation, role) seed streams,
so runs are bit-reproducible, resumable from a checkpoint, and independent
of evaluation parallelism.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import multiprocessing
import time
from dataclasses import dataclass, asdict

import numpy as np

from .core import (
    Genome,
    NetworkShape,
    ClassLabel,
    classify,
    forward_batch,
    nonzero_weight_count,
    quantize_frame,
)
from .sim import (
    SimConfig,
    TrueLabel,
    Waveform,
    batch_arrays,
    gen_batch,
    gen_batch_arrays,
)

CHECKPOINT_FORMAT_VERSION = 1
METRICS_FIELDS = (
    "generation",
    "best_accuracy",
    "mean_accuracy",
    "best_scalar",
    "best_nonzero",
    "seconds",
)

# spawn-key roles for seed-stream derivation
_ROLE_INIT = 0
_ROLE_EVOLVE = 1
_ROLE_EVAL = 2
_ROLE_FIXED_SET = 3

TARGETS = {TrueLabel.GOOD: (1, 0), TrueLabel.UGLY: (0, 1)}


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    generations: int = 200
    crossover_prob: float = 0.5
    mutation_prob: float = 0.2
    per_gene_mutation_rate: float = 0.0  # 0 means "1/genome length"
    tournament_size: int = 3
    elite_count: int = 5
    eval_good: int = 200
    eval_ugly: int = 200
    accuracy_weight: float = 10.0
    size_weight: float = 1.0
    rng_seed: int = 0
    resample_each_eval: bool = True
    accuracy_target: float | None = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must be in [0, population_size)")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_prob", "mutation_prob", "per_gene_mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.generations < 0 or min(self.eval_good, self.eval_ugly) < 0:
            raise ValueError("counts must be >= 0")

    def gene_rate(self, genome_len: int) -> float:
        return self.per_gene_mutation_rate or 1.0 / max(genome_len, 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GaConfig":
        return cls(**d)


@dataclass(frozen=True)
class FitnessScore:
    accuracy: float   # partial-credit accuracy in [0, 1]; 0 if broken-clock
    nonzero: int      # non-Block weights in the genome
    scalar: float     # accuracy_weight*accuracy - size_weight*(nonzero/total)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_accuracy: float
    mean_accuracy: float
    best_scalar: float
    best_nonzero: int
    seconds: float


def _stream(seed: int, *key: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _eval_seed(seed: int, gen: int, idx: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(gen, _ROLE_EVAL, idx))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def score_prediction(pred, target) -> float:
    """Partial credit: fraction of positions where the bit tuples agree."""
    pred, target = tuple(pred), tuple(target)
    if len(pred) != len(target) or not pred:
        raise ValueError("pred and target must have equal non-zero length")
    return sum(p == t for p, t in zip(pred, target)) / len(pred)


def one_hot_bits(output) -> tuple[int, ...]:
    """Neuron values 0 and 1 read as 'off', 2 and 3 as 'on'."""
    return tuple(1 if v >= 2 else 0 for v in output)


def _dataset_arrays(dataset: list[Waveform]) -> tuple[np.ndarray, np.ndarray]:
    raw, labels = batch_arrays(dataset)
    for lab in labels:
        if lab not in TARGETS:
            raise ValueError("fitness datasets may contain only Good/Ugly frames")
    x7 = quantize_frame(raw)
    targets = np.array([TARGETS[lab] for lab in labels], dtype=np.uint8)
    return x7, targets


def _fitness_from_arrays(genome: Genome, x7: np.ndarray, targets: np.ndarray,
                         cfg: GaConfig) -> FitnessScore:
    out = forward_batch(genome, x7)
    bits = (out >= 2).astype(np.uint8)
    if len(bits) and (bits == bits[0]).all():
        accuracy = 0.0  # broken clock: every prediction identical
    else:
        accuracy = float((bits == targets).mean())
    nz = nonzero_weight_count(genome)
    scalar = cfg.accuracy_weight * accuracy \
        - cfg.size_weight * nz / genome.shape.total_weights
    return FitnessScore(accuracy, nz, scalar)


def evaluate_fitness(genome: Genome, dataset: list[Waveform],
                     cfg: GaConfig) -> FitnessScore:
    """Partial-credit accuracy over a Good/Ugly dataset, plus scalarization."""
    if not dataset:
        raise ValueError("fitness dataset must be non-empty")
    x7, targets = _dataset_arrays(dataset)
    return _fitness_from_arrays(genome, x7, targets, cfg)


def tournament_select(population: list[Genome], scores: list[FitnessScore],
                      k: int, rng) -> Genome:
    """Best-of-k by scalar, k drawn uniformly with replacement."""
    if not population:
        raise ValueError("population must be non-empty")
    picks = rng.integers(0, len(population), size=k)
    best = max(picks.tolist(), key=lambda i: (scores[i].scalar, -i))
    return population[best]


def mutate(genome: Genome, per_gene_rate: float, rng) -> Genome:
    """Each gene independently replaced by a different code with given rate."""
    w = np.array(genome.weights, dtype=np.uint8)
    mask = rng.random(len(w)) < per_gene_rate
    if mask.any():
        bump = rng.integers(1, 4, size=int(mask.sum()), dtype=np.uint8)
        w[mask] = (w[mask] + bump) % 4
    return Genome(genome.shape, w)


def crossover(a: Genome, b: Genome, rng) -> tuple[Genome, Genome]:
    """Two-point crossover on the flat weight vector."""
    if a.shape != b.shape:
        raise ValueError("crossover requires identical shapes")
    n = len(a.weights)
    c1, c2 = sorted(rng.integers(0, n + 1, size=2).tolist())
    wa = np.array(a.weights, dtype=np.uint8)
    wb = np.array(b.weights, dtype=np.uint8)
    wa[c1:c2], wb[c1:c2] = b.weights[c1:c2], a.weights[c1:c2]
    return Genome(a.shape, wa), Genome(b.shape, wb)


def random_genome(shape: NetworkShape, rng) -> Genome:
    return Genome(shape, rng.integers(0, 4, shape.total_weights, dtype=np.uint8))


# --- evaluation backends ----------------------------------------------------

_worker_ctx: dict = {}


def _worker_init(shape_str, ga_dict, sim_dict, fixed_arrays):
    _worker_ctx["shape"] = NetworkShape.parse(shape_str)
    _worker_ctx["ga"] = GaConfig.from_dict(ga_dict)
    _worker_ctx["sim"] = SimConfig.from_dict(sim_dict)
    _worker_ctx["fixed"] = fixed_arrays


def _worker_eval(task):
    gen, idx, wbytes = task
    genome = Genome(_worker_ctx["shape"], np.frombuffer(wbytes, dtype=np.uint8))
    return _evaluate_one(genome, gen, idx, _worker_ctx["ga"],
                         _worker_ctx["sim"], _worker_ctx["fixed"])


def _evaluate_one(genome: Genome, gen: int, idx: int, ga_cfg: GaConfig,
                  sim_cfg: SimConfig, fixed_arrays):
    if fixed_arrays is not None:
        x7, targets = fixed_arrays
    else:
        cfg = dataclasses.replace(
            sim_cfg, rng_seed=_eval_seed(ga_cfg.rng_seed, gen, idx))
        raw, _ = gen_batch_arrays(cfg, ga_cfg.eval_good, ga_cfg.eval_ugly, 0)
        x7 = quantize_frame(raw)
        targets = np.repeat(np.array([[1, 0], [0, 1]], dtype=np.uint8),
                            [ga_cfg.eval_good, ga_cfg.eval_ugly], axis=0)
    s = _fitness_from_arrays(genome, x7, targets, ga_cfg)
    return s.accuracy, s.nonzero, s.scalar


def _fixed_eval_arrays(ga_cfg: GaConfig, sim_cfg: SimConfig):
    cfg = dataclasses.replace(
        sim_cfg, rng_seed=_eval_seed(ga_cfg.rng_seed, 0, _ROLE_FIXED_SET))
    frames = gen_batch(cfg, ga_cfg.eval_good, ga_cfg.eval_ugly, 0)
    return _dataset_arrays(frames)


def _evaluate_population(pop: np.ndarray, gen: int, shape: NetworkShape,
                         ga_cfg: GaConfig, sim_cfg: SimConfig,
                         fixed_arrays, pool) -> list[FitnessScore]:
    tasks = [(gen, idx, pop[idx].tobytes()) for idx in range(len(pop))]
    if pool is not None:
        raw = pool.map(_worker_eval, tasks, chunksize=8)
    else:
        raw = [
            _evaluate_one(Genome(shape, pop[idx]), gen, idx, ga_cfg, sim_cfg,
                          fixed_arrays)
            for idx in range(len(pop))
        ]
    return [FitnessScore(a, int(nz), s) for a, nz, s in raw]


# --- the evolutionary loop ---------------------------------------------------


def evolve(shape: NetworkShape, ga_cfg: GaConfig, sim_cfg: SimConfig,
           workers: int = 1, state: dict | None = None,
           checkpoint_path=None, checkpoint_every: int = 25,
           progress=None) -> tuple[Genome, list[GenerationRecord]]:
    """Run (or resume) the GA; returns the best-ever genome and the records.

    `state` is a dict from `load_checkpoint`; `progress`, if given, is called
    with each GenerationRecord (one status line per generation).
    """
    n_genes = shape.total_weights
    gene_rate = ga_cfg.gene_rate(n_genes)

    if state is not None:
        pop = state["population"].copy()
        records = list(state["records"])
        start_gen = state["generation"]
        best_w, best_score = state["best"]
    else:
        init_rng = _stream(ga_cfg.rng_seed, 0, _ROLE_INIT)
        pop = init_rng.integers(
            0, 4, (ga_cfg.population_size, n_genes), dtype=np.uint8)
        records = []
        start_gen = 0
        best_w, best_score = None, None

    fixed_arrays = None
    if not ga_cfg.resample_each_eval:
        fixed_arrays = _fixed_eval_arrays(ga_cfg, sim_cfg)

    pool = None
    if workers > 1:
        pool = multiprocessing.get_context("fork").Pool(
            workers, initializer=_worker_init,
            initargs=(str(shape), ga_cfg.to_dict(), sim_cfg.to_dict(),
                      fixed_arrays))
    try:
        for gen in range(start_gen, ga_cfg.generations + 1):
            t0 = time.perf_counter()
            scores = _evaluate_population(pop, gen, shape, ga_cfg, sim_cfg,
                                          fixed_arrays, pool)
            scalars = np.array([s.scalar for s in scores])
            order = np.argsort(-scalars, kind="stable")
            top = int(order[0])
            if best_score is None or scores[top].scalar > best_score.scalar:
                best_w, best_score = pop[top].copy(), scores[top]
            records.append(GenerationRecord(
                generation=gen,
                best_accuracy=scores[top].accuracy,
                mean_accuracy=float(np.mean([s.accuracy for s in scores])),
                best_scalar=scores[top].scalar,
                best_nonzero=scores[top].nonzero,
                seconds=time.perf_counter() - t0,
            ))
            if progress is not None:
                progress(records[-1])

            done = gen == ga_cfg.generations or (
                ga_cfg.accuracy_target is not None
                and scores[top].accuracy >= ga_cfg.accuracy_target)

            # build the next generation: elites unchanged, rest via
            # tournament selection + two-point crossover + mutation
            rng = _stream(ga_cfg.rng_seed, gen, _ROLE_EVOLVE)
            elites = pop[order[: ga_cfg.elite_count]].copy()
            n_off = ga_cfg.population_size - ga_cfg.elite_count
            if scores[top].accuracy == 0.0:
                # every individual is constant-output, so selection has no
                # gradient and the size penalty would only entrench the
                # stall; refill the non-elite slots with fresh random
                # genomes until something produces varied outputs
                off = rng.integers(0, 4, (n_off, n_genes), dtype=np.uint8)
            else:
                picks = []
                for _ in range(n_off):
                    cand = rng.integers(0, len(pop),
                                        size=ga_cfg.tournament_size)
                    best_i = max(cand.tolist(),
                                 key=lambda i: (scores[i].scalar, -i))
                    picks.append(pop[best_i].copy())
                off = (np.stack(picks) if picks
                       else np.zeros((0, n_genes), np.uint8))
                for i in range(0, n_off - 1, 2):
                    if rng.random() < ga_cfg.crossover_prob:
                        c1, c2 = sorted(
                            rng.integers(0, n_genes + 1, 2).tolist())
                        off[i, c1:c2], off[i + 1, c1:c2] = \
                            off[i + 1, c1:c2].copy(), off[i, c1:c2].copy()
                for i in range(n_off):
                    if rng.random() < ga_cfg.mutation_prob:
                        mask = rng.random(n_genes) < gene_rate
                        if mask.any():
                            bump = rng.integers(1, 4, int(mask.sum()),
                                                dtype=np.uint8)
                            off[i, mask] = (off[i, mask] + bump) % 4
            pop = np.concatenate([elites, off])
            # the checkpoint always holds the evolved population for gen+1,
            # so resuming (even past the original horizon) is bit-identical
            if checkpoint_path is not None and (
                    done or (gen + 1) % checkpoint_every == 0):
                save_checkpoint(checkpoint_path, shape, ga_cfg, sim_cfg,
                                gen + 1, pop, records, (best_w, best_score))
            if done:
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    return Genome(shape, best_w), records


# --- evaluation reports -------------------------------------------------------

_ROW_INDEX = {TrueLabel.GOOD: 0, TrueLabel.UGLY: 1, TrueLabel.NOISE: 2}
_COL_INDEX = {ClassLabel.GOOD: 0, ClassLabel.UGLY: 1, ClassLabel.EITHER: 2}
CONFUSION_ROWS = ("Good", "Ugly", "Either")  # Noise frames report as "Either"
CONFUSION_COLS = ("Good", "Ugly", "Either")


def confusion_matrix(genome: Genome, dataset: list[Waveform]) -> np.ndarray:
    """3x3 counts: rows true Good/Ugly/Noise("Either"), columns predicted."""
    if not dataset:
        raise ValueError("confusion matrix needs a non-empty dataset")
    raw, labels = batch_arrays(dataset)
    out = forward_batch(genome, quantize_frame(raw))
    mat = np.zeros((3, 3), dtype=np.int64)
    for row, lab in zip(out, labels):
        mat[_ROW_INDEX[lab], _COL_INDEX[classify(row)]] += 1
    return mat


def dataset_accuracy(genome: Genome, dataset: list[Waveform],
                     cfg: GaConfig | None = None) -> float:
    """Held-out partial-credit accuracy (broken-clock rule included)."""
    return evaluate_fitness(genome, dataset, cfg or GaConfig()).accuracy


# --- metrics CSV ---------------------------------------------------------------


def write_metrics_csv(records: list[GenerationRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_FIELDS)
        for r in records:
            writer.writerow([r.generation, f"{r.best_accuracy:.6f}",
                             f"{r.mean_accuracy:.6f}", f"{r.best_scalar:.6f}",
                             r.best_nonzero, f"{r.seconds:.3f}"])


def read_metrics_csv(path) -> list[GenerationRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            records.append(GenerationRecord(
                generation=int(row["generation"]),
                best_accuracy=float(row["best_accuracy"]),
                mean_accuracy=float(row["mean_accuracy"]),
                best_scalar=float(row["best_scalar"]),
                best_nonzero=int(row["best_nonzero"]),
                seconds=float(row["seconds"]),
            ))
    return records


# --- checkpoints ----------------------------------------------------------------


def _checkpoint_payload(shape, ga_cfg, sim_cfg, generation, pop, records, best):
    best_w, best_score = best
    return {
        "format": "lutbnn-checkpoint",
        "version": CHECKPOINT_FORMAT_VERSION,
        "shape": str(shape),
        "ga_config": ga_cfg.to_dict(),
        "sim_config": sim_cfg.to_dict(),
        "generation": generation,
        "population": ["".join(map(str, row.tolist())) for row in pop],
        "records": [asdict(r) for r in records],
        "best": None if best_w is None else {
            "weights": "".join(map(str, best_w.tolist())),
            "accuracy": best_score.accuracy,
            "nonzero": best_score.nonzero,
            "scalar": best_score.scalar,
        },
    }


def save_checkpoint(path, shape, ga_cfg, sim_cfg, generation, pop, records,
                    best) -> None:
    payload = _checkpoint_payload(shape, ga_cfg, sim_cfg, generation, pop,
                                  records, best)
    body = json.dumps(payload, sort_keys=True)
    doc = {"sha256": hashlib.sha256(body.encode()).hexdigest(),
           "payload": payload}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True)


def load_checkpoint(path) -> dict:
    """Returns shape/configs plus a `state` dict consumable by `evolve`."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    payload = doc.get("payload", {})
    body = json.dumps(payload, sort_keys=True)
    if hashlib.sha256(body.encode()).hexdigest() != doc.get("sha256"):
        raise ValueError(f"checkpoint {path} is corrupt (checksum mismatch)")
    if payload.get("format") != "lutbnn-checkpoint" or \
            payload.get("version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError("not a lutbnn-checkpoint v1 document")
    shape = NetworkShape.parse(payload["shape"])
    pop = np.array([[int(c) for c in row] for row in payload["population"]],
                   dtype=np.uint8)
    records = [GenerationRecord(**r) for r in payload["records"]]
    b = payload["best"]
    best = (None, None) if b is None else (
        np.array([int(c) for c in b["weights"]], dtype=np.uint8),
        FitnessScore(b["accuracy"], b["nonzero"], b["scalar"]),
    )
    return {
        "shape": shape,
        "ga_config": GaConfig.from_dict(payload["ga_config"]),
        "sim_config": SimConfig.from_dict(payload["sim_config"]),
        "state": {
            "population": pop,
            "generation": payload["generation"],
            "records": records,
            "best": best,
        },
    }
