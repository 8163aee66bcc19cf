"""Evolve a small classifier end to end and watch the metrics.

Uses a reduced problem (32-sample frames, 16-wide hidden layer, small
population) so the whole run takes a few seconds. The full-size
configuration lives in demos/config/example.yaml.

Run:  python demos/demo_train_small.py
"""

from lutbnn.core import NetworkShape, nonzero_weight_count, save_genome
from lutbnn.ga import GaConfig, confusion_matrix, evolve
from lutbnn.sim import SimConfig, gen_batch

shape = NetworkShape.parse("32-16-2")
sim_cfg = SimConfig(frame_len=32, rng_seed=5)
ga_cfg = GaConfig(population_size=40, generations=40,
                  eval_good=60, eval_ugly=60, elite_count=3, rng_seed=5)


def show(rec):
    if rec.generation % 10 == 0 or rec.generation == ga_cfg.generations:
        print(f"gen {rec.generation:3d}  best acc {rec.best_accuracy:.3f}"
              f"  mean acc {rec.mean_accuracy:.3f}"
              f"  scalar {rec.best_scalar:+.3f}"
              f"  nonzero {rec.best_nonzero}")


best, records = evolve(shape, ga_cfg, sim_cfg, progress=show)

print(f"\nbest genome: {nonzero_weight_count(best)}/{shape.total_weights}"
      " nonzero weights")

# held-out check on frames the trainer never saw
holdout = gen_batch(SimConfig(frame_len=32, rng_seed=999), 300, 300, 300)
mat = confusion_matrix(best, holdout)
print("\nheld-out confusion matrix (rows true Good/Ugly/Noise,"
      " cols predicted Good/Ugly/Either):")
for label, row in zip(("Good ", "Ugly ", "Noise"), mat):
    print(f"  {label} {row.tolist()}")

save_genome(best, "demo_best_genome.txt")
print("\nwrote demo_best_genome.txt")
