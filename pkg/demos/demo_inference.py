"""Step through bit-exact inference on a single frame.

Loads the bundled example genome, simulates one frame, and shows every
stage of the integer pipeline: 12->7 bit quantization, the first-layer
Block/Pass/Incr/Neg operations, per-layer adder-tree sums, quartile
activations, and the one-hot decode.

Run:  python demos/demo_inference.py
"""

import pathlib

import numpy as np

from lutbnn.core import classify, forward, load_genome, quantize_frame
from lutbnn.sim import SimConfig, gen_batch

HERE = pathlib.Path(__file__).parent
genome = load_genome(HERE / "data" / "example_genome.txt")
print(f"loaded genome, shape {genome.shape}")

# one Good frame, cropped to the genome's 16-sample input window
cfg = SimConfig(frame_len=genome.shape.input_len, rng_seed=11)
wf = gen_batch(cfg, 1, 0, 0)[0]
raw = np.asarray(wf.samples)
print(f"\nraw 12-bit frame:   {raw.tolist()}")
print(f"quantized to 7-bit: {quantize_frame(raw).tolist()}  (raw >> 5)")

bits, trace = forward(genome, quantize_frame(raw), trace=True)
for i, (sums, acts) in enumerate(trace, start=1):
    print(f"\nlayer {i} adder-tree sums:  {list(sums)}")
    print(f"layer {i} activations (0-3): {list(acts)}")

print(f"\noutput bits {bits} -> label {classify(bits).value}")
print("(value >= 2 counts as 'on'; (on,off)=Good, (off,on)=Ugly,"
      " anything else=Either)")
