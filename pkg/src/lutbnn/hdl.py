"""VHDL emission for a trained genome, plus a structural mirror evaluator.

`emit_package` produces a support package holding the CAM multiply table,
the four first-layer operations and the three-threshold activation as pure
functions. `emit_entity` materializes one genome as a purely combinatorial
entity: a flat 7-bit-per-sample input port, 2-bit-per-neuron output port,
per-neuron weight and threshold constants, and balanced adder trees over
the non-blocked terms (blocked weights are pruned from the netlist).

`build_mirror` / `mirror_evaluate` replay the emitted structure in Python,
node for node, so equivalence with the reference forward pass can be tested
without an HDL simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CAM_TABLE,
    MAX_INT,
    NEURON_MAX,
    Genome,
    thresholds_for,
)

EMITTER_VERSION = 1
PACKAGE_NAME = "lutbnn_pkg"


@dataclass(frozen=True)
class EmittedDesign:
    package_text: str
    entity_text: str
    input_port_bits: int
    output_port_bits: int
    adder_tree_depths: tuple[int, ...]  # max adder depth per layer


# --- netlist mirror -----------------------------------------------------------


@dataclass(frozen=True)
class MirrorNeuron:
    terms: tuple[tuple[int, int], ...]  # (weight code, source index), w != 0
    thresholds: tuple[int, int, int]
    adder_depth: int


@dataclass(frozen=True)
class MirrorLayer:
    neurons: tuple[MirrorNeuron, ...]
    first: bool  # first layer applies INT ops; later layers use the CAM


@dataclass(frozen=True)
class NetlistMirror:
    shape_str: str
    input_len: int
    layers: tuple[MirrorLayer, ...]

    @property
    def adder_tree_depths(self) -> tuple[int, ...]:
        return tuple(
            max((n.adder_depth for n in layer.neurons), default=0)
            for layer in self.layers
        )


def build_mirror(genome: Genome) -> NetlistMirror:
    """Structural DAG of the emitted design: one node set per neuron."""
    layers = []
    for li, w_mat in enumerate(genome.layer_matrices()):
        first = li == 0
        input_max = MAX_INT if first else NEURON_MAX
        neurons = []
        for j in range(w_mat.shape[0]):
            terms = tuple(
                (int(w), i) for i, w in enumerate(w_mat[j]) if w != 0
            )
            th = thresholds_for(len(terms), input_max)
            depth = math.ceil(math.log2(len(terms))) if terms else 0
            neurons.append(MirrorNeuron(terms, (th.t1, th.t2, th.t3), depth))
        layers.append(MirrorLayer(tuple(neurons), first))
    return NetlistMirror(str(genome.shape), genome.shape.input_len,
                         tuple(layers))


def _term_value(w: int, x: np.ndarray, first: bool) -> np.ndarray:
    if first:
        if w == 1:
            return x
        if w == 2:
            return np.minimum(x * 2, MAX_INT)
        return MAX_INT - x
    return CAM_TABLE[w][x]


def mirror_evaluate(mirror: NetlistMirror, inputs) -> list[int] | np.ndarray:
    """Evaluate the DAG; accepts one frame (input_len,) or a batch (B, n).

    Pairwise adder reduction and per-neuron threshold compares follow the
    emitted structure exactly.
    """
    x = np.asarray(inputs, dtype=np.int64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != mirror.input_len:
        raise ValueError(f"expected {mirror.input_len} inputs, got {x.shape[1]}")
    for layer in mirror.layers:
        cols = []
        for neuron in layer.neurons:
            if not neuron.terms:
                cols.append(np.zeros(len(x), dtype=np.int64))
                continue
            level = [_term_value(w, x[:, src], layer.first)
                     for w, src in neuron.terms]
            while len(level) > 1:
                nxt = [level[i] + level[i + 1]
                       for i in range(0, len(level) - 1, 2)]
                if len(level) % 2:
                    nxt.append(level[-1])
                level = nxt
            s = level[0]
            t1, t2, t3 = neuron.thresholds
            cols.append((s >= t1).astype(np.int64) + (s >= t2) + (s >= t3))
        x = np.stack(cols, axis=1)
    return [int(v) for v in x[0]] if single else x.astype(np.uint8)


def estimate_structure(genome: Genome) -> dict:
    """Node counts and adder depths implied by the genome's non-zero weights."""
    mirror = build_mirror(genome)
    layers = []
    for layer in mirror.layers:
        op_nodes = sum(len(n.terms) for n in layer.neurons)
        adders = sum(max(len(n.terms) - 1, 0) for n in layer.neurons)
        active = sum(1 for n in layer.neurons if n.terms)
        layers.append({
            "op_nodes": op_nodes,
            "adder_nodes": adders,
            "comparators": 3 * active,
            "max_adder_depth": max((n.adder_depth for n in layer.neurons),
                                   default=0),
        })
    return {
        "shape": mirror.shape_str,
        "nonzero_weights": sum(l["op_nodes"] for l in layers),
        "layers": layers,
        "input_port_bits": genome.shape.input_len * 7,
        "output_port_bits": genome.shape.output_len * 2,
    }


# --- VHDL text ------------------------------------------------------------------


_PACKAGE_TEXT = f"""\
-- {PACKAGE_NAME}: support functions for LUT-mapped 2-bit networks
-- emitter format v{EMITTER_VERSION}; purely combinatorial, no clocked constructs
library ieee;
use ieee.std_logic_1164.all;

package {PACKAGE_NAME} is

  type cam_row_t is array (0 to 3) of integer range 0 to 3;
  type cam_tbl_t is array (0 to 3) of cam_row_t;

  -- 2-bit multiply lookup, indexed (weight)(value)
  constant CAM_TBL : cam_tbl_t := (
    (0, 0, 0, 0),
    (0, 1, 2, 3),
    (1, 2, 3, 3),
    (3, 2, 1, 0));

  type int_array is array (natural range <>) of integer;

  function cam_mul(w : integer; x : integer) return integer;
  function op_block(x : integer) return integer;
  function op_pass(x : integer) return integer;
  function op_incr(x : integer) return integer;
  function op_neg(x : integer) return integer;
  function first_op(w : integer; x : integer) return integer;
  function activate(s : integer; t1 : integer; t2 : integer; t3 : integer)
    return integer;

end package {PACKAGE_NAME};

package body {PACKAGE_NAME} is

  function cam_mul(w : integer; x : integer) return integer is
  begin
    return CAM_TBL(w)(x);
  end function;

  function op_block(x : integer) return integer is
  begin
    return 0;
  end function;

  function op_pass(x : integer) return integer is
  begin
    return x;
  end function;

  function op_incr(x : integer) return integer is
  begin
    if x * 2 > 127 then
      return 127;
    else
      return x * 2;
    end if;
  end function;

  function op_neg(x : integer) return integer is
  begin
    return 127 - x;
  end function;

  function first_op(w : integer; x : integer) return integer is
  begin
    case w is
      when 0      => return op_block(x);
      when 1      => return op_pass(x);
      when 2      => return op_incr(x);
      when others => return op_neg(x);
    end case;
  end function;

  function activate(s : integer; t1 : integer; t2 : integer; t3 : integer)
    return integer is
  begin
    if s < t1 then
      return 0;
    elsif s < t2 then
      return 1;
    elsif s < t3 then
      return 2;
    else
      return 3;
    end if;
  end function;

end package body {PACKAGE_NAME};
"""


def emit_package() -> str:
    """The support package; byte-stable across calls."""
    return _PACKAGE_TEXT


def _agg(values) -> str:
    vals = list(values)
    if len(vals) == 1:
        return f"(0 => {vals[0]})"
    return "(" + ", ".join(str(v) for v in vals) + ")"


def _tree_expr(terms: list[str]) -> str:
    level = terms
    while len(level) > 1:
        nxt = [f"({level[i]} + {level[i + 1]})"
               for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def emit_entity(genome: Genome, name: str = "lutbnn_net") -> EmittedDesign:
    """Combinatorial entity for one genome; deterministic text."""
    shape = genome.shape
    mirror = build_mirror(genome)
    mats = genome.layer_matrices()
    in_bits = shape.input_len * 7
    out_bits = shape.output_len * 2
    n_layers = len(mats)

    lines: list[str] = []
    w = lines.append
    w(f"-- {name}: LUT-mapped 2-bit network, shape {shape}")
    w(f"-- emitter format v{EMITTER_VERSION}; generated, do not edit")
    w("library ieee;")
    w("use ieee.std_logic_1164.all;")
    w("use ieee.numeric_std.all;")
    w(f"use work.{PACKAGE_NAME}.all;")
    w("")
    w(f"entity {name} is")
    w("  port (")
    w(f"    din  : in  std_logic_vector({in_bits - 1} downto 0);")
    w(f"    dout : out std_logic_vector({out_bits - 1} downto 0));")
    w(f"end entity {name};")
    w("")
    w(f"architecture rtl of {name} is")
    w("")
    for li, w_mat in enumerate(mats):
        n_out, n_in = w_mat.shape
        lname = f"l{li + 1}"
        w(f"  -- layer {li + 1}: {n_in} -> {n_out}")
        w(f"  type {lname}_w_t is array (0 to {n_out - 1}, 0 to {n_in - 1})"
          " of integer range 0 to 3;")
        w(f"  constant {lname.upper()}_W : {lname}_w_t := (")
        rows = []
        for j in range(n_out):
            rows.append("    " + _agg(int(v) for v in w_mat[j]))
        w(",\n".join(rows) + ");")
        layer = mirror.layers[li]
        for ti, tname in enumerate(("T1", "T2", "T3")):
            vals = [n.thresholds[ti] for n in layer.neurons]
            w(f"  constant {lname.upper()}_{tname} : int_array(0 to {n_out - 1})"
              f" := {_agg(vals)};")
        w("")
    w(f"  signal x_in : int_array(0 to {shape.input_len - 1});")
    for li, w_mat in enumerate(mats):
        w(f"  signal n{li + 1} : int_array(0 to {w_mat.shape[0] - 1});")
    w("")
    w("begin")
    w("")
    w(f"  unpack : for i in 0 to {shape.input_len - 1} generate")
    w("    x_in(i) <= to_integer(unsigned(din(7 * i + 6 downto 7 * i)));")
    w("  end generate;")
    w("")
    prev = "x_in"
    for li, w_mat in enumerate(mats):
        lname = f"l{li + 1}"
        fn = "first_op" if li == 0 else "cam_mul"
        layer = mirror.layers[li]
        w(f"  -- layer {li + 1} sums and activations")
        for j, neuron in enumerate(layer.neurons):
            if not neuron.terms:
                w(f"  n{li + 1}({j}) <= 0;  -- fully pruned neuron")
                continue
            terms = [f"{fn}({lname.upper()}_W({j}, {src}), {prev}({src}))"
                     for _, src in neuron.terms]
            expr = _tree_expr(terms)
            w(f"  n{li + 1}({j}) <= activate({expr},")
            w(f"    {lname.upper()}_T1({j}), {lname.upper()}_T2({j}),"
              f" {lname.upper()}_T3({j}));")
        w("")
        prev = f"n{li + 1}"
    w(f"  pack : for k in 0 to {shape.output_len - 1} generate")
    w(f"    dout(2 * k + 1 downto 2 * k) <="
      f" std_logic_vector(to_unsigned(n{n_layers}(k), 2));")
    w("  end generate;")
    w("")
    w("end architecture rtl;")
    entity_text = "\n".join(lines) + "\n"
    return EmittedDesign(
        package_text=_PACKAGE_TEXT,
        entity_text=entity_text,
        input_port_bits=in_bits,
        output_port_bits=out_bits,
        adder_tree_depths=mirror.adder_tree_depths,
    )


def write_design(design: EmittedDesign, out_dir, name: str = "lutbnn_net"
                 ) -> tuple[str, str]:
    """Write `<name>_pkg.vhd` and `<name>.vhd`; returns the two paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    pkg_path = os.path.join(out_dir, f"{name}_pkg.vhd")
    ent_path = os.path.join(out_dir, f"{name}.vhd")
    with open(pkg_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(design.package_text)
    with open(ent_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(design.entity_text)
    return pkg_path, ent_path
