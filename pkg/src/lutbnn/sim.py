"""Synthetic SiPM waveform generator.

Frames are 128 samples of a 12-bit digitizer: a single double-exponential
pulse ("Good"), a pile-up of two pulses ("Ugly"), or uniform random noise.
Generation is deterministic given (config, seed): every frame's content is a
pure function of the seed, its label and its index within that label, so
batches come out identical regardless of generation order or parallelism.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, asdict
from enum import Enum

import numpy as np

from .core import RAW_MAX

DATASET_FORMAT_VERSION = 1
_BINARY_MAGIC = b"lutbnn-dataset-bin 1\n"

# stream tags for per-label RNG derivation
_STREAM_PARAMS = 0
_STREAM_NOISE = 1
_LABEL_TAG = {"Good": 0, "Ugly": 1, "Noise": 2}


class TrueLabel(Enum):
    GOOD = "Good"
    UGLY = "Ugly"
    NOISE = "Noise"


@dataclass(frozen=True)
class PulseParams:
    amplitude: float   # peak height, ADC counts
    t0: float          # onset, sample index
    tau_rise: float    # samples
    tau_fall: float    # samples

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if not 0 < self.tau_rise < self.tau_fall:
            raise ValueError("need 0 < tau_rise < tau_fall")


@dataclass(frozen=True)
class SimConfig:
    frame_len: int = 128
    baseline: float = 200.0
    noise_sigma: float = 8.0
    amplitude_range: tuple[float, float] = (300.0, 3500.0)
    tau_rise_range: tuple[float, float] = (1.5, 3.0)
    tau_fall_range: tuple[float, float] = (15.0, 30.0)
    t0_range: tuple[float, float] = (10.0, 40.0)
    pileup_gap_range: tuple[float, float] = (4.0, 50.0)
    rng_seed: int = 0

    def __post_init__(self):
        if self.frame_len < 1:
            raise ValueError("frame_len must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for name in ("amplitude_range", "tau_rise_range", "tau_fall_range",
                     "t0_range", "pileup_gap_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        kwargs = dict(d)
        for name in ("amplitude_range", "tau_rise_range", "tau_fall_range",
                     "t0_range", "pileup_gap_range"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray  # uint16, frame_len values in [0, 4095]
    label: TrueLabel

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.uint16)
        if s.ndim != 1:
            raise ValueError("samples must be a 1-d array")
        if s.size and s.max() > RAW_MAX:
            raise ValueError("samples exceed 12-bit range")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)


def double_exp(t, p: PulseParams):
    """Peak-normalized double exponential: zero before onset, peak = amplitude."""
    t = np.asarray(t, dtype=np.float64)
    dt = np.maximum(t - p.t0, 0.0)
    shape = np.exp(-dt / p.tau_fall) - np.exp(-dt / p.tau_rise)
    # analytic peak of exp(-u/tf) - exp(-u/tr) at u* = tr*tf/(tf-tr) * ln(tf/tr)
    u_star = p.tau_rise * p.tau_fall / (p.tau_fall - p.tau_rise) * math.log(
        p.tau_fall / p.tau_rise
    )
    peak = math.exp(-u_star / p.tau_fall) - math.exp(-u_star / p.tau_rise)
    return p.amplitude / peak * shape


def _digitize(analog: np.ndarray) -> np.ndarray:
    # round half up, then clip to the 12-bit range
    return np.clip(np.floor(analog + 0.5), 0, RAW_MAX).astype(np.uint16)


def _draw(rng, lo_hi) -> float:
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def _pulse_frame(cfg: SimConfig, pulses, noise: np.ndarray) -> np.ndarray:
    t = np.arange(cfg.frame_len, dtype=np.float64)
    analog = np.full(cfg.frame_len, cfg.baseline, dtype=np.float64)
    for p in pulses:
        analog += double_exp(t, p)
    return _digitize(analog + noise)


def gen_good(cfg: SimConfig, rng) -> Waveform:
    """One pulse with uniformly drawn parameters, plus baseline and noise."""
    p = PulseParams(
        amplitude=_draw(rng, cfg.amplitude_range),
        t0=_draw(rng, cfg.t0_range),
        tau_rise=_draw(rng, cfg.tau_rise_range),
        tau_fall=_draw(rng, cfg.tau_fall_range),
    )
    noise = rng.normal(0.0, cfg.noise_sigma, cfg.frame_len)
    return Waveform(_pulse_frame(cfg, [p], noise), TrueLabel.GOOD)


def gen_ugly(cfg: SimConfig, rng) -> Waveform:
    """Two piled-up pulses; the second onset is offset by a drawn gap."""
    p1 = PulseParams(
        amplitude=_draw(rng, cfg.amplitude_range),
        t0=_draw(rng, cfg.t0_range),
        tau_rise=_draw(rng, cfg.tau_rise_range),
        tau_fall=_draw(rng, cfg.tau_fall_range),
    )
    gap = _draw(rng, cfg.pileup_gap_range)
    p2 = PulseParams(
        amplitude=_draw(rng, cfg.amplitude_range),
        t0=p1.t0 + gap,
        tau_rise=_draw(rng, cfg.tau_rise_range),
        tau_fall=_draw(rng, cfg.tau_fall_range),
    )
    noise = rng.normal(0.0, cfg.noise_sigma, cfg.frame_len)
    return Waveform(_pulse_frame(cfg, [p1, p2], noise), TrueLabel.UGLY)


def gen_noise(cfg: SimConfig, rng) -> Waveform:
    """Every sample independently uniform over the full 12-bit range."""
    samples = rng.integers(0, RAW_MAX + 1, cfg.frame_len, dtype=np.uint16)
    return Waveform(samples, TrueLabel.NOISE)


def _label_rng(seed: int, label: TrueLabel, stream: int):
    key = (_LABEL_TAG[label.value], stream)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _batch_pulses(cfg: SimConfig, label: TrueLabel, n: int) -> np.ndarray:
    """Vectorized pulse frames; frame i is a pure function of (seed, label, i)."""
    if n == 0:
        return np.zeros((0, cfg.frame_len), dtype=np.uint16)
    prng = _label_rng(cfg.rng_seed, label, _STREAM_PARAMS)
    nrng = _label_rng(cfg.rng_seed, label, _STREAM_NOISE)
    n_pulses = 1 if label is TrueLabel.GOOD else 2
    # per-frame draw order matches gen_good / gen_ugly
    n_par = 4 if label is TrueLabel.GOOD else 8
    u = prng.uniform(size=(n, n_par))
    noise = nrng.normal(0.0, cfg.noise_sigma, (n, cfg.frame_len))

    def span(col, lo_hi):
        lo, hi = lo_hi
        return lo + (hi - lo) * col

    t = np.arange(cfg.frame_len, dtype=np.float64)
    analog = np.full((n, cfg.frame_len), cfg.baseline, dtype=np.float64)
    amp = span(u[:, 0], cfg.amplitude_range)
    t0 = span(u[:, 1], cfg.t0_range)
    tr = span(u[:, 2], cfg.tau_rise_range)
    tf = span(u[:, 3], cfg.tau_fall_range)
    for k in range(n_pulses):
        if k == 1:
            gap = span(u[:, 4], cfg.pileup_gap_range)
            amp = span(u[:, 5], cfg.amplitude_range)
            t0 = t0 + gap
            tr = span(u[:, 6], cfg.tau_rise_range)
            tf = span(u[:, 7], cfg.tau_fall_range)
        dt = np.maximum(t[None, :] - t0[:, None], 0.0)
        shape = np.exp(-dt / tf[:, None]) - np.exp(-dt / tr[:, None])
        u_star = tr * tf / (tf - tr) * np.log(tf / tr)
        peak = np.exp(-u_star / tf) - np.exp(-u_star / tr)
        analog += (amp / peak)[:, None] * shape
    return _digitize(analog + noise)


def gen_batch_arrays(cfg: SimConfig, n_good: int, n_ugly: int, n_noise: int
                     ) -> tuple[np.ndarray, list[TrueLabel]]:
    """Batch content as a stacked (N, frame_len) uint16 array plus labels.

    Same frames as `gen_batch`, without per-frame object overhead.
    """
    if min(n_good, n_ugly, n_noise) < 0:
        raise ValueError("frame counts must be >= 0")
    blocks = [
        _batch_pulses(cfg, TrueLabel.GOOD, n_good),
        _batch_pulses(cfg, TrueLabel.UGLY, n_ugly),
    ]
    if n_noise:
        nrng = _label_rng(cfg.rng_seed, TrueLabel.NOISE, _STREAM_NOISE)
        blocks.append(nrng.integers(0, RAW_MAX + 1, (n_noise, cfg.frame_len),
                                    dtype=np.uint16))
    else:
        blocks.append(np.zeros((0, cfg.frame_len), dtype=np.uint16))
    labels = ([TrueLabel.GOOD] * n_good + [TrueLabel.UGLY] * n_ugly
              + [TrueLabel.NOISE] * n_noise)
    return np.concatenate(blocks, axis=0), labels


def gen_batch(cfg: SimConfig, n_good: int, n_ugly: int, n_noise: int,
              rng=None) -> list[Waveform]:
    """Labeled batch: n_good Good frames, then n_ugly Ugly, then n_noise Noise.

    Content is fully determined by (cfg, cfg.rng_seed); the optional rng
    argument is ignored so callers can't accidentally break reproducibility.
    """
    samples, labels = gen_batch_arrays(cfg, n_good, n_ugly, n_noise)
    return [Waveform(s, lab) for s, lab in zip(samples, labels)]


def batch_arrays(frames: list[Waveform]) -> tuple[np.ndarray, list[TrueLabel]]:
    """Stack frames into a (N, frame_len) uint16 array plus the label list."""
    if not frames:
        return np.zeros((0, 0), dtype=np.uint16), []
    return np.stack([f.samples for f in frames]), [f.label for f in frames]


# --- dataset files ----------------------------------------------------------
#
# Text (v1):
#   lutbnn-dataset 1
#   config {...json echo of SimConfig...}
#   counts good=.. ugly=.. noise=..
#   Good,200,201,...          (one record per frame, 128 samples)
#
# Binary (v1): the magic line, the same two header lines, then per frame one
# label byte (0=Good 1=Ugly 2=Noise) and frame_len little-endian uint16s.


def _header_lines(cfg: SimConfig, frames: list[Waveform]) -> list[str]:
    counts = {lab: 0 for lab in ("Good", "Ugly", "Noise")}
    for f in frames:
        counts[f.label.value] += 1
    return [
        f"lutbnn-dataset {DATASET_FORMAT_VERSION}",
        "config " + json.dumps(cfg.to_dict(), sort_keys=True),
        f"counts good={counts['Good']} ugly={counts['Ugly']} noise={counts['Noise']}",
    ]


def save_dataset(frames: list[Waveform], cfg: SimConfig, path,
                 binary: bool = False) -> None:
    if binary:
        with open(path, "wb") as f:
            f.write(_BINARY_MAGIC)
            for line in _header_lines(cfg, frames):
                f.write(line.encode() + b"\n")
            for wf in frames:
                f.write(bytes([_LABEL_TAG[wf.label.value]]))
                f.write(wf.samples.astype("<u2").tobytes())
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in _header_lines(cfg, frames):
                f.write(line + "\n")
            for wf in frames:
                f.write(wf.label.value + ","
                        + ",".join(str(int(s)) for s in wf.samples) + "\n")


def _parse_header(lines: list[str]) -> SimConfig:
    if not lines or lines[0] != f"lutbnn-dataset {DATASET_FORMAT_VERSION}":
        raise ValueError("not a lutbnn-dataset v1 document")
    if not lines[1].startswith("config "):
        raise ValueError("missing config line")
    return SimConfig.from_dict(json.loads(lines[1][len("config "):]))


def load_dataset(path) -> tuple[list[Waveform], SimConfig]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob.startswith(_BINARY_MAGIC):
        rest = blob[len(_BINARY_MAGIC):]
        stream = io.BytesIO(rest)
        header = [stream.readline().decode().rstrip("\n") for _ in range(3)]
        cfg = _parse_header(header)
        by_tag = {v: TrueLabel(k) for k, v in _LABEL_TAG.items()}
        frames = []
        rec = 1 + 2 * cfg.frame_len
        body = stream.read()
        if len(body) % rec:
            raise ValueError("truncated binary dataset")
        for off in range(0, len(body), rec):
            label = by_tag[body[off]]
            samples = np.frombuffer(body, dtype="<u2", count=cfg.frame_len,
                                    offset=off + 1).astype(np.uint16)
            frames.append(Waveform(samples, label))
        return frames, cfg
    lines = blob.decode().splitlines()
    cfg = _parse_header(lines[:3])
    frames = []
    for line in lines[3:]:
        if not line:
            continue
        parts = line.split(",")
        label = TrueLabel(parts[0])
        samples = np.array([int(v) for v in parts[1:]], dtype=np.uint16)
        if len(samples) != cfg.frame_len:
            raise ValueError("frame length mismatch in dataset record")
        frames.append(Waveform(samples, label))
    return frames, cfg
