"""JSON experiment configuration.

Example::

    {
      "channel": {"rows": [[0.9, 0.1], [0.1, 0.9]]},
      "input": {"probs": [0.5, 0.5]},          # or "optimize"
      "target": "induced",                     # or {"probs": [...]}
      "source": {"kind": "uniform"},           # or {"kind": "bitstream", "p": 0.11}
      "sweep": {"n": [2, 4, 6], "R": [0.5]},   # or "M": [...]
      "epsilon": 0.1,
      "trials": 1000,
      "seed": 12345
    }
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

from .engine import BitStreamSource, MessageSource, UniformSource
from .errors import ConfigError, ResolvabilityError
from .prob import ChannelMatrix, JointPmf, Pmf, joint_from, output_marginal

MAX_SEED = 2**64 - 1
DEFAULT_RHO_GRID = (-0.5, -0.25, 0.0)
KNOWN_KEYS = {
    "channel", "input", "target", "source", "sweep", "epsilon", "trials", "seed",
    "rho_grid", "rho_bound", "name",
}


@dataclass(frozen=True)
class SweepPoint:
    n: int
    M: int
    R: float


@dataclass(eq=False)
class ExperimentConfig:
    channel: ChannelMatrix
    input: Union[Pmf, str]
    target: Union[Pmf, str]
    source: dict
    sweep: dict
    epsilon: float = 0.1
    trials: int = 1000
    seed: Optional[int] = None
    rho_grid: tuple = DEFAULT_RHO_GRID
    rho_bound: float = -0.5
    name: Optional[str] = None

    # resolved in validate()
    _points: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "channel": self.channel.to_json(),
            "input": self.input if isinstance(self.input, str) else self.input.to_json(),
            "target": self.target if isinstance(self.target, str) else self.target.to_json(),
            "source": dict(self.source),
            "sweep": {k: list(v) for k, v in self.sweep.items()},
            "epsilon": self.epsilon,
            "trials": self.trials,
            "rho_grid": list(self.rho_grid),
            "rho_bound": self.rho_bound,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        if self.name is not None:
            out["name"] = self.name
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @property
    def points(self) -> list[SweepPoint]:
        return list(self._points)

    def message_source(self, M: int) -> MessageSource:
        if self.source["kind"] == "uniform":
            return UniformSource(M)
        bits = int(round(math.log2(M)))
        return BitStreamSource(bits, float(self.source["p"]))

    @property
    def source_label(self) -> str:
        return self.source["kind"]

    @property
    def source_p(self) -> Optional[float]:
        return self.source.get("p")


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


def _fail(msg: str, text: Optional[str], key: str):
    raise ConfigError(f"{key}: {msg}", line=_line_of(text, key), path=key)


def _pmf(obj, text, key) -> Pmf:
    if not isinstance(obj, dict) or "probs" not in obj:
        _fail('expected {"probs": [...]}', text, key)
    try:
        return Pmf(obj["probs"])
    except (ResolvabilityError, ValueError, TypeError) as e:
        _fail(str(e), text, key)


def _int_list(obj, text, key) -> list[int]:
    if not isinstance(obj, list) or not obj:
        _fail("expected a non-empty list", text, key)
    out = []
    for v in obj:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
            _fail(f"entries must be positive integers, got {v!r}", text, key)
        out.append(int(v))
    return out


def _sweep_points(sweep: dict, kind: str, text) -> list[SweepPoint]:
    ns = _int_list(sweep.get("n"), text, "n")
    has_m, has_r = "M" in sweep, "R" in sweep
    if has_m == has_r:
        _fail('give exactly one of "M" or "R"', text, "sweep")
    points = []
    if has_m:
        for n in ns:
            for M in _int_list(sweep["M"], text, "M"):
                points.append(SweepPoint(n, M, math.log2(M) / n))
    else:
        rates = sweep["R"]
        if not isinstance(rates, list) or not rates:
            _fail("expected a non-empty list", text, "R")
        for n in ns:
            for R in rates:
                if not isinstance(R, (int, float)) or R < 0:
                    _fail(f"rates must be non-negative numbers, got {R!r}", text, "R")
                bits = n * R
                if abs(bits - round(bits)) > 1e-9:
                    _fail(f"n*R = {n}*{R} = {bits:g} is not an integer; M = 2^(nR) would need rounding", text, "R")
                points.append(SweepPoint(n, 2 ** int(round(bits)), float(R)))
    if kind == "bitstream":
        for pt in points:
            if pt.M & (pt.M - 1):
                _fail(f"bit-stream sources need M a power of two, got M={pt.M}", text, "M")
    return points


def from_dict(obj: dict, text: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("top level must be a JSON object", line=1)
    unknown = set(obj) - KNOWN_KEYS
    if unknown:
        key = sorted(unknown)[0]
        _fail("unknown key", text, key)
    for key in ("channel", "input", "target", "sweep"):
        if key not in obj:
            raise ConfigError(f"missing required key {key!r}", line=1, path=key)

    ch = obj["channel"]
    if not isinstance(ch, dict) or "rows" not in ch:
        _fail('expected {"rows": [[...], ...]}', text, "channel")
    try:
        channel = ChannelMatrix(ch["rows"])
    except (ResolvabilityError, ValueError, TypeError) as e:
        _fail(str(e), text, "channel")

    inp = obj["input"]
    if inp == "optimize":
        input_ = "optimize"
    else:
        input_ = _pmf(inp, text, "input")
        if input_.size != channel.n_inputs:
            _fail(f"{input_.size} letters but channel has {channel.n_inputs} inputs", text, "input")

    tgt = obj["target"]
    if tgt == "induced":
        if input_ == "optimize":
            _fail('"induced" target needs an explicit input distribution', text, "target")
        target = "induced"
    else:
        target = _pmf(tgt, text, "target")
        if target.size != channel.n_outputs:
            _fail(f"{target.size} letters but channel has {channel.n_outputs} outputs", text, "target")
        if isinstance(input_, Pmf):
            gap = np.abs(output_marginal(input_, channel).probs - target.probs).max()
            if gap > 1e-8:
                _fail(f"target differs from the channel output of the input by {gap:.3g}", text, "target")

    source = obj.get("source", {"kind": "uniform"})
    if not isinstance(source, dict) or source.get("kind") not in ("uniform", "bitstream"):
        _fail('expected {"kind": "uniform"} or {"kind": "bitstream", "p": ...}', text, "source")
    if source["kind"] == "bitstream":
        p = source.get("p")
        if not isinstance(p, (int, float)) or not (0 < p <= 0.5):
            _fail(f"bit-stream p must lie in (0, 1/2], got {p!r}", text, "p")
        source = {"kind": "bitstream", "p": float(p)}
    else:
        source = {"kind": "uniform"}

    sweep = obj["sweep"]
    if not isinstance(sweep, dict):
        _fail("expected an object with n and M or R", text, "sweep")
    points = _sweep_points(sweep, source["kind"], text)

    eps = obj.get("epsilon", 0.1)
    if not isinstance(eps, (int, float)) or eps < 0:
        _fail(f"must be a non-negative number, got {eps!r}", text, "epsilon")
    trials = obj.get("trials", 1000)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        _fail(f"must be a positive integer, got {trials!r}", text, "trials")
    seed = obj.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED):
        _fail(f"must be an unsigned 64-bit integer, got {seed!r}", text, "seed")
    grid = obj.get("rho_grid", list(DEFAULT_RHO_GRID))
    if not isinstance(grid, list) or not grid or any(
        not isinstance(r, (int, float)) or not -0.5 <= r <= 0 for r in grid
    ):
        _fail("must be a non-empty list of values in [-1/2, 0]", text, "rho_grid")
    rho_bound = obj.get("rho_bound", -0.5)
    if not isinstance(rho_bound, (int, float)) or not -0.5 <= rho_bound < 0:
        _fail(f"must lie in [-1/2, 0), got {rho_bound!r}", text, "rho_bound")
    name = obj.get("name")

    sweep_clean = {"n": list(sweep["n"])}
    sweep_clean["M" if "M" in sweep else "R"] = list(sweep["M" if "M" in sweep else "R"])
    cfg = ExperimentConfig(
        channel=channel,
        input=input_,
        target=target,
        source=source,
        sweep=sweep_clean,
        epsilon=float(eps),
        trials=trials,
        seed=seed,
        rho_grid=tuple(float(r) for r in grid),
        rho_bound=float(rho_bound),
        name=name,
    )
    cfg._points = points
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", line=e.lineno) from None
    return from_dict(obj, text)


def load(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


@dataclass
class ResolvedModel:
    Q_U: Pmf
    W: ChannelMatrix
    Q_V: Pmf
    joint: JointPmf


def resolve(cfg: ExperimentConfig) -> ResolvedModel:
    """Fix the input (optimizing it if asked) and the target."""
    from .optimizer import min_rate

    if cfg.input == "optimize":
        Q_U = min_rate(cfg.channel, cfg.target).argmin_input
    else:
        Q_U = cfg.input
    Q_V = output_marginal(Q_U, cfg.channel) if cfg.target == "induced" else cfg.target
    return ResolvedModel(Q_U, cfg.channel, Q_V, joint_from(Q_U, cfg.channel))
