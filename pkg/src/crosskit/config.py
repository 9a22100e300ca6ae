"""Run configuration: a flat ``key = value`` text format.

Device keys (MHz): ``omega1_mhz`` (optional, sweeps set it from the
detuning), ``omega2_mhz``, ``anh1_mhz``, ``anh2_mhz``, ``j_mhz`` and
``levels``. The remaining keys describe the run. ``#`` starts a comment.
Ranges are ``start:step:stop`` (inclusive), ``log:first:last:count`` or a
comma-separated list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import MissingKey, ParseError
from .model import DeviceParams
from .pipeline import SweepSettings

__all__ = ["RunConfig", "parse_config", "echo_config", "parse_range", "REQUIRED_KEYS"]

REQUIRED_KEYS = ("omega2_mhz", "anh1_mhz", "anh2_mhz", "j_mhz")


def _num(text: str) -> float:
    # accept the typographic minus sign
    return float(text.strip().replace("−", "-"))


def parse_range(text: str) -> tuple[float, ...]:
    """Expand a range expression into a tuple of floats."""
    t = text.strip().replace("−", "-")
    if not t:
        raise ValueError("empty range")
    if t.startswith("log:"):
        parts = t[4:].split(":")
        if len(parts) != 3:
            raise ValueError(f"log range needs log:first:last:count, got {text!r}")
        a, b, n = _num(parts[0]), _num(parts[1]), int(parts[2])
        if a <= 0 or b <= 0 or n < 1:
            raise ValueError(f"log range needs positive bounds and count, got {text!r}")
        return tuple(float(v) for v in np.geomspace(a, b, n))
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise ValueError(f"range needs start:step:stop, got {text!r}")
        a, step, b = (_num(p) for p in parts)
        if step == 0 or (b - a) / step < 0:
            raise ValueError(f"step {step:g} does not lead from {a:g} to {b:g}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        # integer multiples keep grid points exact (no accumulated rounding)
        return tuple(float(a + k * step) for k in range(n))
    return tuple(_num(v) for v in t.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    omega2_mhz: float
    anh1_mhz: float
    anh2_mhz: float
    j_mhz: float
    omega1_mhz: float | None = None
    levels: int = 4
    seed: int = 0
    pole_guard_mhz: float = 1.0
    deltas: str = "-300:20:500"
    amplitudes: str = "log:0.5:250:64"
    tmax_ns: float | None = None
    dt_ns: float = 10.0
    crosstalk: float = 0.1
    max_leakage: float = 0.25
    carrier: str = "mean"
    decoherence: bool = False
    t1_us: float | None = None
    t2_us: float | None = None
    lab_validation: bool = False
    shots: int = 0
    workers: int = 1
    output: str = "crosskit_out"

    def device(self, delta: float | None = None) -> DeviceParams:
        """Device constants; ``delta`` (MHz) overrides ``omega1_mhz``."""
        if delta is None and self.omega1_mhz is None:
            raise MissingKey("omega1_mhz is required when no detuning is given")
        omega1 = self.omega2_mhz + delta if delta is not None else self.omega1_mhz
        return DeviceParams(
            omega1=omega1,
            omega2=self.omega2_mhz,
            anh1=self.anh1_mhz,
            anh2=self.anh2_mhz,
            coupling_j=self.j_mhz,
            levels=(self.levels, self.levels),
        )

    def delta_grid(self) -> tuple[float, ...]:
        return parse_range(self.deltas)

    def amplitude_grid(self) -> tuple[float, ...]:
        return parse_range(self.amplitudes)

    def durations(self) -> np.ndarray | None:
        """Fixed pulse-length grid, or ``None`` for per-amplitude automatic windows."""
        if self.tmax_ns is None:
            return None
        n = int(round(self.tmax_ns / self.dt_ns))
        return np.arange(n + 1) * self.dt_ns

    def sweep_settings(self) -> SweepSettings:
        durations = self.durations()
        return SweepSettings(
            amplitudes=self.amplitude_grid(),
            durations=None if durations is None else tuple(durations),
            crosstalk=self.crosstalk,
            max_leakage=self.max_leakage,
            carrier_reference=self.carrier,
            levels=self.levels,
            pole_guard=self.pole_guard_mhz,
            t1_us=self.t1_us if self.decoherence else None,
            t2_us=self.t2_us if self.decoherence else None,
            shots=self.shots,
            seed=self.seed,
            workers=self.workers,
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed))


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {"levels", "seed", "shots", "workers"}
_BOOL = {"decoherence", "lab_validation"}
_STR = {"deltas", "amplitudes", "carrier", "output"}
_OPTIONAL = {"omega1_mhz", "tmax_ns", "t1_us", "t2_us"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: str):
    if key in _BOOL:
        v = raw.lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if key in _STR:
        if key in ("deltas", "amplitudes"):
            parse_range(raw)
        if key == "carrier" and raw not in ("mean", "ground"):
            raise ValueError("carrier must be 'mean' or 'ground'")
        return raw
    if key in _OPTIONAL and raw.lower() == "none":
        return None
    if key in _INT:
        return int(raw)
    return _num(raw)


def parse_config(text: str) -> RunConfig:
    """Strict parse of configuration text.

    Unknown or repeated keys and malformed values raise :class:`ParseError`
    with the line number; absent required keys raise :class:`MissingKey`.
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected key=value, got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _FIELDS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", lineno) from None
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise MissingKey(f"missing required keys: {', '.join(missing)} (required: {', '.join(REQUIRED_KEYS)})")
    cfg = RunConfig(**values)
    if cfg.levels < 4:
        # dressed-state labels up to three excitations need four levels per mode
        raise ParseError("levels must be >= 4")
    return cfg


def echo_config(cfg: RunConfig) -> str:
    """Text that :func:`parse_config` reads back to ``cfg``."""
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        if v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{name} = {v}")
    return "\n".join(lines) + "\n"
