"""Run configuration: INI-style ``key = value`` sections with a fixed schema.

Sections
  [experiment]   kind, code, distances, rounds, basis, measure, decoder, shots, seed, workers
  [noise]        e, p, q, gamma, phi, f_pos, f_neg, conversion, reset, schedule, herald
  [analysis]     rate, threshold, min_failures, bootstrap, hierarchy_rate
  [debug]        force_checks
  [series NAME]  any experiment, noise or analysis key; overrides the base sections

Numeric noise keys take a single value, a comma list, or ``start:stop:step``
(stop inclusive). The grid is the product of all listed values and distances.
"""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .montecarlo import ExperimentPoint


class ConfigError(ValueError):
    pass


EXPERIMENT_KEYS = {"kind", "code", "distances", "rounds", "basis", "measure", "decoder", "shots", "seed", "workers"}
NOISE_FLOAT_KEYS = {"e", "p", "q", "gamma", "phi", "f_pos", "f_neg"}
NOISE_KEYS = NOISE_FLOAT_KEYS | {"conversion", "reset", "schedule", "herald"}
ANALYSIS_KEYS = {"rate", "threshold", "min_failures", "bootstrap", "hierarchy_rate"}
DEBUG_KEYS = {"force_checks"}
SECTIONS = {"experiment": EXPERIMENT_KEYS, "noise": NOISE_KEYS, "analysis": ANALYSIS_KEYS, "debug": DEBUG_KEYS}


def parse_values(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad range {text!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range {text!r}")
        n = math.floor((stop - start) / step + 1e-9) + 1
        return [round(start + i * step, 12) for i in range(n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


@dataclass(frozen=True)
class Analysis:
    rate: str = "e"
    threshold: float | None = None
    min_failures: int = 10
    bootstrap: int = 1000
    hierarchy_rate: float = 0.02


@dataclass(frozen=True)
class Series:
    name: str
    points: tuple[ExperimentPoint, ...]
    analysis: Analysis


@dataclass(frozen=True)
class RunConfig:
    series: tuple[Series, ...]
    shots: int = 100_000
    seed: int = 0
    workers: int = 1
    force_checks: tuple[int, ...] = ()
    out: Path | None = None
    source: str = ""

    @property
    def points(self) -> list[ExperimentPoint]:
        return [p for s in self.series for p in s.points]

    def with_overrides(self, shots=None, seed=None, workers=None, out=None) -> "RunConfig":
        kw = {}
        if shots is not None:
            kw["shots"] = shots
        if seed is not None:
            kw["seed"] = seed
        if workers is not None:
            kw["workers"] = workers
        if out is not None:
            kw["out"] = Path(out)
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.seed < 2**63:
            raise ConfigError("seed must be in [0, 2^63)")


def _series(name: str, values: dict[str, str]) -> Series:
    kind = values.get("kind", "code_capacity")
    code = values.get("code", "rotated")
    dists = [_int("distances", v) for v in values.get("distances", "3").split(",") if v.strip()]
    if not dists:
        raise ConfigError("distances is empty")
    base = dict(
        kind=kind, code=code,
        rounds=_int("rounds", values.get("rounds", "0")),
        basis=values.get("basis", "Z").strip().upper(),
        measure=values.get("measure", "XZ").strip().upper(),
        decoder=values.get("decoder", "uf").strip(),
        conversion=values.get("conversion", "mixed").strip(),
        reset=values.get("reset", "oneway").strip(),
        schedule=values.get("schedule", "every_gate").strip(),
        herald=_bool(values.get("herald", "true")),
        series=name,
    )
    grids = {k: parse_values(values.get(k, "0")) for k in sorted(NOISE_FLOAT_KEYS)}
    for k, v in grids.items():
        if not v:
            raise ConfigError(f"{k} has no values")
    keys = list(grids)
    points = []
    try:
        for d in dists:
            for combo in itertools.product(*(grids[k] for k in keys)):
                points.append(ExperimentPoint(d=d, **base, **dict(zip(keys, combo))))
    except ValueError as exc:
        raise ConfigError(f"series {name or 'default'}: {exc}") from None
    thr = values.get("threshold")
    analysis = Analysis(
        rate=values.get("rate", "e").strip(),
        threshold=float(thr) if thr not in (None, "") else None,
        min_failures=_int("min_failures", values.get("min_failures", "10")),
        bootstrap=_int("bootstrap", values.get("bootstrap", "1000")),
        hierarchy_rate=float(values.get("hierarchy_rate", "0.02")),
    )
    if analysis.rate not in {f.name for f in fields(ExperimentPoint)} or analysis.rate not in NOISE_FLOAT_KEYS:
        raise ConfigError(f"rate must be one of {sorted(NOISE_FLOAT_KEYS)}, got {analysis.rate!r}")
    return Series(name, tuple(points), analysis)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    merged: dict[str, str] = {}
    series_sections = []
    for sec in cp.sections():
        if sec.startswith("series "):
            series_sections.append(sec)
            allowed = EXPERIMENT_KEYS | NOISE_KEYS | ANALYSIS_KEYS
            allowed -= {"shots", "seed", "workers"}
        elif sec in SECTIONS:
            allowed = SECTIONS[sec]
        else:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - allowed
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
        if sec in SECTIONS:
            merged.update(cp[sec])
    if series_sections:
        series = tuple(_series(sec[len("series "):].strip(), merged | dict(cp[sec])) for sec in series_sections)
        names = [s.name for s in series]
        if len(set(names)) != len(names) or "" in names:
            raise ConfigError("series names must be unique and non-empty")
    else:
        series = (_series("", merged),)
    force = tuple(_int("force_checks", v) for v in merged.get("force_checks", "").split(",") if v.strip())
    cfg = RunConfig(
        series=series,
        shots=_int("shots", merged.get("shots", "100000")),
        seed=_int("seed", merged.get("seed", "0")),
        workers=_int("workers", merged.get("workers", "1")),
        force_checks=force,
        source=source,
    )
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a config file. Raises OSError on I/O failure, ConfigError on bad content."""
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def bundled_configs() -> dict[str, Path]:
    root = Path(__file__).parent / "configs"
    return {p.stem: p for p in sorted(root.glob("*.cfg"))}
