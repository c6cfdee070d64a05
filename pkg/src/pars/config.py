"""Run configuration: one TOML document covering teacher endpoint, simulated
teacher, gate and sampling parameters, strategy, concurrency, and seed."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gates import GateConfig
from .sampler import ParsConfig, ScheduleMode, TemperatureSchedule
from .selectors import Strategy
from .teacher import EndpointConfig, SimTeacherConfig


@dataclass
class RunConfig:
    seed: int = 0
    strategy: Strategy = Strategy.PARS
    concurrency: int = 1
    use_sim: bool = True
    k_fixed: int = 12
    base_temperature: float = 0.6
    gate: GateConfig = field(default_factory=GateConfig)
    pars: ParsConfig = field(default_factory=ParsConfig)
    sim_teacher: SimTeacherConfig = field(default_factory=SimTeacherConfig)
    teacher_endpoint: EndpointConfig | None = None
    judge_endpoint: EndpointConfig | None = None


def _build(cls, table: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**table)


def load_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> RunConfig:
    cfg = RunConfig()
    cfg.seed = int(doc.get("seed", cfg.seed))
    cfg.strategy = Strategy(doc.get("strategy", cfg.strategy.value))
    cfg.concurrency = int(doc.get("concurrency", cfg.concurrency))
    cfg.use_sim = bool(doc.get("sim", cfg.use_sim))
    cfg.k_fixed = int(doc.get("k_fixed", cfg.k_fixed))
    cfg.base_temperature = float(doc.get("base_temperature", cfg.base_temperature))

    if "gate" in doc:
        cfg.gate = _build(GateConfig, doc["gate"])
    if "pars" in doc:
        table = dict(doc["pars"])
        if "schedule" in table:
            sched = dict(table.pop("schedule"))
            if "mode" in sched:
                sched["mode"] = ScheduleMode(sched["mode"])
            table["schedule"] = _build(TemperatureSchedule, sched)
        cfg.pars = _build(ParsConfig, table)
    if "sim_teacher" in doc:
        table = dict(doc["sim_teacher"])
        table.setdefault("seed", cfg.seed)
        cfg.sim_teacher = _build(SimTeacherConfig, table)
    else:
        cfg.sim_teacher = SimTeacherConfig(seed=cfg.seed)
    if "teacher_endpoint" in doc:
        cfg.teacher_endpoint = _build(EndpointConfig, doc["teacher_endpoint"])
    if "judge_endpoint" in doc:
        cfg.judge_endpoint = _build(EndpointConfig, doc["judge_endpoint"])
    return cfg
