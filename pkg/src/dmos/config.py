"""Run configuration shared by the kernel, the explorer and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import platform as plat
from . import sysdefs
from .platform import ConfigError

SCHEDULERS = ("null", "sync", "async", "fair")
FS_PROVIDERS = ("vfs", "proxy", "replay", "none")
CLOCK_MODES = ("fixed-tick", "indeterminate-shift")

REPORT = "report"
IGNORE = "ignore"

DEFAULT_EPOCH_NS = 1_577_836_800 * 10**9  # 2020-01-01T00:00:00Z


def default_fault_policy() -> dict[str, str]:
    return {kind: REPORT for kind in sorted(sysdefs.FAULT_KINDS)}


@dataclass
class RunConfig:
    scheduler: str = "async"
    fs: str = "vfs"
    clock_mode: str = "fixed-tick"
    quantum_ns: int = 1_000_000
    max_steps: int = 3
    epoch_ns: int = DEFAULT_EPOCH_NS
    fault_policy: dict[str, str] = field(default_factory=default_fault_policy)
    inject_alloc_faults: bool = False
    inputs: dict[str, bytes] = field(default_factory=dict)
    input_policy: str = plat.STRICT
    input_alphabet: tuple[int, ...] = (0, 1)
    preload: str | None = None
    trace_path: str | None = None
    sandbox_dir: str | None = None
    allow_host: bool = False
    choices_path: str | None = None
    seed: int | None = None
    max_tasks: int = 64
    max_depth: int = 10_000
    deficit_bound: int = 8
    pipe_capacity: int = 4096
    symlink_depth: int = 8

    def validate(self) -> None:
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.fs not in FS_PROVIDERS:
            raise ConfigError(f"unknown fs provider {self.fs!r}")
        if self.clock_mode not in CLOCK_MODES:
            raise ConfigError(f"unknown clock mode {self.clock_mode!r}")
        if self.quantum_ns <= 0:
            raise ConfigError("quantum_ns must be positive")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.fs == "replay" and not self.trace_path:
            raise ConfigError("replay fs provider requires a trace path")
        if self.fs == "proxy":
            if not self.sandbox_dir:
                raise ConfigError("proxy fs provider requires a sandbox directory")
            if not self.allow_host:
                raise ConfigError("proxy fs provider requires the host hook")
        if self.input_policy not in plat.INPUT_POLICIES:
            raise ConfigError(f"unknown input policy {self.input_policy!r}")
        for kind, action in self.fault_policy.items():
            if kind not in sysdefs.FAULT_KINDS:
                raise ConfigError(f"unknown fault kind {kind!r}")
            if action not in (REPORT, IGNORE):
                raise ConfigError(f"fault action must be report or ignore, got {action!r}")
        if self.fault_policy.get(sysdefs.F_REPLAY_DIVERGENCE, REPORT) != REPORT:
            raise ConfigError("replay-divergence cannot be ignored")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.max_tasks < 1:
            raise ConfigError("max_tasks must be >= 1")
        if self.deficit_bound < 1:
            raise ConfigError("deficit_bound must be >= 1")

    def with_overrides(self, **kwargs) -> "RunConfig":
        cfg = replace(self, **kwargs)
        # containers are shared by replace(); copy the mutable ones
        cfg.fault_policy = dict(cfg.fault_policy)
        cfg.inputs = dict(cfg.inputs)
        return cfg

    def describe(self) -> str:
        """Canonical one-line form, used for trace headers."""
        policy = ",".join(f"{k}={v}" for k, v in sorted(self.fault_policy.items()))
        inputs = ",".join(sorted(self.inputs))
        return (
            f"scheduler={self.scheduler} fs={self.fs} clock={self.clock_mode}"
            f" quantum={self.quantum_ns} max_steps={self.max_steps}"
            f" epoch={self.epoch_ns} inject_alloc={int(self.inject_alloc_faults)}"
            f" policy=[{policy}] inputs=[{inputs}] input_policy={self.input_policy}"
        )
