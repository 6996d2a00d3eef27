"""Virtual wall and monotonic clocks.

Two simulation modes: fixed-tick, where a choice decides whether one quantum
elapses before each read, and indeterminate-shift, where a choice picks how
many quanta to advance. Monotonic time never decreases; wall time is
monotonic plus an adjustable offset.
"""

from __future__ import annotations

from . import sysdefs
from .kernel import Component
from .sysdefs import CLOCK_MONOTONIC, CLOCK_REALTIME, EINVAL, ENOSYS, SysResult


class ClockComponent(Component):
    name = "clock"
    handles = sysdefs.CLOCK_SYSCALLS

    def __init__(self, config):
        self.mode = config.clock_mode
        self.quantum_ns = config.quantum_ns
        self.max_steps = config.max_steps
        self.monotonic_ns = 0
        self.wall_offset_ns = config.epoch_ns

    def call(self, kernel, req) -> SysResult:
        name = req.name
        if name == "clock_gettime":
            return self._gettime(kernel, req.args[0])
        if name == "clock_settime":
            return self._settime(req.args[0], req.args[1])
        # interval timers are present only as stubs
        return SysResult(-1, ENOSYS)

    def _gettime(self, kernel, which: int) -> SysResult:
        if which not in (CLOCK_MONOTONIC, CLOCK_REALTIME):
            return SysResult(-1, EINVAL)
        if self.mode == "fixed-tick":
            if kernel.choose(2, origin="clock"):
                self.monotonic_ns += self.quantum_ns
        else:  # indeterminate-shift
            steps = kernel.choose(self.max_steps + 1, origin="clock")
            self.monotonic_ns += steps * self.quantum_ns
        if which == CLOCK_MONOTONIC:
            return SysResult(self.monotonic_ns)
        return SysResult(self.monotonic_ns + self.wall_offset_ns)

    def _settime(self, which: int, value_ns: int) -> SysResult:
        if which != CLOCK_REALTIME:
            return SysResult(-1, EINVAL)
        self.wall_offset_ns = value_ns - self.monotonic_ns
        return SysResult(0)
