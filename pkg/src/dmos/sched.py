"""Task scheduling: the four scheduler flavours plus interrupt points.

Schedulers implement the task syscall group and own the pick-next policy.
Switching mechanics live in the platform task manager; every decision made
here flows through the kernel's choice operator so schedules are replayable
and explorable.
"""

from __future__ import annotations

from . import platform as plat
from . import sysdefs
from .kernel import Component, KernelInstance
from .sysdefs import EAGAIN, ESRCH, SysResult

_BASE_CALLS = frozenset(
    {"task_spawn", "task_yield", "task_block", "task_wake", "task_exit", "trace"}
)


class SchedulerComponent(Component):
    """Common task syscall handling; subclasses supply the decision rule."""

    kind = "abstract"
    handles = _BASE_CALLS

    def __init__(self, config):
        self.config = config
        self._order: list[int] = []  # registration order, used by sync

    # -- component interface ----------------------------------------------

    def call(self, kernel: KernelInstance, req) -> SysResult:
        name = req.name
        if name == "task_yield":
            self.interrupt_point(kernel)
            return SysResult(0)
        if name == "task_spawn":
            return self._spawn(kernel, req.args[0])
        if name == "task_block":
            self.block(kernel, req.args[0])
            return SysResult(0)
        if name == "task_wake":
            tid = req.args[0]
            if tid not in kernel.tasks.tasks:
                return SysResult(-1, ESRCH)
            kernel.wake_task(tid)
            return SysResult(0)
        if name == "task_exit":
            kernel.exit_execution(req.args[0])
        if name == "trace":
            return SysResult(0)
        raise AssertionError(f"unhandled task syscall {name}")

    def _spawn(self, kernel: KernelInstance, token: int) -> SysResult:
        if kernel.entry_resolver is None:
            raise RuntimeError("no entry resolver installed")
        entry = kernel.entry_resolver(token)
        if len(kernel.tasks.tasks) >= kernel.tasks.limit:
            return SysResult(-1, EAGAIN)
        task = kernel.tasks.create(entry)
        self.register(task)
        return SysResult(task.id)

    def register(self, task: plat.Task) -> None:
        self._order.append(task.id)

    # -- policy ------------------------------------------------------------

    def _pick(self, kernel: KernelInstance, candidates: list[plat.Task]) -> plat.Task:
        raise NotImplementedError

    def interrupt_point(self, kernel: KernelInstance) -> None:
        current = kernel.tasks.current
        candidates = kernel.tasks.runnable()
        target = self._pick(kernel, candidates)
        if target is not current:
            kernel.log_switch(current.id, target.id)
            kernel.tasks.switch_to(target)

    def block(self, kernel: KernelInstance, reason: str) -> None:
        current = kernel.tasks.current
        current.state = plat.BLOCKED
        current.wake_reason = reason
        candidates = kernel.tasks.runnable()
        if not candidates:
            self._no_runnable(kernel, current)
            return
        target = self._pick(kernel, candidates)
        kernel.log_switch(current.id, target.id)
        kernel.tasks.switch_to(target)

    def finished(self, kernel: KernelInstance, task: plat.Task) -> None:
        candidates = kernel.tasks.runnable()
        if not candidates:
            self._no_runnable(kernel, task, finishing=True)
            return
        target = self._pick(kernel, candidates)
        kernel.log_switch(task.id, target.id)
        kernel.tasks.hand_to(target)

    def detect_deadlock(self, kernel: KernelInstance) -> bool:
        return not kernel.tasks.runnable() and bool(kernel.tasks.blocked())

    def _no_runnable(self, kernel: KernelInstance, last: plat.Task, finishing=False) -> None:
        blocked = kernel.tasks.blocked()
        if blocked:
            detail = ", ".join(f"task {t.id} ({t.wake_reason or 'blocked'})" for t in blocked)
            kernel.raise_fault(sysdefs.F_DEADLOCK, detail)
            # fault was ignored: the execution cannot make progress, so the
            # kernel has ended it; raise_fault never returns for deadlock
            raise AssertionError("unreachable")
        if finishing:
            kernel.finish_normally(last)
        else:
            raise RuntimeError("blocking task left no runnable or blocked tasks")


class NullScheduler(SchedulerComponent):
    """Single task, no switching; task_spawn is deliberately unimplemented
    so it falls through to the stub."""

    kind = "null"
    handles = _BASE_CALLS - {"task_spawn"}

    def interrupt_point(self, kernel):
        return  # nothing to switch to, no choice consumed

    def _pick(self, kernel, candidates):
        return candidates[0]


class SyncScheduler(SchedulerComponent):
    """Fixed round order (registration order), no choices consumed."""

    kind = "sync"

    def _pick(self, kernel, candidates):
        current = kernel.tasks.current
        runnable = {t.id: t for t in candidates}
        order = self._order
        idx = order.index(current.id) if current.id in order else 0
        n = len(order)
        for step in range(1, n + 1):
            tid = order[(idx + step) % n]
            if tid in runnable:
                return runnable[tid]
        raise AssertionError("no runnable candidate in ring")


class AsyncScheduler(SchedulerComponent):
    """Safety-oriented scheduler: every decision is a plain choice over the
    runnable set, ordered by task id."""

    kind = "async"

    def _pick(self, kernel, candidates):
        k = kernel.choose(len(candidates), origin="sched")
        return candidates[k]


class FairScheduler(SchedulerComponent):
    """Asynchronous scheduler with a bounded-deficit fairness provision:
    a task skipped `deficit_bound` consecutive decisions is forced next."""

    kind = "fair"

    def __init__(self, config):
        super().__init__(config)
        self.bound = config.deficit_bound
        self._deficit: dict[int, int] = {}

    def _pick(self, kernel, candidates):
        forced = [t for t in candidates if self._deficit.get(t.id, 0) >= self.bound]
        pool = forced if forced else candidates
        k = kernel.choose(len(pool), origin="sched")
        chosen = pool[k]
        for t in candidates:
            self._deficit[t.id] = 0 if t is chosen else self._deficit.get(t.id, 0) + 1
        return chosen


_KINDS = {
    "null": NullScheduler,
    "sync": SyncScheduler,
    "async": AsyncScheduler,
    "fair": FairScheduler,
}


def make_scheduler(config) -> SchedulerComponent:
    return _KINDS[config.scheduler](config)
