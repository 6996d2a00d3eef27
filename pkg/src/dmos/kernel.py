"""Kernel core: component stack assembly, syscall dispatch, fault routing.

A KernelInstance is one execution's worth of state. Booting builds the
component stack from the configuration; dispatch hands each syscall to the
first component (top down) that implements it, with the stub answering
anything left over.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import platform as plat
from . import sysdefs
from .config import IGNORE, REPORT, RunConfig
from .platform import ChoiceLog, ConfigError, _Teardown
from .sysdefs import (
    EV_CHOICE,
    EV_EXIT,
    EV_FAULT,
    EV_SYSCALL_ENTER,
    EV_SYSCALL_EXIT,
    EV_TASK_SWITCH,
    SysResult,
    SyscallRequest,
    digest64,
    encode_values,
)

ST_OK = "ok"
ST_FAULT = "fault"
ST_DEPTH_BOUND = "depth-bound"
ST_STALLED = "stalled"


@dataclass(frozen=True)
class EventRecord:
    seq: int
    task: int
    kind: str
    name: str
    digest: str
    payload: tuple = ()

    def line(self) -> str:
        return f"{self.seq} {self.task} {self.kind} {self.name} {self.digest}"


class EventLog:
    """Append-only record of observable events; byte equality of the
    rendered form is the definition of identical executions."""

    def __init__(self):
        self.records: list[EventRecord] = []

    def append(self, task: int, kind: str, name: str, digest: str, payload=()) -> EventRecord:
        rec = EventRecord(len(self.records) + 1, task, kind, name, digest, payload)
        self.records.append(rec)
        return rec

    def render(self) -> str:
        return "".join(rec.line() + "\n" for rec in self.records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class FaultInfo:
    kind: str
    detail: str


@dataclass
class ExecutionResult:
    status: str
    exit_code: int | None
    fault: FaultInfo | None
    choices: tuple[tuple[int, int], ...]
    event_log: EventLog
    leaks: tuple[tuple[int, int], ...] = ()

    @property
    def events_text(self) -> str:
        return self.event_log.render()

    def choice_log(self) -> ChoiceLog:
        return ChoiceLog(self.choices)


class Component:
    """One entry of the kernel component stack."""

    name = "component"
    handles: frozenset[str] = frozenset()

    def call(self, kernel: "KernelInstance", req: SyscallRequest) -> SysResult:
        raise NotImplementedError


class StubComponent(Component):
    """Fallback for every known syscall: flags the call as unsupported."""

    name = "stub"
    handles = frozenset(sysdefs.SYSCALLS)

    def call(self, kernel, req):
        kernel.raise_fault(sysdefs.F_UNSUPPORTED, req.name)
        # only reached when the fault policy says ignore
        return SysResult(-1, sysdefs.ENOSYS)


class _ExitExecution(Exception):
    def __init__(self, code: int):
        super().__init__(code)
        self.code = code


class KernelInstance:
    """State and services of a single execution."""

    def __init__(self, config: RunConfig, source: plat.ChoiceSource | None = None):
        config.validate()
        self.config = config
        self.choice_log = ChoiceLog()
        self.event_log = EventLog()
        self.tasks = plat.TaskManager(limit=config.max_tasks)
        self.tasks._finish_hook = self._on_task_finished
        self.host_hook = plat.HostHook(enabled=config.allow_host)
        self.input_store = plat.InputStore(
            config.inputs, policy=config.input_policy, alphabet=config.input_alphabet
        )
        self.source = source if source is not None else self._default_source(config)
        self.entry_resolver = None  # set by the guest runner
        self._status: str | None = None
        self._exit_code: int | None = None
        self._fault: FaultInfo | None = None
        self._finished = False

        from . import clock as clockmod
        from . import hostproxy, sched, vfs

        self.scheduler = sched.make_scheduler(config)
        components: list[Component] = [self.scheduler]
        if config.fs == "vfs":
            self.fs = vfs.VfsComponent(config)
            components.append(self.fs)
        elif config.fs == "proxy":
            self.fs = hostproxy.ProxyComponent(config, self.host_hook)
            components.append(self.fs)
        elif config.fs == "replay":
            self.fs = hostproxy.ReplayComponent(config)
            components.append(self.fs)
        else:
            self.fs = None
        self.clock = clockmod.ClockComponent(config)
        components.append(self.clock)
        components.append(StubComponent())
        self.components = components
        self._resolution = {}
        for comp in components:
            for name in comp.handles:
                self._resolution.setdefault(name, comp)
        for name in sysdefs.SYSCALLS:
            assert name in self._resolution, f"unresolvable syscall {name}"

    @staticmethod
    def _default_source(config: RunConfig) -> plat.ChoiceSource:
        if config.choices_path:
            return plat.ScriptedSource(ChoiceLog.load(config.choices_path))
        if config.seed is not None:
            return plat.RandomSource(config.seed)
        return plat.ExtendingSource(())

    # -- introspection ---------------------------------------------------

    def resolve(self, name: str) -> str:
        """Name of the component that would handle a syscall."""
        comp = self._resolution.get(name)
        if comp is None:
            raise sysdefs.MalformedSyscallError(f"unknown syscall {name!r}")
        return comp.name

    @property
    def status(self):
        return self._status

    @property
    def exit_code(self):
        return self._exit_code

    @property
    def fault(self):
        return self._fault

    # -- choice operator -------------------------------------------------

    def choose(self, arity: int, origin: str = "") -> int:
        if arity < 1:
            raise ValueError(f"choose arity must be >= 1, got {arity}")
        if len(self.choice_log) >= self.config.max_depth:
            self._finish(ST_DEPTH_BOUND, None)
            raise _Teardown
        try:
            chosen = self.source.next(arity)
        except plat.SourceDivergence as exc:
            self.raise_fault(sysdefs.F_REPLAY_DIVERGENCE, str(exc))
            raise AssertionError("unreachable")  # divergence always reports
        if not 0 <= chosen < arity:
            raise RuntimeError(f"choice source returned {chosen} for arity {arity}")
        self.choice_log.append(arity, chosen)
        task = self.tasks.current
        payload = (arity, chosen, origin)
        self.event_log.append(
            task.id if task else 0,
            EV_CHOICE,
            "choose",
            digest64(encode_values((arity, chosen, origin))),
            payload,
        )
        return chosen

    def indeterminate_bytes(self, label: str, offset: int, length: int) -> bytes:
        return self.input_store.read(
            label, offset, length, chooser=lambda n: self.choose(n, origin="input")
        )

    # -- syscall dispatch --------------------------------------------------

    def dispatch(self, req: SyscallRequest) -> SysResult:
        sysdefs.validate_request(req)
        task = self.tasks.assert_current_thread()
        if req.task != task.id:
            raise RuntimeError(f"request task {req.task} is not the executing task {task.id}")
        comp = self._resolution[req.name]
        self.event_log.append(
            task.id,
            EV_SYSCALL_ENTER,
            req.name,
            digest64(encode_values(req.args)),
            req.args,
        )
        try:
            res = comp.call(self, req)
        except _ExitExecution as exc:
            res = SysResult(0)
            self._log_exit_record(req, res)
            self.event_log.append(
                task.id, EV_EXIT, "exit", digest64(encode_values((exc.code,))), (exc.code,)
            )
            self._finish(ST_OK, exc.code)
            raise _Teardown
        self._log_exit_record(req, res)
        return res

    def _log_exit_record(self, req: SyscallRequest, res: SysResult) -> None:
        payload = (res.value, res.errno) + res.payloads
        self.event_log.append(
            req.task,
            EV_SYSCALL_EXIT,
            req.name,
            digest64(encode_values(payload)),
            payload,
        )

    # -- faults ------------------------------------------------------------

    def raise_fault(self, kind: str, detail: str) -> None:
        if kind not in sysdefs.FAULT_KINDS:
            raise ValueError(f"unknown fault kind {kind!r}")
        task = self.tasks.current
        self.event_log.append(
            task.id if task else 0,
            EV_FAULT,
            kind,
            digest64(detail.encode("utf-8")),
            (kind, detail),
        )
        action = self.config.fault_policy.get(kind, REPORT)
        if action == IGNORE and kind != sysdefs.F_REPLAY_DIVERGENCE:
            if kind == sysdefs.F_DEADLOCK:
                # nothing can run anymore; end the execution quietly
                self._finish(ST_STALLED, None)
                raise _Teardown
            return
        self._fault = FaultInfo(kind, detail)
        self._finish(ST_FAULT, None)
        raise _Teardown

    # -- task services (mechanics; policy lives in the scheduler) ----------

    def log_switch(self, src: int, dst: int) -> None:
        self.event_log.append(
            src, EV_TASK_SWITCH, str(dst), digest64(encode_values((src, dst))), (src, dst)
        )

    def block_current(self, reason: str) -> None:
        """Park the executing task until woken; used by blocking syscalls."""
        self.scheduler.block(self, reason)

    def wake_task(self, tid: int) -> None:
        task = self.tasks.tasks.get(tid)
        if task is not None and task.state == plat.BLOCKED:
            task.state = plat.RUNNABLE
            task.wake_reason = ""

    def _on_task_finished(self, task: plat.Task) -> None:
        if self.tasks.completion.is_set():
            return
        self.scheduler.finished(self, task)

    def exit_execution(self, code: int) -> None:
        raise _ExitExecution(code)

    def finish_normally(self, last_task: plat.Task) -> None:
        """All tasks ran to completion; log the implicit clean exit."""
        self.event_log.append(
            last_task.id, EV_EXIT, "exit", digest64(encode_values((0,))), (0,)
        )
        self._finish(ST_OK, 0)

    def _finish(self, status: str, exit_code: int | None) -> None:
        if self._finished:
            return
        self._finished = True
        self._status = status
        self._exit_code = exit_code
        self.tasks.completion.set()

    # -- execution driver ----------------------------------------------------

    def run(self, entry) -> None:
        """Run one guest entry procedure as the main task, to completion."""
        if self._finished:
            raise RuntimeError("kernel instance already ran")
        main = self.tasks.create(entry, name="main")
        self.scheduler.register(main)
        if self.fs is not None and hasattr(self.fs, "before_run"):
            self.fs.before_run(self)
        self.tasks.start(main)
        self.tasks.teardown()
        if self.fs is not None and hasattr(self.fs, "after_run"):
            self.fs.after_run(self)


def boot(config: RunConfig | None = None, source: plat.ChoiceSource | None = None) -> KernelInstance:
    """Build a fresh kernel instance for one execution."""
    return KernelInstance(config or RunConfig(), source)
