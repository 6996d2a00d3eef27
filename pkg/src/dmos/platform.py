"""Substrate primitives everything else builds on.

Provides the choice operator backends, the store of indeterminate input
bytes, cooperative task primitives, and the optional host syscall hook.
An execution instance owns exactly one of each; nothing here is shared
between executions.
"""

from __future__ import annotations

import os
import random
import threading
from dataclasses import dataclass, field

from . import sysdefs
from .sysdefs import EBADF, EIO, EPERM


class SourceDivergence(Exception):
    """A scripted choice source ran out or disagreed with the live arity."""


class InputMissingError(KeyError):
    """Strict input lookup of an absent label."""


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


class ChoiceLog:
    """Ordered record of (arity, chosen) decisions; the identity of a run."""

    __slots__ = ("entries",)

    def __init__(self, entries=None):
        self.entries: list[tuple[int, int]] = []
        if entries:
            for arity, chosen in entries:
                self.append(int(arity), int(chosen))

    def append(self, arity: int, chosen: int) -> None:
        if arity < 1:
            raise ValueError(f"arity must be >= 1, got {arity}")
        if not 0 <= chosen < arity:
            raise ValueError(f"chosen {chosen} out of range for arity {arity}")
        self.entries.append((arity, chosen))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, idx):
        return self.entries[idx]

    def __eq__(self, other):
        if isinstance(other, ChoiceLog):
            return self.entries == other.entries
        return NotImplemented

    def __repr__(self):
        return f"ChoiceLog({self.entries!r})"

    def to_text(self) -> str:
        lines = [f"{arity} {chosen}" for arity, chosen in self.entries]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "ChoiceLog":
        log = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'arity chosen', got {raw!r}")
            log.append(int(parts[0]), int(parts[1]))
        return log

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# choice log: one 'arity chosen' pair per line\n")
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "ChoiceLog":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


class ChoiceSource:
    """Decides the outcome of each choose() call."""

    kind = "abstract"

    def next(self, arity: int) -> int:
        raise NotImplementedError


class ScriptedSource(ChoiceSource):
    """Consumes a fixed log left to right; any mismatch is a divergence."""

    kind = "scripted"

    def __init__(self, log: ChoiceLog):
        self._entries = list(log)
        self._cursor = 0

    def next(self, arity: int) -> int:
        if self._cursor >= len(self._entries):
            raise SourceDivergence(
                f"choice log exhausted after {self._cursor} entries (choose({arity}))"
            )
        want_arity, chosen = self._entries[self._cursor]
        if want_arity != arity:
            raise SourceDivergence(
                f"arity mismatch at entry {self._cursor}: "
                f"log has {want_arity}, execution asked for {arity}"
            )
        self._cursor += 1
        return chosen


class RandomSource(ChoiceSource):
    """Seeded pseudo-random outcomes; smoke testing only."""

    kind = "random"

    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def next(self, arity: int) -> int:
        if arity == 1:
            return 0
        return self._rng.randrange(arity)


class ExtendingSource(ChoiceSource):
    """Replays a prefix, then extends with the first untried branch.

    This is the explorer's working source: with an empty prefix it yields
    the depth-first-first execution of the choice tree.
    """

    kind = "explorer"

    def __init__(self, prefix=(), reverse: bool = False):
        self._prefix = tuple(prefix)
        self._cursor = 0
        self.reverse = reverse

    def next(self, arity: int) -> int:
        if self._cursor < len(self._prefix):
            want_arity, chosen = self._prefix[self._cursor]
            if want_arity != arity:
                raise SourceDivergence(
                    f"exploration prefix mismatch at entry {self._cursor}: "
                    f"prefix has arity {want_arity}, execution asked for {arity}"
                )
            self._cursor += 1
            return chosen
        self._cursor += 1
        return arity - 1 if self.reverse else 0


STRICT = "strict"
ZERO_FILL = "zero"
ENUMERATE = "enumerate"

INPUT_POLICIES = (STRICT, ZERO_FILL, ENUMERATE)


class InputStore:
    """Named blobs standing in for values not determined a priori.

    Lookups are stable within one execution: enumerated bytes are generated
    once per (label, offset) and cached for the rest of the run.
    """

    def __init__(self, blobs=None, policy: str = STRICT, alphabet=(0, 1)):
        if policy not in INPUT_POLICIES:
            raise ConfigError(f"unknown input policy {policy!r}")
        self._blobs = {k: bytes(v) for k, v in (blobs or {}).items()}
        self._policy = policy
        self._alphabet = tuple(int(b) & 0xFF for b in alphabet)
        if policy == ENUMERATE and len(self._alphabet) < 1:
            raise ConfigError("enumerate policy needs a non-empty alphabet")
        self._generated: dict[str, bytearray] = {}

    def read(self, label: str, offset: int, length: int, chooser=None) -> bytes:
        if offset < 0 or length < 0:
            raise ValueError("offset and length must be non-negative")
        blob = self._blobs.get(label)
        if blob is not None and offset + length <= len(blob):
            return blob[offset : offset + length]
        if self._policy == STRICT:
            raise InputMissingError(
                f"no input bytes for label {label!r} at offset {offset} length {length}"
            )
        if self._policy == ZERO_FILL:
            known = blob[offset : offset + length] if blob else b""
            return known + b"\x00" * (length - len(known))
        # enumerate: each missing byte is a nondeterministic pick
        if chooser is None:
            raise RuntimeError("enumerate policy requires a chooser")
        cache = self._generated.setdefault(label, bytearray(blob or b""))
        end = offset + length
        while len(cache) < end:
            pick = chooser(len(self._alphabet))
            cache.append(self._alphabet[pick])
        return bytes(cache[offset:end])


RUNNABLE = "runnable"
BLOCKED = "blocked"
FINISHED = "finished"


class _Teardown(BaseException):
    """Internal unwind signal; never visible to guest code."""


class Task:
    """One cooperative task backed by a parked thread."""

    __slots__ = ("id", "name", "entry", "state", "wake_reason", "thread", "_resume")

    def __init__(self, tid: int, name: str, entry):
        self.id = tid
        self.name = name
        self.entry = entry
        self.state = RUNNABLE
        self.wake_reason = ""
        self.thread: threading.Thread | None = None
        self._resume = threading.Event()

    def __repr__(self):
        return f"<Task {self.id} {self.name} {self.state}>"


class TaskManager:
    """Cooperative switching between tasks, one at a time.

    Each task runs on its own thread but exactly one thread is ever released
    at once: a switch hands the single resume token to the target and parks
    the caller. The manager only supplies mechanics; picking the next task
    is scheduler policy.
    """

    def __init__(self, limit: int = 64):
        self.limit = limit
        self.tasks: dict[int, Task] = {}
        self.current: Task | None = None
        self.completion = threading.Event()
        self.aborting = False
        self.internal_error: BaseException | None = None
        self._next_id = 1
        self._finish_hook = None  # set by the kernel before run

    def create(self, entry, name: str = "") -> Task:
        if len(self.tasks) >= self.limit:
            raise RuntimeError(f"task limit {self.limit} exceeded")
        tid = self._next_id
        self._next_id += 1
        task = Task(tid, name or f"task{tid}", entry)
        self.tasks[tid] = task
        thread = threading.Thread(
            target=self._task_main, args=(task,), name=f"dmos-{tid}", daemon=True
        )
        task.thread = thread
        thread.start()
        return task

    def _task_main(self, task: Task) -> None:
        task._resume.wait()
        task._resume.clear()
        if self.aborting:
            task.state = FINISHED
            return
        finished_clean = False
        try:
            task.entry()
            finished_clean = True
        except _Teardown:
            pass
        except BaseException as exc:  # surface guest/internal bugs on the host
            self.internal_error = exc
            self.completion.set()
        finally:
            task.state = FINISHED
        if finished_clean and self._finish_hook is not None:
            try:
                self._finish_hook(task)
            except _Teardown:
                pass
            except BaseException as exc:
                self.internal_error = exc
                self.completion.set()

    def runnable(self) -> list[Task]:
        return sorted(
            (t for t in self.tasks.values() if t.state == RUNNABLE),
            key=lambda t: t.id,
        )

    def blocked(self) -> list[Task]:
        return sorted(
            (t for t in self.tasks.values() if t.state == BLOCKED),
            key=lambda t: t.id,
        )

    def assert_current_thread(self) -> Task:
        task = self.current
        if task is None or task.thread is not threading.current_thread():
            raise RuntimeError("operation outside the executing task")
        return task

    def hand_to(self, target: Task) -> None:
        """Release the target without parking the caller (finish path)."""
        if target.state != RUNNABLE:
            raise RuntimeError(f"switch to non-runnable task {target!r}")
        self.current = target
        target._resume.set()

    def switch_to(self, target: Task) -> None:
        """Transfer control to target and park the caller until resumed."""
        caller = self.current
        if target is caller:
            return
        if target.state != RUNNABLE:
            raise RuntimeError(f"switch to non-runnable task {target!r}")
        self.current = target
        target._resume.set()
        if caller is not None:
            self._park(caller)

    def _park(self, task: Task) -> None:
        task._resume.wait()
        task._resume.clear()
        if self.aborting:
            raise _Teardown

    def start(self, main: Task) -> None:
        """Host side: release the main task and wait for the execution to end."""
        self.hand_to(main)
        self.completion.wait()

    def teardown(self) -> None:
        self.aborting = True
        for task in self.tasks.values():
            task._resume.set()
        for task in self.tasks.values():
            if task.thread is not None:
                task.thread.join(timeout=10.0)
                if task.thread.is_alive():
                    raise RuntimeError(f"task thread {task!r} failed to tear down")
        if self.internal_error is not None:
            raise self.internal_error


class HostHookDisabled(ConfigError):
    """Host syscall requested while the hook is switched off."""


@dataclass(frozen=True)
class HostResult:
    value: int
    errno: int = 0
    payloads: tuple[bytes, ...] = ()


def _host_openat(dirfd, path, flags, mode):
    kw = {"dir_fd": dirfd} if dirfd >= 0 else {}
    return HostResult(os.open(path, flags, mode, **kw))


def _host_close(fd):
    os.close(fd)
    return HostResult(0)


def _host_read(fd, count):
    data = os.read(fd, count)
    return HostResult(len(data), 0, (data,))


def _host_write(fd, data):
    return HostResult(os.write(fd, bytes(data)))


def _host_lseek(fd, offset, whence):
    return HostResult(os.lseek(fd, offset, whence))


def _host_mkdirat(dirfd, path, mode):
    kw = {"dir_fd": dirfd} if dirfd >= 0 else {}
    os.mkdir(path, mode, **kw)
    return HostResult(0)


def _host_linkat(olddirfd, oldpath, newdirfd, newpath):
    kw = {}
    if olddirfd >= 0:
        kw["src_dir_fd"] = olddirfd
    if newdirfd >= 0:
        kw["dst_dir_fd"] = newdirfd
    os.link(oldpath, newpath, **kw, follow_symlinks=False)
    return HostResult(0)


def _host_unlinkat(dirfd, path, flags):
    kw = {"dir_fd": dirfd} if dirfd >= 0 else {}
    if flags & sysdefs.AT_REMOVEDIR:
        os.rmdir(path, **kw)
    else:
        os.unlink(path, **kw)
    return HostResult(0)


def _host_symlinkat(target, newdirfd, linkpath):
    kw = {"dir_fd": newdirfd} if newdirfd >= 0 else {}
    os.symlink(target, linkpath, **kw)
    return HostResult(0)


def _host_readlinkat(dirfd, path, bufsize):
    kw = {"dir_fd": dirfd} if dirfd >= 0 else {}
    target = os.readlink(path, **kw)
    raw = os.fsencode(target)[:bufsize]
    return HostResult(len(raw), 0, (raw,))


def _host_fstat(fd):
    st = os.fstat(fd)
    import stat as statmod
    import struct as structmod

    if statmod.S_ISDIR(st.st_mode):
        kind = sysdefs.K_DIR
    elif statmod.S_ISLNK(st.st_mode):
        kind = sysdefs.K_LNK
    elif statmod.S_ISFIFO(st.st_mode):
        kind = sysdefs.K_PIPE
    elif statmod.S_ISSOCK(st.st_mode):
        kind = sysdefs.K_SOCK
    else:
        kind = sysdefs.K_REG
    payload = structmod.pack(
        "<qqqqq", st.st_ino, kind, st.st_nlink, st.st_size, st.st_mode & 0o7777
    )
    return HostResult(0, 0, (payload,))


def _host_clock_gettime(which):
    import time

    clk = time.CLOCK_MONOTONIC if which == sysdefs.CLOCK_MONOTONIC else time.CLOCK_REALTIME
    return HostResult(time.clock_gettime_ns(clk))


def _host_clock_settime(which, ns):
    # Setting host clocks is never something a test run should do.
    return HostResult(-1, EPERM)


def _host_getpid():
    return HostResult(os.getpid())


_HOST_CALLS = {
    "openat": _host_openat,
    "close": _host_close,
    "read": _host_read,
    "write": _host_write,
    "lseek": _host_lseek,
    "mkdirat": _host_mkdirat,
    "linkat": _host_linkat,
    "unlinkat": _host_unlinkat,
    "symlinkat": _host_symlinkat,
    "readlinkat": _host_readlinkat,
    "fstat": _host_fstat,
    "clock_gettime": _host_clock_gettime,
    "clock_settime": _host_clock_settime,
    "getpid": _host_getpid,
}


class HostHook:
    """Gate to the host OS; disabled unless the configuration opts in.

    Host failures come back as results, not exceptions: an OSError is
    converted to value -1 plus the host's errno.
    """

    def __init__(self, enabled: bool = False):
        self.enabled = enabled
        self.calls = 0

    def call(self, name: str, args: tuple) -> HostResult:
        if not self.enabled:
            raise HostHookDisabled("host syscall hook is disabled")
        fn = _HOST_CALLS.get(name)
        if fn is None:
            raise ValueError(f"host hook does not implement {name!r}")
        self.calls += 1
        try:
            return fn(*args)
        except OSError as exc:
            return HostResult(-1, exc.errno if exc.errno else EIO)
