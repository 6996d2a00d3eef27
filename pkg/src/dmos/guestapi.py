"""The POSIX-like surface guest programs are written against.

Guest procedures receive one GuestAPI object and call it for everything:
threads, synchronization, files, clocks, allocation and assertions. The API
is the sole mediator between guest code and the kernel; synchronization
primitives are built on the block/wake syscalls so every contention point
is a replayable scheduling decision.
"""

from __future__ import annotations

import struct

from . import sysdefs
from .config import RunConfig
from .kernel import ExecutionResult, KernelInstance, boot
from .sysdefs import (
    AT_FDCWD,
    ENOMEM,
    ESRCH,
    SysResult,
    SyscallRequest,
)


class GuestWorld:
    """Execution-local bookkeeping shared by all tasks of one run."""

    def __init__(self, kernel: KernelInstance):
        self.kernel = kernel
        kernel.entry_resolver = self._entry
        self._entries: dict[int, object] = {}
        self._next_token = 1
        self.errno: dict[int, int] = {}
        self.exit_values: dict[int, object] = {}
        self.joiners: dict[int, list[int]] = {}
        self.allocations: dict[int, int] = {}
        self._next_alloc = 1
        self._next_obj = 1

    def register_entry(self, fn) -> int:
        token = self._next_token
        self._next_token += 1
        self._entries[token] = fn
        return token

    def _entry(self, token: int):
        return self._entries[token]

    def next_obj_id(self) -> int:
        obj = self._next_obj
        self._next_obj += 1
        return obj

    def residual_allocations(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.allocations.items()))


class Mutex:
    """Non-recursive mutex with direct ownership handoff on unlock."""

    __slots__ = ("_api", "id", "owner", "queue")

    def __init__(self, api: "GuestAPI"):
        self._api = api
        self.id = api._world.next_obj_id()
        self.owner: int | None = None
        self.queue: list[int] = []

    def lock(self):
        self._api._mutex_lock(self)

    def unlock(self):
        self._api._mutex_unlock(self)


class CondVar:
    __slots__ = ("_api", "id", "queue")

    def __init__(self, api: "GuestAPI"):
        self._api = api
        self.id = api._world.next_obj_id()
        self.queue: list[int] = []

    def wait(self, mutex: Mutex):
        self._api._cond_wait(self, mutex)

    def signal(self):
        self._api._cond_signal(self)

    def broadcast(self):
        self._api._cond_broadcast(self)


class GuestAPI:
    def __init__(self, world: GuestWorld):
        self._world = world

    # -- plumbing ------------------------------------------------------------

    @property
    def kernel(self) -> KernelInstance:
        return self._world.kernel

    def _tid(self) -> int:
        return self._world.kernel.tasks.current.id

    def _call(self, name: str, args: tuple) -> SysResult:
        kernel = self._world.kernel
        tid = kernel.tasks.current.id
        res = kernel.dispatch(SyscallRequest(name, tuple(args), tid))
        if res.errno:
            self._world.errno[tid] = res.errno
        return res

    @property
    def errno(self) -> int:
        return self._world.errno.get(self._tid(), 0)

    @property
    def errno_name(self) -> str:
        return sysdefs.ERRNO_NAMES.get(self.errno, str(self.errno))

    @property
    def task_id(self) -> int:
        return self._tid()

    # -- scheduling ------------------------------------------------------------

    def interrupt_point(self) -> None:
        self._call("task_yield", ())

    def trace(self, tag) -> None:
        data = tag.encode("utf-8") if isinstance(tag, str) else bytes(tag)
        self._call("trace", (data,))

    def exit(self, code: int) -> None:
        self._call("task_exit", (code,))

    def assert_true(self, condition, message: str) -> None:
        if not condition:
            self._world.kernel.raise_fault(sysdefs.F_ASSERTION, message)

    # -- threads ------------------------------------------------------------

    def thread_create(self, fn) -> int:
        world = self._world
        api = self

        def body():
            tid = world.kernel.tasks.current.id
            value = fn()
            world.exit_values[tid] = value
            for waiter in world.joiners.pop(tid, []):
                api._call("task_wake", (waiter,))

        token = world.register_entry(body)
        res = self._call("task_spawn", (token,))
        return res.value

    def thread_join(self, tid: int):
        world = self._world
        me = self._tid()
        if tid == me:
            world.kernel.raise_fault(sysdefs.F_DEADLOCK, f"task {me} joining itself")
            return None
        task = world.kernel.tasks.tasks.get(tid)
        if task is None:
            world.errno[me] = ESRCH
            return None
        from . import platform as plat

        while task.state != plat.FINISHED:
            world.joiners.setdefault(tid, []).append(me)
            self._call("task_block", (f"join:{tid}",))
        return world.exit_values.get(tid)

    # -- synchronization ---------------------------------------------------

    def mutex(self) -> Mutex:
        return Mutex(self)

    def condvar(self) -> CondVar:
        return CondVar(self)

    def _mutex_lock(self, m: Mutex) -> None:
        me = self._tid()
        if m.owner == me:
            self._world.kernel.raise_fault(
                sysdefs.F_DEADLOCK, f"recursive lock of mutex {m.id} by task {me}"
            )
            return
        if m.owner is None:
            m.owner = me
            return
        m.queue.append(me)
        self._call("task_block", (f"mutex:{m.id}",))
        if m.owner != me:
            raise RuntimeError("mutex handoff broke ownership")

    def _mutex_unlock(self, m: Mutex) -> None:
        me = self._tid()
        if m.owner != me:
            self._world.kernel.raise_fault(
                sysdefs.F_ASSERTION, f"unlock of mutex {m.id} by non-owner task {me}"
            )
            return
        if m.queue:
            k = self._world.kernel.choose(len(m.queue), origin="mutex")
            nxt = m.queue.pop(k)
            m.owner = nxt
            self._call("task_wake", (nxt,))
        else:
            m.owner = None

    def _cond_wait(self, cv: CondVar, m: Mutex) -> None:
        me = self._tid()
        if m.owner != me:
            self._world.kernel.raise_fault(
                sysdefs.F_ASSERTION,
                f"condvar {cv.id} wait without holding mutex {m.id}",
            )
            return
        cv.queue.append(me)
        self._mutex_unlock(m)
        self._call("task_block", (f"cond:{cv.id}",))
        self._mutex_lock(m)

    def _cond_signal(self, cv: CondVar) -> None:
        if cv.queue:
            k = self._world.kernel.choose(len(cv.queue), origin="cond")
            target = cv.queue.pop(k)
            self._call("task_wake", (target,))

    def _cond_broadcast(self, cv: CondVar) -> None:
        waiters = list(cv.queue)
        cv.queue.clear()
        for target in waiters:
            self._call("task_wake", (target,))

    # -- memory ------------------------------------------------------------

    def alloc(self, size: int):
        if size <= 0:
            raise ValueError("allocation size must be positive")
        world = self._world
        if world.kernel.config.inject_alloc_faults:
            if world.kernel.choose(2, origin="alloc"):
                world.errno[self._tid()] = ENOMEM
                return None
        aid = world._next_alloc
        world._next_alloc += 1
        world.allocations[aid] = size
        return aid

    def alloc_unchecked(self, size: int):
        """Allocation whose failure the guest does not handle."""
        aid = self.alloc(size)
        if aid is None:
            self._world.kernel.raise_fault(
                sysdefs.F_ALLOC_UNHANDLED, f"unhandled failure allocating {size} bytes"
            )
        return aid

    def free(self, aid) -> None:
        world = self._world
        if aid not in world.allocations:
            world.kernel.raise_fault(
                sysdefs.F_ASSERTION, f"double free or unknown allocation {aid!r}"
            )
            return
        del world.allocations[aid]

    # -- indeterminate inputs -------------------------------------------------

    def input_bytes(self, label: str, offset: int, length: int) -> bytes:
        return self._world.kernel.indeterminate_bytes(label, offset, length)

    # -- files ------------------------------------------------------------

    def open(self, path: str, flags: int = 0, mode: int = 0o644, dirfd: int = AT_FDCWD) -> int:
        return self._call("openat", (dirfd, path, flags, mode)).value

    def close(self, fd: int) -> int:
        return self._call("close", (fd,)).value

    def read(self, fd: int, count: int):
        res = self._call("read", (fd, count))
        if res.errno:
            return None
        return res.payloads[0] if res.payloads else b""

    def write(self, fd: int, data) -> int:
        payload = data.encode("utf-8") if isinstance(data, str) else bytes(data)
        return self._call("write", (fd, payload)).value

    def lseek(self, fd: int, offset: int, whence: int = sysdefs.SEEK_SET) -> int:
        return self._call("lseek", (fd, offset, whence)).value

    def dup(self, fd: int) -> int:
        return self._call("dup", (fd,)).value

    def pipe(self):
        res = self._call("pipe", ())
        if res.errno:
            return None
        return struct.unpack("<ii", res.payloads[0])

    def mkdir(self, path: str, mode: int = 0o755, dirfd: int = AT_FDCWD) -> int:
        return self._call("mkdirat", (dirfd, path, mode)).value

    def link(self, oldpath: str, newpath: str) -> int:
        return self._call("linkat", (AT_FDCWD, oldpath, AT_FDCWD, newpath)).value

    def unlink(self, path: str, flags: int = 0) -> int:
        return self._call("unlinkat", (AT_FDCWD, path, flags)).value

    def symlink(self, target: str, linkpath: str) -> int:
        return self._call("symlinkat", (target, AT_FDCWD, linkpath)).value

    def readlink(self, path: str, bufsize: int = 4096):
        res = self._call("readlinkat", (AT_FDCWD, path, bufsize))
        if res.errno:
            return None
        return res.payloads[0]

    def stat(self, path: str, flags: int = 0, dirfd: int = AT_FDCWD):
        res = self._call("fstatat", (dirfd, path, flags))
        if res.errno:
            return None
        return _unpack_stat(res.payloads[0])

    def fstat(self, fd: int):
        res = self._call("fstat", (fd,))
        if res.errno:
            return None
        return _unpack_stat(res.payloads[0])

    # -- sockets ---------------------------------------------------------------

    def socket(self) -> int:
        return self._call("socket", (sysdefs.AF_LOCAL, sysdefs.SOCK_STREAM, 0)).value

    def socketpair(self):
        res = self._call("socketpair", (sysdefs.AF_LOCAL, sysdefs.SOCK_STREAM, 0))
        if res.errno:
            return None
        return struct.unpack("<ii", res.payloads[0])

    def bind(self, fd: int, addr: str) -> int:
        return self._call("bind", (fd, addr)).value

    def listen(self, fd: int, backlog: int = 1) -> int:
        return self._call("listen", (fd, backlog)).value

    def connect(self, fd: int, addr: str) -> int:
        return self._call("connect", (fd, addr)).value

    def accept(self, fd: int) -> int:
        return self._call("accept", (fd,)).value

    # -- clocks ------------------------------------------------------------

    def clock_gettime(self, which: int) -> int:
        return self._call("clock_gettime", (which,)).value

    def clock_settime(self, which: int, ns: int) -> int:
        return self._call("clock_settime", (which, ns)).value


class StatResult:
    __slots__ = ("ino", "kind", "nlink", "size", "mode")

    def __init__(self, ino, kind, nlink, size, mode):
        self.ino = ino
        self.kind = kind
        self.nlink = nlink
        self.size = size
        self.mode = mode

    def __repr__(self):
        return (
            f"StatResult(ino={self.ino}, kind={self.kind}, nlink={self.nlink},"
            f" size={self.size}, mode={oct(self.mode)})"
        )


def _unpack_stat(payload: bytes) -> StatResult:
    return StatResult(*struct.unpack("<qqqqq", payload))


def run_guest(program, config: RunConfig | None = None, source=None) -> ExecutionResult:
    """Run one guest procedure in a fresh kernel instance."""
    kernel = boot(config or RunConfig(), source)
    world = GuestWorld(kernel)
    api = GuestAPI(world)
    kernel.run(lambda: program(api))
    return ExecutionResult(
        status=kernel.status,
        exit_code=kernel.exit_code,
        fault=kernel.fault,
        choices=tuple(kernel.choice_log),
        event_log=kernel.event_log,
        leaks=world.residual_allocations(),
    )
