"""Host syscall recording and replay.

The proxy component forwards file and clock syscalls to the host (inside a
sandbox directory) and records every interaction; the replay component
serves the recorded results back without touching the host at all. Traces
are binary, length-prefixed and little-endian so round trips are bit exact.
"""

from __future__ import annotations

import os
import os.path
import struct
from dataclasses import dataclass, field

from . import sysdefs
from .kernel import Component
from .platform import ConfigError
from .sysdefs import (
    AT_FDCWD,
    EBADF,
    SysResult,
    decode_value,
    digest64,
    encode_values,
)

TRACE_MAGIC = b"DMTR"
TRACE_VERSION = 1


class TraceFormatError(Exception):
    """Trace bytes are structurally invalid."""


class TraceVersionError(TraceFormatError):
    """Trace has a well-formed header but an unsupported version."""


@dataclass(frozen=True)
class SyscallRecord:
    seq: int
    name: str
    args: tuple
    value: int
    errno: int
    payloads: tuple[bytes, ...]


@dataclass
class SyscallTrace:
    version: int = TRACE_VERSION
    config_digest: str = "0" * 16
    records: list[SyscallRecord] = field(default_factory=list)

    def append(self, name, args, value, errno, payloads) -> SyscallRecord:
        rec = SyscallRecord(
            len(self.records) + 1, name, tuple(args), value, errno, tuple(payloads)
        )
        self.records.append(rec)
        return rec


def encode_trace(trace: SyscallTrace) -> bytes:
    parts = [TRACE_MAGIC, struct.pack("<B", trace.version)]
    parts.append(bytes.fromhex(trace.config_digest))
    for rec in trace.records:
        name = rec.name.encode("ascii")
        parts.append(struct.pack("<IB", rec.seq, len(name)))
        parts.append(name)
        parts.append(encode_values(rec.args))
        parts.append(struct.pack("<qiB", rec.value, rec.errno, len(rec.payloads)))
        for payload in rec.payloads:
            parts.append(struct.pack("<I", len(payload)))
            parts.append(payload)
    return b"".join(parts)


def decode_trace(raw: bytes) -> SyscallTrace:
    if len(raw) < 13:
        raise TraceFormatError("trace too short for a header")
    if raw[:4] != TRACE_MAGIC:
        raise TraceFormatError("bad trace magic")
    version = raw[4]
    if version != TRACE_VERSION:
        raise TraceVersionError(f"unsupported trace version {version}")
    digest = raw[5:13].hex()
    trace = SyscallTrace(version=version, config_digest=digest)
    pos = 13
    try:
        while pos < len(raw):
            seq, name_len = struct.unpack_from("<IB", raw, pos)
            pos += 5
            name = raw[pos : pos + name_len].decode("ascii")
            if len(name) != name_len:
                raise TraceFormatError("truncated record name")
            pos += name_len
            (argc,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            args = []
            for _ in range(argc):
                value, pos = decode_value(raw, pos)
                args.append(value)
            value, errno, npay = struct.unpack_from("<qiB", raw, pos)
            pos += 13
            payloads = []
            for _ in range(npay):
                (plen,) = struct.unpack_from("<I", raw, pos)
                pos += 4
                payload = bytes(raw[pos : pos + plen])
                if len(payload) != plen:
                    raise TraceFormatError("truncated payload")
                pos += plen
                payloads.append(payload)
            if seq != len(trace.records) + 1:
                raise TraceFormatError(f"record sequence broken at {seq}")
            trace.records.append(
                SyscallRecord(seq, name, tuple(args), value, errno, tuple(payloads))
            )
    except (struct.error, IndexError, ValueError) as exc:
        if isinstance(exc, TraceFormatError):
            raise
        raise TraceFormatError(f"truncated or corrupt trace: {exc}") from exc
    return trace


def save_trace(trace: SyscallTrace, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_trace(trace))


def load_trace(path) -> SyscallTrace:
    with open(path, "rb") as fh:
        return decode_trace(fh.read())


def dump_text(trace: SyscallTrace) -> str:
    """Human-oriented rendering of a trace file."""
    lines = [f"# trace version {trace.version} config {trace.config_digest}"]
    for rec in trace.records:
        args = ", ".join(repr(a) for a in rec.args)
        extra = ""
        if rec.payloads:
            extra = " out=" + "|".join(p.hex() for p in rec.payloads)
        err = sysdefs.ERRNO_NAMES.get(rec.errno, str(rec.errno))
        lines.append(f"{rec.seq} {rec.name}({args}) -> {rec.value} {err}{extra}")
    return "\n".join(lines) + "\n"


_PROXY_CALLS = frozenset(
    {
        "openat",
        "close",
        "read",
        "write",
        "lseek",
        "mkdirat",
        "linkat",
        "unlinkat",
        "symlinkat",
        "readlinkat",
        "fstat",
        "clock_gettime",
        "clock_settime",
    }
)


class ProxyComponent(Component):
    """Forwards the supported file and clock calls to the host, recording
    each one. Paths are confined to the sandbox directory."""

    name = "proxy"
    handles = _PROXY_CALLS

    def __init__(self, config, hook):
        self.config = config
        self.hook = hook
        self.sandbox = os.path.abspath(config.sandbox_dir)
        if not os.path.isdir(self.sandbox):
            raise ConfigError(f"sandbox directory {self.sandbox!r} does not exist")
        self.trace = SyscallTrace(
            config_digest=digest64(config.describe().encode("utf-8"))
        )
        self._fd_map: dict[int, int] = {}  # guest fd -> host fd
        self._next_fd = 0

    # -- helpers -----------------------------------------------------------

    def _guest_fd(self, host_fd: int) -> int:
        fd = 0
        while fd in self._fd_map:
            fd += 1
        self._fd_map[fd] = host_fd
        return fd

    def _host_fd(self, kernel, guest_fd: int) -> int | None:
        return self._fd_map.get(guest_fd)

    def _host_path(self, kernel, dirfd: int, path: str) -> tuple[int, str]:
        """Translate a guest (dirfd, path) pair into host terms."""
        for comp in path.split("/"):
            if comp == "..":
                kernel.raise_fault(
                    sysdefs.F_VFS_VIOLATION, f"sandbox escape attempt: {path!r}"
                )
        if path.startswith("/") or dirfd == AT_FDCWD:
            rel = path.lstrip("/")
            full = os.path.normpath(os.path.join(self.sandbox, rel))
            if full != self.sandbox and not full.startswith(self.sandbox + os.sep):
                kernel.raise_fault(
                    sysdefs.F_VFS_VIOLATION, f"sandbox escape attempt: {path!r}"
                )
            return -1, full
        host_dirfd = self._fd_map.get(dirfd)
        if host_dirfd is None:
            return -2, path  # signals EBADF to the caller
        return host_dirfd, path

    def _record(self, req, res: SysResult) -> SysResult:
        self.trace.append(req.name, req.args, res.value, res.errno, res.payloads)
        return res

    # -- dispatch ------------------------------------------------------------

    def call(self, kernel, req) -> SysResult:
        res = self._forward(kernel, req)
        return self._record(req, res)

    def _forward(self, kernel, req) -> SysResult:
        name = req.name
        a = req.args
        hook = self.hook

        if name == "openat":
            dirfd, host_path = self._host_path(kernel, a[0], a[1])
            if dirfd == -2:
                return SysResult(-1, EBADF)
            host = hook.call("openat", (dirfd, host_path, a[2], a[3]))
            if host.value < 0:
                return SysResult(host.value, host.errno)
            return SysResult(self._guest_fd(host.value))

        if name == "close":
            host_fd = self._fd_map.pop(a[0], None)
            if host_fd is None:
                return SysResult(-1, EBADF)
            host = hook.call("close", (host_fd,))
            return SysResult(host.value, host.errno)

        if name in ("read", "write", "lseek", "fstat"):
            host_fd = self._fd_map.get(a[0])
            if host_fd is None:
                return SysResult(-1, EBADF)
            host = hook.call(name, (host_fd,) + tuple(a[1:]))
            return SysResult(host.value, host.errno, host.payloads)

        if name in ("mkdirat", "unlinkat", "readlinkat"):
            dirfd, host_path = self._host_path(kernel, a[0], a[1])
            if dirfd == -2:
                return SysResult(-1, EBADF)
            host = hook.call(name, (dirfd, host_path) + tuple(a[2:]))
            return SysResult(host.value, host.errno, host.payloads)

        if name == "linkat":
            od, opath = self._host_path(kernel, a[0], a[1])
            nd, npath = self._host_path(kernel, a[2], a[3])
            if od == -2 or nd == -2:
                return SysResult(-1, EBADF)
            host = hook.call("linkat", (od, opath, nd, npath))
            return SysResult(host.value, host.errno)

        if name == "symlinkat":
            nd, npath = self._host_path(kernel, a[1], a[2])
            if nd == -2:
                return SysResult(-1, EBADF)
            host = hook.call("symlinkat", (a[0], nd, npath))
            return SysResult(host.value, host.errno)

        if name in ("clock_gettime", "clock_settime"):
            host = hook.call(name, tuple(a))
            return SysResult(host.value, host.errno, host.payloads)

        raise AssertionError(f"proxy cannot forward {name}")

    def after_run(self, kernel) -> None:
        for host_fd in self._fd_map.values():
            try:
                os.close(host_fd)
            except OSError:
                pass
        self._fd_map.clear()
        if self.config.trace_path:
            save_trace(self.trace, self.config.trace_path)


class ReplayComponent(Component):
    """Serves recorded results; any mismatch is a replay divergence."""

    name = "replay"
    handles = _PROXY_CALLS

    def __init__(self, config):
        self.config = config
        self.trace = load_trace(config.trace_path)
        self.cursor = 0

    def call(self, kernel, req) -> SysResult:
        if self.cursor >= len(self.trace.records):
            kernel.raise_fault(
                sysdefs.F_REPLAY_DIVERGENCE,
                f"trace exhausted: no record for {req.name}{req.args!r}",
            )
        rec = self.trace.records[self.cursor]
        if rec.name != req.name or rec.args != tuple(req.args):
            kernel.raise_fault(
                sysdefs.F_REPLAY_DIVERGENCE,
                f"expected {rec.name}{rec.args!r}, got {req.name}{tuple(req.args)!r}",
            )
        self.cursor += 1
        return SysResult(rec.value, rec.errno, rec.payloads)
