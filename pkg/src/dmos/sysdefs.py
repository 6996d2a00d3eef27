"""Shared numeric definitions and wire encodings.

Errno values, open flags and the fixed syscall signature table are defined
here rather than borrowed from the host so that event logs and trace files
are stable across machines.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

# errno values (fixed, host independent)
EPERM = 1
ENOENT = 2
ESRCH = 3
EIO = 5
EBADF = 9
EAGAIN = 11
ENOMEM = 12
EEXIST = 17
ENOTDIR = 20
EISDIR = 21
EINVAL = 22
EMFILE = 24
ESPIPE = 29
EPIPE = 32
ENOSYS = 38
ENOTEMPTY = 39
ELOOP = 40
ENOTSOCK = 88
EOPNOTSUPP = 95
EADDRINUSE = 98
ECONNREFUSED = 111

ERRNO_NAMES = {
    0: "OK",
    EPERM: "EPERM",
    ENOENT: "ENOENT",
    ESRCH: "ESRCH",
    EIO: "EIO",
    EBADF: "EBADF",
    EAGAIN: "EAGAIN",
    ENOMEM: "ENOMEM",
    EEXIST: "EEXIST",
    ENOTDIR: "ENOTDIR",
    EISDIR: "EISDIR",
    EINVAL: "EINVAL",
    EMFILE: "EMFILE",
    ESPIPE: "ESPIPE",
    EPIPE: "EPIPE",
    ENOSYS: "ENOSYS",
    ENOTEMPTY: "ENOTEMPTY",
    ELOOP: "ELOOP",
    ENOTSOCK: "ENOTSOCK",
    EOPNOTSUPP: "EOPNOTSUPP",
    EADDRINUSE: "EADDRINUSE",
    ECONNREFUSED: "ECONNREFUSED",
}

# open(2) style flags
O_RDONLY = 0
O_WRONLY = 1
O_RDWR = 2
O_ACCMODE = 3
O_CREAT = 0o100
O_EXCL = 0o200
O_TRUNC = 0o1000
O_APPEND = 0o2000

SEEK_SET = 0
SEEK_CUR = 1
SEEK_END = 2

AT_FDCWD = -100
AT_SYMLINK_NOFOLLOW = 0x100
AT_REMOVEDIR = 0x200

CLOCK_REALTIME = 0
CLOCK_MONOTONIC = 1

AF_LOCAL = 1
SOCK_STREAM = 1

# inode kind codes as reported by fstat
K_REG = 1
K_DIR = 2
K_LNK = 3
K_PIPE = 4
K_SOCK = 5

# fault kinds
F_ASSERTION = "assertion"
F_DEADLOCK = "deadlock"
F_UNSUPPORTED = "unsupported-syscall"
F_ALLOC_UNHANDLED = "allocation-failure-unhandled"
F_VFS_VIOLATION = "vfs-violation"
F_REPLAY_DIVERGENCE = "replay-divergence"

FAULT_KINDS = frozenset(
    {
        F_ASSERTION,
        F_DEADLOCK,
        F_UNSUPPORTED,
        F_ALLOC_UNHANDLED,
        F_VFS_VIOLATION,
        F_REPLAY_DIVERGENCE,
    }
)

# event kinds
EV_SYSCALL_ENTER = "syscall-enter"
EV_SYSCALL_EXIT = "syscall-exit"
EV_CHOICE = "choice"
EV_TASK_SWITCH = "task-switch"
EV_FAULT = "fault"
EV_EXIT = "exit"

# The fixed syscall list.  Argument codes: i = integer, f = fd number,
# s = path or name string, b = byte payload.
SYSCALLS: dict[str, str] = {
    # task group
    "task_spawn": "i",
    "task_yield": "",
    "task_block": "s",
    "task_wake": "i",
    "task_exit": "i",
    "trace": "b",
    # file group
    "openat": "fsii",
    "close": "f",
    "read": "fi",
    "write": "fb",
    "lseek": "fii",
    "dup": "f",
    "pipe": "",
    "mkdirat": "fsi",
    "linkat": "fsfs",
    "unlinkat": "fsi",
    "symlinkat": "sfs",
    "readlinkat": "fsi",
    "fstat": "f",
    "fstatat": "fsi",
    "socket": "iii",
    "socketpair": "iii",
    "bind": "fs",
    "listen": "fi",
    "connect": "fs",
    "accept": "f",
    # clock group
    "clock_gettime": "i",
    "clock_settime": "ii",
    "getitimer": "i",
    "setitimer": "iii",
}

FILE_SYSCALLS = frozenset(
    {
        "openat",
        "close",
        "read",
        "write",
        "lseek",
        "dup",
        "pipe",
        "mkdirat",
        "linkat",
        "unlinkat",
        "symlinkat",
        "readlinkat",
        "fstat",
        "fstatat",
        "socket",
        "socketpair",
        "bind",
        "listen",
        "connect",
        "accept",
    }
)

CLOCK_SYSCALLS = frozenset({"clock_gettime", "clock_settime", "getitimer", "setitimer"})

TASK_SYSCALLS = frozenset(
    {"task_spawn", "task_yield", "task_block", "task_wake", "task_exit", "trace"}
)


class MalformedSyscallError(ValueError):
    """Request rejected before dispatch: unknown name or bad signature."""


@dataclass(frozen=True)
class SyscallRequest:
    name: str
    args: tuple
    task: int


@dataclass(frozen=True)
class SysResult:
    value: int
    errno: int = 0
    payloads: tuple[bytes, ...] = ()

    @property
    def ok(self) -> bool:
        return self.errno == 0


def validate_request(req: SyscallRequest) -> None:
    sig = SYSCALLS.get(req.name)
    if sig is None:
        raise MalformedSyscallError(f"unknown syscall {req.name!r}")
    if len(req.args) != len(sig):
        raise MalformedSyscallError(
            f"{req.name}: expected {len(sig)} args, got {len(req.args)}"
        )
    for i, (code, value) in enumerate(zip(sig, req.args)):
        if code in ("i", "f"):
            if not isinstance(value, int) or isinstance(value, bool):
                raise MalformedSyscallError(f"{req.name}: arg {i} must be int")
        elif code == "s":
            if not isinstance(value, str):
                raise MalformedSyscallError(f"{req.name}: arg {i} must be str")
        elif code == "b":
            if not isinstance(value, (bytes, bytearray)):
                raise MalformedSyscallError(f"{req.name}: arg {i} must be bytes")


# Canonical value encoding, shared by event digests and the trace codec.

_TAG_INT = 0
_TAG_BYTES = 1
_TAG_STR = 2


def encode_value(value) -> bytes:
    if isinstance(value, bool):
        raise TypeError("bool is not an encodable syscall value")
    if isinstance(value, int):
        return struct.pack("<Bq", _TAG_INT, value)
    if isinstance(value, (bytes, bytearray)):
        data = bytes(value)
        return struct.pack("<BI", _TAG_BYTES, len(data)) + data
    if isinstance(value, str):
        data = value.encode("utf-8")
        return struct.pack("<BI", _TAG_STR, len(data)) + data
    raise TypeError(f"unencodable value {value!r}")


def decode_value(buf: bytes, pos: int) -> tuple[object, int]:
    tag = buf[pos]
    pos += 1
    if tag == _TAG_INT:
        (value,) = struct.unpack_from("<q", buf, pos)
        return value, pos + 8
    if tag in (_TAG_BYTES, _TAG_STR):
        (length,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        raw = bytes(buf[pos : pos + length])
        if len(raw) != length:
            raise ValueError("truncated value")
        pos += length
        return (raw if tag == _TAG_BYTES else raw.decode("utf-8")), pos
    raise ValueError(f"bad value tag {tag}")


def encode_values(values) -> bytes:
    parts = [struct.pack("<I", len(values))]
    parts.extend(encode_value(v) for v in values)
    return b"".join(parts)


def digest64(*chunks: bytes) -> str:
    """Stable 64-bit hex digest used for event log payloads."""
    h = hashlib.blake2b(digest_size=8)
    for chunk in chunks:
        h.update(struct.pack("<I", len(chunk)))
        h.update(chunk)
    return h.hexdigest()
