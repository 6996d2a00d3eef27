"""Memory-backed filesystem: files, directories, links, pipes and local sockets.

All state lives inside one execution instance; nothing ever touches the
host. Blocking operations park the calling task through the kernel's task
services, so pipe and socket rendezvous points are ordinary scheduling
decisions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from . import platform as plat
from . import sysdefs
from .kernel import Component
from .platform import ConfigError
from .sysdefs import (
    AT_FDCWD,
    AT_REMOVEDIR,
    AT_SYMLINK_NOFOLLOW,
    EADDRINUSE,
    EBADF,
    ECONNREFUSED,
    EEXIST,
    EINVAL,
    EISDIR,
    ELOOP,
    ENOENT,
    ENOTDIR,
    ENOTEMPTY,
    ENOTSOCK,
    EOPNOTSUPP,
    EPERM,
    EPIPE,
    ESPIPE,
    K_DIR,
    K_LNK,
    K_PIPE,
    K_REG,
    K_SOCK,
    O_ACCMODE,
    O_APPEND,
    O_CREAT,
    O_EXCL,
    O_RDONLY,
    O_RDWR,
    O_TRUNC,
    O_WRONLY,
    SEEK_CUR,
    SEEK_END,
    SEEK_SET,
    SysResult,
)


class _VfsError(Exception):
    """Internal signal carrying an errno for the syscall reply."""

    def __init__(self, errno: int):
        super().__init__(sysdefs.ERRNO_NAMES.get(errno, str(errno)))
        self.errno = errno


@dataclass
class StreamState:
    """Shared ring-buffer state for pipes and connected sockets."""

    capacity: int
    buf: bytearray = field(default_factory=bytearray)
    readers: int = 0
    writers: int = 0
    read_waiters: list[int] = field(default_factory=list)
    write_waiters: list[int] = field(default_factory=list)


@dataclass
class SocketState:
    stream: StreamState
    peer: int | None = None  # inode id of the connected peer
    listening: bool = False
    bound_addr: str | None = None
    backlog: int = 0
    pending: list[int] = field(default_factory=list)  # queued peer inode ids
    accept_waiters: list[int] = field(default_factory=list)
    closed: bool = False


class Inode:
    __slots__ = ("ino", "kind", "mode", "nlink", "data", "entries", "parent",
                 "stream", "sock", "open_count", "target")

    def __init__(self, ino: int, kind: int, mode: int = 0o644):
        self.ino = ino
        self.kind = kind
        self.mode = mode
        self.nlink = 0
        self.data = bytearray()        # regular file content
        self.entries: dict[str, int] = {}  # directory entries
        self.parent = ino              # parent directory (dirs only)
        self.stream: StreamState | None = None
        self.sock: SocketState | None = None
        self.open_count = 0
        self.target = ""               # symlink target

    @property
    def size(self) -> int:
        if self.kind == K_REG:
            return len(self.data)
        if self.kind == K_DIR:
            return len(self.entries)
        if self.kind == K_LNK:
            return len(self.target)
        if self.stream is not None:
            return len(self.stream.buf)
        return 0


class OpenFile:
    """One open file description; dup'd descriptors share it."""

    __slots__ = ("ino", "offset", "flags", "refs")

    def __init__(self, ino: int, flags: int):
        self.ino = ino
        self.offset = 0
        self.flags = flags
        self.refs = 1

    @property
    def readable(self) -> bool:
        return self.flags & O_ACCMODE in (O_RDONLY, O_RDWR)

    @property
    def writable(self) -> bool:
        return self.flags & O_ACCMODE in (O_WRONLY, O_RDWR)


class FileSystem:
    """The in-memory inode table, fd table and socket address space."""

    def __init__(self, config):
        self.pipe_capacity = config.pipe_capacity
        self.symlink_depth = config.symlink_depth
        self._inodes: dict[int, Inode] = {}
        self._next_ino = 1
        self.root = self._alloc(K_DIR, 0o755)
        self.root.nlink = 1  # pinned as the root
        self._fds: dict[int, OpenFile] = {}
        self._bindings: dict[str, int] = {}  # socket address -> listener ino

    # -- inode plumbing ------------------------------------------------------

    def _alloc(self, kind: int, mode: int = 0o644) -> Inode:
        node = Inode(self._next_ino, kind, mode)
        self._next_ino += 1
        self._inodes[node.ino] = node
        return node

    def _node(self, ino: int) -> Inode:
        return self._inodes[ino]

    def _maybe_reclaim(self, node: Inode) -> None:
        if node.nlink == 0 and node.open_count == 0 and node is not self.root:
            self._inodes.pop(node.ino, None)

    def _lowest_fd(self) -> int:
        fd = 0
        while fd in self._fds:
            fd += 1
        return fd

    def _install(self, of: OpenFile) -> int:
        fd = self._lowest_fd()
        self._fds[fd] = of
        self._node(of.ino).open_count += 1
        return fd

    def _open_file(self, fd: int) -> OpenFile:
        of = self._fds.get(fd)
        if of is None:
            raise _VfsError(EBADF)
        return of

    # -- path resolution -------------------------------------------------------

    def _start_dir(self, dirfd: int) -> Inode:
        if dirfd == AT_FDCWD:
            return self.root  # the working directory is fixed at /
        of = self._open_file(dirfd)
        node = self._node(of.ino)
        if node.kind != K_DIR:
            raise _VfsError(ENOTDIR)
        return node

    def _resolve(self, dirfd: int, path: str, follow_last: bool = True,
                 want_parent: bool = False, _depth: int = 0):
        """Walk a path. Returns (node, parent, last_component).

        With want_parent the last component may be absent (node is None).
        """
        if _depth > self.symlink_depth:
            raise _VfsError(ELOOP)
        if path == "":
            raise _VfsError(ENOENT)
        node = self.root if path.startswith("/") else self._start_dir(dirfd)
        parts = [p for p in path.split("/") if p]
        if not parts:  # path was "/" or equivalent
            return node, node, "."
        parent = node
        for i, comp in enumerate(parts):
            last = i == len(parts) - 1
            if node.kind == K_LNK:
                node = self._follow(node, dirfd, _depth)
            if node.kind != K_DIR:
                raise _VfsError(ENOTDIR)
            parent = node
            if comp == ".":
                continue
            if comp == "..":
                node = self._node(node.parent)
                continue
            child = node.entries.get(comp)
            if child is None:
                if last and want_parent:
                    return None, parent, comp
                raise _VfsError(ENOENT)
            node = self._node(child)
            if last:
                if node.kind == K_LNK and follow_last:
                    node = self._follow(node, dirfd, _depth)
                return node, parent, comp
        return node, parent, parts[-1]

    def _follow(self, link: Inode, dirfd: int, depth: int) -> Inode:
        node, _, _ = self._resolve(dirfd, link.target, follow_last=True, _depth=depth + 1)
        return node

    # -- files and directories -------------------------------------------------

    def openat(self, dirfd: int, path: str, flags: int, mode: int) -> int:
        if path == "":
            raise _VfsError(ENOENT)
        node, parent, name = self._resolve(dirfd, path, want_parent=bool(flags & O_CREAT))
        if node is None:  # O_CREAT and the file does not exist
            node = self._alloc(K_REG, mode & 0o7777)
            parent.entries[name] = node.ino
            node.nlink = 1
        else:
            if flags & O_CREAT and flags & O_EXCL:
                raise _VfsError(EEXIST)
            if node.kind == K_DIR and flags & O_ACCMODE != O_RDONLY:
                raise _VfsError(EISDIR)
            if node.kind == K_LNK:
                raise _VfsError(ELOOP)  # unresolved link at depth cap
            if node.kind == K_REG and flags & O_TRUNC and flags & O_ACCMODE != O_RDONLY:
                del node.data[:]
        of = OpenFile(node.ino, flags)
        return self._install(of)

    def close(self, kernel, fd: int) -> int:
        of = self._open_file(fd)
        del self._fds[fd]
        of.refs -= 1
        if of.refs == 0:
            node = self._node(of.ino)
            node.open_count -= 1
            if node.stream is not None:
                self._release_end(kernel, node, of)
            if node.sock is not None and node.open_count == 0:
                self._close_socket(kernel, node)
            self._maybe_reclaim(node)
        return 0

    def dup(self, fd: int) -> int:
        of = self._open_file(fd)
        of.refs += 1
        newfd = self._lowest_fd()
        self._fds[newfd] = of
        return newfd

    def lseek(self, fd: int, offset: int, whence: int) -> int:
        of = self._open_file(fd)
        node = self._node(of.ino)
        if node.kind in (K_PIPE, K_SOCK):
            raise _VfsError(ESPIPE)
        if whence == SEEK_SET:
            pos = offset
        elif whence == SEEK_CUR:
            pos = of.offset + offset
        elif whence == SEEK_END:
            pos = node.size + offset
        else:
            raise _VfsError(EINVAL)
        if pos < 0:
            raise _VfsError(EINVAL)
        of.offset = pos
        return pos

    def read(self, kernel, fd: int, count: int) -> bytes:
        if count < 0:
            raise _VfsError(EINVAL)
        of = self._open_file(fd)
        if not of.readable:
            raise _VfsError(EBADF)
        node = self._node(of.ino)
        if node.kind == K_DIR:
            raise _VfsError(EISDIR)
        if node.kind == K_REG:
            data = bytes(node.data[of.offset : of.offset + count])
            of.offset += len(data)
            return data
        if node.stream is None:
            raise _VfsError(EINVAL)
        return self._stream_read(kernel, node, count)

    def write(self, kernel, fd: int, data: bytes) -> int:
        of = self._open_file(fd)
        if not of.writable:
            raise _VfsError(EBADF)
        node = self._node(of.ino)
        if node.kind == K_DIR:
            raise _VfsError(EISDIR)
        if node.kind == K_REG:
            if of.flags & O_APPEND:
                of.offset = len(node.data)
            end = of.offset + len(data)
            if end > len(node.data):
                node.data.extend(b"\x00" * (end - len(node.data)))
            node.data[of.offset : end] = data
            of.offset = end
            return len(data)
        if node.stream is None:
            raise _VfsError(EINVAL)
        if node.kind == K_SOCK:
            return self._socket_write(kernel, node, data)
        return self._stream_write(kernel, node, node.stream, data)

    def mkdirat(self, dirfd: int, path: str, mode: int) -> int:
        node, parent, name = self._resolve(dirfd, path, want_parent=True)
        if node is not None:
            raise _VfsError(EEXIST)
        child = self._alloc(K_DIR, mode & 0o7777)
        child.parent = parent.ino
        parent.entries[name] = child.ino
        child.nlink = 1
        return 0

    def linkat(self, olddirfd: int, oldpath: str, newdirfd: int, newpath: str) -> int:
        node, _, _ = self._resolve(olddirfd, oldpath, follow_last=False)
        if node is None:
            raise _VfsError(ENOENT)
        if node.kind == K_DIR:
            raise _VfsError(EPERM)
        existing, parent, name = self._resolve(newdirfd, newpath, want_parent=True)
        if existing is not None:
            raise _VfsError(EEXIST)
        parent.entries[name] = node.ino
        node.nlink += 1
        return 0

    def unlinkat(self, kernel, dirfd: int, path: str, flags: int) -> int:
        node, parent, name = self._resolve(dirfd, path, follow_last=False)
        if name in (".", ".."):
            raise _VfsError(EINVAL)
        if flags & AT_REMOVEDIR:
            if node.kind != K_DIR:
                raise _VfsError(ENOTDIR)
            if node.entries:
                raise _VfsError(ENOTEMPTY)
        elif node.kind == K_DIR:
            raise _VfsError(EISDIR)
        del parent.entries[name]
        node.nlink -= 1
        if node.sock is not None and node.sock.listening:
            self._unbind(node)
        self._maybe_reclaim(node)
        return 0

    def symlinkat(self, target: str, newdirfd: int, linkpath: str) -> int:
        existing, parent, name = self._resolve(newdirfd, linkpath, want_parent=True)
        if existing is not None:
            raise _VfsError(EEXIST)
        node = self._alloc(K_LNK, 0o777)
        node.target = target
        parent.entries[name] = node.ino
        node.nlink = 1
        return 0

    def readlinkat(self, dirfd: int, path: str, bufsize: int) -> bytes:
        node, _, _ = self._resolve(dirfd, path, follow_last=False)
        if node.kind != K_LNK:
            raise _VfsError(EINVAL)
        return node.target.encode("utf-8")[:bufsize]

    def stat_payload(self, node: Inode) -> bytes:
        return struct.pack("<qqqqq", node.ino, node.kind, node.nlink, node.size, node.mode)

    def fstat(self, fd: int) -> bytes:
        of = self._open_file(fd)
        return self.stat_payload(self._node(of.ino))

    def fstatat(self, dirfd: int, path: str, flags: int) -> bytes:
        follow = not flags & AT_SYMLINK_NOFOLLOW
        node, _, _ = self._resolve(dirfd, path, follow_last=follow)
        return self.stat_payload(node)

    # -- pipes -------------------------------------------------------------

    def pipe(self) -> tuple[int, int]:
        node = self._alloc(K_PIPE, 0o600)
        node.stream = StreamState(self.pipe_capacity, readers=1, writers=1)
        rfd = self._install(OpenFile(node.ino, O_RDONLY))
        wfd = self._install(OpenFile(node.ino, O_WRONLY))
        return rfd, wfd

    def _release_end(self, kernel, node: Inode, of: OpenFile) -> None:
        st = node.stream
        if of.readable:
            st.readers -= 1
        if of.writable:
            st.writers -= 1
        # readers may now see EOF, writers EPIPE
        self._wake_all(kernel, st.read_waiters)
        self._wake_all(kernel, st.write_waiters)

    def _wake_all(self, kernel, waiters: list[int]) -> None:
        while waiters:
            kernel.wake_task(waiters.pop(0))

    def _stream_read(self, kernel, node: Inode, count: int) -> bytes:
        st = node.stream
        while True:
            if st.buf:
                take = min(count, len(st.buf))
                data = bytes(st.buf[:take])
                del st.buf[:take]
                self._wake_all(kernel, st.write_waiters)
                return data
            if count == 0:
                return b""
            if node.kind == K_SOCK:
                peer = self._inodes.get(node.sock.peer) if node.sock.peer is not None else None
                if peer is None or peer.sock.closed:
                    return b""
            elif st.writers == 0:
                return b""  # EOF
            st.read_waiters.append(kernel.tasks.current.id)
            kernel.block_current("stream-read")

    def _stream_write(self, kernel, node: Inode, st: StreamState, data: bytes) -> int:
        written = 0
        view = memoryview(bytes(data))
        while written < len(view):
            if st.readers == 0:
                raise _VfsError(EPIPE)
            space = st.capacity - len(st.buf)
            if space > 0:
                chunk = view[written : written + space]
                st.buf.extend(chunk)
                written += len(chunk)
                self._wake_all(kernel, st.read_waiters)
                continue
            st.write_waiters.append(kernel.tasks.current.id)
            kernel.block_current("stream-write")
        return written

    # -- sockets ---------------------------------------------------------------

    def socket(self, domain: int, stype: int, proto: int) -> int:
        if domain != sysdefs.AF_LOCAL or stype != sysdefs.SOCK_STREAM:
            raise _VfsError(EOPNOTSUPP)
        node = self._new_socket()
        return self._install(OpenFile(node.ino, O_RDWR))

    def _new_socket(self) -> Inode:
        node = self._alloc(K_SOCK, 0o600)
        node.stream = StreamState(self.pipe_capacity, readers=1, writers=1)
        node.sock = SocketState(stream=node.stream)
        return node

    def socketpair(self, domain: int, stype: int, proto: int) -> tuple[int, int]:
        if domain != sysdefs.AF_LOCAL or stype != sysdefs.SOCK_STREAM:
            raise _VfsError(EOPNOTSUPP)
        a = self._new_socket()
        b = self._new_socket()
        a.sock.peer = b.ino
        b.sock.peer = a.ino
        fa = self._install(OpenFile(a.ino, O_RDWR))
        fb = self._install(OpenFile(b.ino, O_RDWR))
        return fa, fb

    def _sock_node(self, fd: int) -> Inode:
        of = self._open_file(fd)
        node = self._node(of.ino)
        if node.sock is None:
            raise _VfsError(ENOTSOCK)
        return node

    def bind(self, fd: int, addr: str) -> int:
        node = self._sock_node(fd)
        if addr in self._bindings:
            raise _VfsError(EADDRINUSE)
        if node.sock.bound_addr is not None:
            raise _VfsError(EINVAL)
        node.sock.bound_addr = addr
        self._bindings[addr] = node.ino
        return 0

    def listen(self, fd: int, backlog: int) -> int:
        node = self._sock_node(fd)
        if node.sock.bound_addr is None:
            raise _VfsError(EINVAL)
        node.sock.listening = True
        node.sock.backlog = max(1, backlog)
        return 0

    def connect(self, kernel, fd: int, addr: str) -> int:
        node = self._sock_node(fd)
        if node.sock.peer is not None:
            raise _VfsError(EINVAL)
        lino = self._bindings.get(addr)
        listener = self._inodes.get(lino) if lino is not None else None
        if listener is None or not listener.sock.listening:
            raise _VfsError(ECONNREFUSED)
        server_end = self._new_socket()
        server_end.sock.peer = node.ino
        node.sock.peer = server_end.ino
        listener.sock.pending.append(server_end.ino)
        self._wake_all(kernel, listener.sock.accept_waiters)
        return 0

    def accept(self, kernel, fd: int) -> int:
        node = self._sock_node(fd)
        if not node.sock.listening:
            raise _VfsError(EINVAL)
        while not node.sock.pending:
            node.sock.accept_waiters.append(kernel.tasks.current.id)
            kernel.block_current("accept")
        peer_ino = node.sock.pending.pop(0)
        return self._install(OpenFile(peer_ino, O_RDWR))

    def _socket_write(self, kernel, node: Inode, data: bytes) -> int:
        peer_ino = node.sock.peer
        peer = self._inodes.get(peer_ino) if peer_ino is not None else None
        if peer is None or peer.sock.closed:
            raise _VfsError(EPIPE)
        return self._stream_write(kernel, peer, peer.stream, data)

    def _close_socket(self, kernel, node: Inode) -> None:
        node.sock.closed = True
        if node.sock.listening:
            self._unbind(node)
        peer_ino = node.sock.peer
        if peer_ino is not None:
            peer = self._inodes.get(peer_ino)
            if peer is not None and peer.sock is not None:
                self._wake_all(kernel, peer.stream.read_waiters)
                self._wake_all(kernel, peer.stream.write_waiters)

    def _unbind(self, node: Inode) -> None:
        addr = node.sock.bound_addr
        if addr is not None and self._bindings.get(addr) == node.ino:
            del self._bindings[addr]

    # -- invariants and inspection ---------------------------------------------

    def check_link_conservation(self) -> None:
        """Sum of nlink over non-directory inodes must equal the number of
        directory entries referencing non-directory inodes."""
        entry_refs = 0
        for node in self._inodes.values():
            if node.kind != K_DIR:
                continue
            for child_ino in node.entries.values():
                child = self._inodes.get(child_ino)
                if child is not None and child.kind != K_DIR:
                    entry_refs += 1
        nlink_sum = sum(n.nlink for n in self._inodes.values() if n.kind != K_DIR)
        if nlink_sum != entry_refs:
            raise AssertionError(
                f"hard-link accounting broken: nlink sum {nlink_sum}, entries {entry_refs}"
            )

    def snapshot(self) -> dict[str, tuple]:
        """Canonical view of the tree for end-state comparison."""
        out: dict[str, tuple] = {}

        def visit(node: Inode, prefix: str) -> None:
            for name in sorted(node.entries):
                child = self._node(node.entries[name])
                path = f"{prefix}/{name}"
                if child.kind == K_DIR:
                    out[path] = ("dir",)
                    visit(child, path)
                elif child.kind == K_LNK:
                    out[path] = ("symlink", child.target)
                elif child.kind == K_REG:
                    out[path] = ("file", bytes(child.data))
                else:
                    out[path] = ("special", child.kind)

        visit(self.root, "")
        return out

    # -- preload manifest ----------------------------------------------------

    def preload(self, manifest_path: str) -> None:
        import os.path

        base = os.path.dirname(os.path.abspath(manifest_path))
        with open(manifest_path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                try:
                    self._preload_entry(base, parts)
                except (_VfsError, ValueError) as exc:
                    raise ConfigError(
                        f"preload manifest line {lineno}: {line!r}: {exc}"
                    ) from exc

    def _preload_entry(self, base: str, parts: list[str]) -> None:
        import os.path

        kind = parts[0]
        if kind == "dir" and len(parts) == 2:
            self.mkdirat(AT_FDCWD, parts[1], 0o755)
        elif kind == "file" and len(parts) in (2, 3):
            fd = self.openat(AT_FDCWD, parts[1], O_CREAT | O_WRONLY | O_TRUNC, 0o644)
            if len(parts) == 3:
                with open(os.path.join(base, parts[2]), "rb") as payload:
                    data = payload.read()
                node = self._node(self._open_file(fd).ino)
                node.data[:] = data
            # direct close: preload runs before any task exists
            of = self._fds.pop(fd)
            of.refs -= 1
            if of.refs == 0:
                self._node(of.ino).open_count -= 1
        elif kind == "symlink" and len(parts) == 3:
            self.symlinkat(parts[2], AT_FDCWD, parts[1])
        else:
            raise ValueError(f"bad manifest entry kind {kind!r} or arity")

    def dump(self, outdir: str) -> str:
        """Write a preload-format manifest (plus payload files) describing
        the current tree; returns the manifest path."""
        import os

        os.makedirs(outdir, exist_ok=True)
        payload_dir = os.path.join(outdir, "payloads")
        lines: list[str] = []
        counter = [0]

        def visit(node: Inode, prefix: str) -> None:
            for name in sorted(node.entries):
                child = self._node(node.entries[name])
                path = f"{prefix}/{name}"
                if child.kind == K_DIR:
                    lines.append(f"dir {path}")
                    visit(child, path)
                elif child.kind == K_LNK:
                    lines.append(f"symlink {path} {child.target}")
                elif child.kind == K_REG:
                    if child.data:
                        os.makedirs(payload_dir, exist_ok=True)
                        counter[0] += 1
                        rel = f"payloads/{counter[0]:04d}.bin"
                        with open(os.path.join(outdir, rel), "wb") as fh:
                            fh.write(bytes(child.data))
                        lines.append(f"file {path} {rel}")
                    else:
                        lines.append(f"file {path}")

        visit(self.root, "")
        manifest = os.path.join(outdir, "manifest.txt")
        with open(manifest, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        return manifest


class VfsComponent(Component):
    """Component wrapper translating syscalls onto the FileSystem."""

    name = "vfs"
    handles = sysdefs.FILE_SYSCALLS

    def __init__(self, config):
        self.config = config
        self.fs = FileSystem(config)
        if config.preload:
            self.fs.preload(config.preload)

    def call(self, kernel, req) -> SysResult:
        fs = self.fs
        a = req.args
        try:
            name = req.name
            if name == "openat":
                return SysResult(fs.openat(a[0], a[1], a[2], a[3]))
            if name == "close":
                return SysResult(fs.close(kernel, a[0]))
            if name == "read":
                data = fs.read(kernel, a[0], a[1])
                return SysResult(len(data), 0, (data,))
            if name == "write":
                return SysResult(fs.write(kernel, a[0], bytes(a[1])))
            if name == "lseek":
                return SysResult(fs.lseek(a[0], a[1], a[2]))
            if name == "dup":
                return SysResult(fs.dup(a[0]))
            if name == "pipe":
                r, w = fs.pipe()
                return SysResult(0, 0, (struct.pack("<ii", r, w),))
            if name == "mkdirat":
                return SysResult(fs.mkdirat(a[0], a[1], a[2]))
            if name == "linkat":
                return SysResult(fs.linkat(a[0], a[1], a[2], a[3]))
            if name == "unlinkat":
                return SysResult(fs.unlinkat(kernel, a[0], a[1], a[2]))
            if name == "symlinkat":
                return SysResult(fs.symlinkat(a[0], a[1], a[2]))
            if name == "readlinkat":
                data = fs.readlinkat(a[0], a[1], a[2])
                return SysResult(len(data), 0, (data,))
            if name == "fstat":
                return SysResult(0, 0, (fs.fstat(a[0]),))
            if name == "fstatat":
                return SysResult(0, 0, (fs.fstatat(a[0], a[1], a[2]),))
            if name == "socket":
                return SysResult(fs.socket(a[0], a[1], a[2]))
            if name == "socketpair":
                fa, fb = fs.socketpair(a[0], a[1], a[2])
                return SysResult(0, 0, (struct.pack("<ii", fa, fb),))
            if name == "bind":
                return SysResult(fs.bind(a[0], a[1]))
            if name == "listen":
                return SysResult(fs.listen(a[0], a[1]))
            if name == "connect":
                return SysResult(fs.connect(kernel, a[0], a[1]))
            if name == "accept":
                return SysResult(fs.accept(kernel, a[0]))
        except _VfsError as exc:
            return SysResult(-1, exc.errno)
        raise AssertionError(f"unhandled file syscall {req.name}")
