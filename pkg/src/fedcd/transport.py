"""Message transports: in-process queues and newline-delimited JSON over TCP.

Both transports move opaque byte payloads (one message per line) to a
named recipient's inbox.  Delivery is reliable and ordered per
recipient, which is all the session orchestrator assumes.
"""

from __future__ import annotations

import json
import socket
import threading
from collections import defaultdict, deque

from .errors import ProtocolError

RECV_TIMEOUT = 30.0


class MemoryTransport:
    """Ordered in-process inboxes; the default for tests and single-process runs."""

    def __init__(self):
        self._inboxes: dict[str, deque[bytes]] = defaultdict(deque)

    def send(self, recipient: str, data: bytes) -> None:
        self._inboxes[recipient].append(data)

    def recv(self, recipient: str, timeout: float = RECV_TIMEOUT) -> bytes:
        inbox = self._inboxes[recipient]
        if not inbox:
            raise ProtocolError(f"no message waiting for {recipient!r}")
        return inbox.popleft()

    def close(self) -> None:
        self._inboxes.clear()


class TcpTransport:
    """Loopback TCP transport framing one JSON object per line.

    Each recipient gets a dedicated connection whose first line names the
    inbox; a reader thread files every subsequent line into that inbox.
    """

    def __init__(self, host: str = "127.0.0.1"):
        self._host = host
        self._inboxes: dict[str, deque[bytes]] = defaultdict(deque)
        self._lock = threading.Condition()
        self._channels: dict[str, socket.socket] = {}
        self._closing = False
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, 0))
        self._listener.listen()
        self.port = self._listener.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._reader, args=(conn,), daemon=True).start()

    def _reader(self, conn: socket.socket) -> None:
        with conn, conn.makefile("rb") as stream:
            handshake = stream.readline()
            if not handshake:
                return
            recipient = json.loads(handshake.decode())["recipient"]
            for line in stream:
                with self._lock:
                    self._inboxes[recipient].append(line.rstrip(b"\n"))
                    self._lock.notify_all()

    def _channel(self, recipient: str) -> socket.socket:
        sock = self._channels.get(recipient)
        if sock is None:
            sock = socket.create_connection((self._host, self.port))
            sock.sendall(json.dumps({"recipient": recipient}).encode() + b"\n")
            self._channels[recipient] = sock
        return sock

    def send(self, recipient: str, data: bytes) -> None:
        if b"\n" in data:
            raise ProtocolError("wire messages must not contain newlines")
        self._channel(recipient).sendall(data + b"\n")

    def recv(self, recipient: str, timeout: float = RECV_TIMEOUT) -> bytes:
        with self._lock:
            if not self._lock.wait_for(lambda: self._inboxes[recipient], timeout=timeout):
                raise ProtocolError(f"timed out waiting for a message to {recipient!r}")
            return self._inboxes[recipient].popleft()

    def close(self) -> None:
        self._closing = True
        for sock in self._channels.values():
            try:
                sock.close()
            except OSError:
                pass
        try:
            self._listener.close()
        except OSError:
            pass


def make_transport(name: str):
    if name == "memory":
        return MemoryTransport()
    if name == "tcp":
        return TcpTransport()
    raise ValueError(f"unknown transport {name!r}")
