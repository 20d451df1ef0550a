"""Client for a plugin running as a child process speaking the wire protocol.

One request in flight per process: external model servers are assumed
single-threaded, so calls are serialized behind a lock. Responses are read
by a background thread so timeouts cannot wedge the pipeline.
"""

import queue
import shlex
import subprocess
import threading

from ..masks import Mask
from . import protocol
from .ports import Detection, PluginError

DEFAULT_TIMEOUT = 30.0


class PluginProcessPort:
    """Spawns the plugin command and exposes verify()/segment() over it."""

    def __init__(self, command, timeout: float = DEFAULT_TIMEOUT):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise PluginError(f"could not start plugin {self.command!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        except ValueError:
            pass  # stdout closed during shutdown
        self._lines.put(None)

    def _roundtrip(self, request_line: str) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise PluginError(f"plugin {self.command!r} exited with code {self._proc.returncode}")
            try:
                self._proc.stdin.write(request_line + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise PluginError(f"plugin pipe closed: {exc}") from exc
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self.close(kill=True)
                raise PluginError(f"plugin timed out after {self.timeout:.0f}s")
            if line is None:
                raise PluginError("plugin closed its output stream")
        return line

    def _call(self, op, image_path, points=None, bbox_hint=None, class_names=None) -> dict:
        self._next_id += 1
        req_id = self._next_id
        request = protocol.make_request(req_id, op, image_path, points, bbox_hint, class_names)
        line = self._roundtrip(request)
        try:
            msg = protocol.parse_response(line, expect_id=req_id)
        except protocol.ProtocolError as exc:
            raise PluginError(f"protocol violation from {self.command!r}: {exc}") from exc
        if not msg["ok"]:
            raise PluginError(f"plugin error: {msg.get('error', 'unspecified')}")
        return msg

    def verify(self, image_path, points=None, bbox_hint=None, class_names=None):
        msg = self._call("verify", image_path, points, bbox_hint, class_names)
        if "detections" not in msg:
            raise PluginError("verify response carries no detections")
        return [
            Detection(bbox=tuple(d["bbox"]), score=float(d["score"]), label=d["label"])
            for d in msg["detections"]
        ]

    def segment(self, image_path, points) -> Mask:
        msg = self._call("segment", image_path, points=points)
        if "mask_rle" not in msg:
            raise PluginError("segment response carries no mask")
        try:
            return Mask.from_rle(msg["mask_rle"])
        except Exception as exc:
            raise PluginError(f"undecodable mask RLE: {exc}") from exc

    def close(self, kill: bool = False):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            if kill:
                proc.kill()
            else:
                proc.stdin.close()
                proc.wait(timeout=5)
        except Exception:
            proc.kill()
        finally:
            try:
                proc.wait(timeout=5)
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
