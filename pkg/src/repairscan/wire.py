"""Line-delimited JSON wire protocol for external scanner and repair models.

Scanner request/response:
    {"id": str, "prefix": str, "scan": str,
     "identifiers": [{"name": str, "byte_offset": int}]}
    {"id": str, "scores": [{"name": str, "byte_offset": int, "score": float}]}

Repair request/response:
    {"id": str, "text": str, "k": int}
    {"id": str, "candidates": [str, ...]}

Endpoints are either a shell command (spoken to over stdin/stdout) or an
http(s) URL (one POST per request).
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import urllib.error
import urllib.request

from .errors import EndpointError

log = logging.getLogger(__name__)


class StdioEndpoint:
    """A subprocess speaking one JSON object per line on stdin/stdout."""

    def __init__(self, command: str):
        self.command = command
        try:
            self.proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EndpointError(f"cannot start endpoint {command!r}: {exc}") from exc

    def request(self, payload: dict) -> dict:
        if self.proc.poll() is not None:
            raise EndpointError(f"endpoint {self.command!r} exited early")
        try:
            self.proc.stdin.write(json.dumps(payload) + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise EndpointError(f"endpoint {self.command!r} pipe failure: {exc}") from exc
        if not line:
            raise EndpointError(f"endpoint {self.command!r} closed its stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise EndpointError(f"endpoint {self.command!r} sent invalid JSON") from exc

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class HttpEndpoint:
    def __init__(self, url: str):
        self.url = url

    def request(self, payload: dict) -> dict:
        body = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=60) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, json.JSONDecodeError, OSError) as exc:
            raise EndpointError(f"endpoint {self.url!r} failed: {exc}") from exc

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def open_endpoint(spec: str) -> StdioEndpoint | HttpEndpoint:
    if spec.startswith(("http://", "https://")):
        return HttpEndpoint(spec)
    return StdioEndpoint(spec)


def scan_request(endpoint, sample, request_id: str) -> list[tuple[str, float]]:
    """One scanner call; returns (name, score) pairs with scores clamped."""
    payload = {
        "id": request_id,
        "prefix": sample.prefix_text,
        "scan": sample.scan_text,
        "identifiers": [{"name": o.name, "byte_offset": o.byte_offset} for o in sample.labels],
    }
    response = endpoint.request(payload)
    if response.get("id") != request_id:
        raise EndpointError(
            f"scanner answered id {response.get('id')!r} for request {request_id!r}"
        )
    out = []
    for entry in response.get("scores", []):
        try:
            name = entry["name"]
            score = float(entry["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise EndpointError(f"malformed score entry: {entry!r}") from exc
        if not 0.0 <= score <= 1.0:
            log.warning("clamping out-of-range score %s for %r", score, name)
            score = min(1.0, max(0.0, score))
        out.append((name, score))
    return out


def repair_request(endpoint, bug_id: str, text: str, k: int) -> list[str]:
    """One repair call; returns up to k candidate patches."""
    response = endpoint.request({"id": bug_id, "text": text, "k": k})
    if response.get("id") != bug_id:
        raise EndpointError(
            f"repair model answered id {response.get('id')!r} for request {bug_id!r}"
        )
    candidates = response.get("candidates")
    if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
        raise EndpointError(f"malformed candidates for {bug_id!r}")
    return candidates[:k]
