"""Plain-text certificates that can be re-checked by ``vnwb verify``.

Layout::

    vnwb-certificate v1
    kind: ppbasis
    command: ppbasis --precision 20 --budget 2000
    input:
    | vnwb-backend v1
    | gallery: amplification d=2 m=2
    status: ok
    <key>: <value>
    ...
    end

Only the command, input and body enter the text; worker counts and output
paths do not, so certificates are byte-identical across those settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

HEADER = "vnwb-certificate v1"


class CertificateError(ValueError):
    pass


@dataclass
class Certificate:
    kind: str
    command: str
    input_text: str
    status: str = "ok"
    body: list = field(default_factory=list)  # (key, value) pairs in order

    def add(self, key: str, value) -> None:
        self.body.append((key, str(value)))

    def get(self, key: str, default=None):
        for k, v in self.body:
            if k == key:
                return v
        return default

    def values(self, prefix: str) -> list[tuple[str, str]]:
        return [(k, v) for k, v in self.body if k.startswith(prefix)]

    def render(self) -> str:
        out = [HEADER, f"kind: {self.kind}", f"command: {self.command}", "input:"]
        out += ["| " + line for line in self.input_text.rstrip("\n").splitlines()]
        out.append(f"status: {self.status}")
        out += [f"{k}: {v}" for k, v in self.body]
        out.append("end")
        return "\n".join(out) + "\n"


def parse_certificate(text: str) -> Certificate:
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise CertificateError(f"expected header {HEADER!r}")
    if len(lines) < 6 or lines[-1] != "end":
        raise CertificateError("certificate is truncated (no 'end' line)")

    def field_of(line: str, key: str) -> str:
        if not line.startswith(key + ": "):
            raise CertificateError(f"expected '{key}:' but found {line!r}")
        return line[len(key) + 2:]

    kind = field_of(lines[1], "kind")
    command = field_of(lines[2], "command")
    if lines[3] != "input:":
        raise CertificateError("missing input section")
    i = 4
    inp = []
    while i < len(lines) and lines[i].startswith("| "):
        inp.append(lines[i][2:])
        i += 1
    status = field_of(lines[i], "status")
    body = []
    for line in lines[i + 1:-1]:
        if ": " not in line:
            raise CertificateError(f"malformed body line {line!r}")
        k, v = line.split(": ", 1)
        body.append((k, v))
    return Certificate(kind, command, "\n".join(inp) + "\n", status, body)
