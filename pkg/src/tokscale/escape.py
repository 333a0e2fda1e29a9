"""Canonical byte-escape scheme for serialized artifacts.

Printable ASCII bytes (0x20..0x7E) except backslash are written literally;
every other byte, and backslash itself, is written as ``\\xNN`` with
lowercase hex digits. The mapping is one-to-one, so decoding is exact.
"""

from __future__ import annotations

from .errors import FormatError

_LITERAL = frozenset(b for b in range(0x20, 0x7F) if b != 0x5C)

_ENC = {b: (chr(b) if b in _LITERAL else f"\\x{b:02x}") for b in range(256)}


def escape_bytes(data: bytes) -> str:
    return "".join(_ENC[b] for b in data)


def unescape_bytes(text: str) -> bytes:
    out = bytearray()
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\":
            if i + 4 > n or text[i + 1] != "x":
                raise FormatError(f"bad escape at offset {i}: {text[i:i+4]!r}")
            try:
                out.append(int(text[i + 2 : i + 4], 16))
            except ValueError:
                raise FormatError(f"bad hex escape at offset {i}: {text[i:i+4]!r}")
            i += 4
        else:
            code = ord(ch)
            if code not in _LITERAL:
                raise FormatError(f"unescaped non-printable character at offset {i}")
            out.append(code)
            i += 1
    return bytes(out)
