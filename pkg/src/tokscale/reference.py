"""Hand-written backtracking matcher for the pre-tokenizer pattern.

This is an independent second implementation of the chunking contract,
kept in-tree for differential testing against the compiled-pattern
chunker in :mod:`tokscale.pretokenize`. It interprets the pattern branch
by branch with possessive-quantifier semantics, using `unicodedata`
rather than the regex engine's tables for character classes.

Two deliberate class quirks, matched to the engine's behavior:
  * ``\\s`` excludes the information separators U+001C..U+001F even
    though ``str.isspace()`` accepts them.
  * Codepoints unassigned in this interpreter's Unicode version may be
    classified differently by a regex engine with newer tables; the
    differential fuzz corpus only draws assigned codepoints.
"""

from __future__ import annotations

import unicodedata

_NOT_WS = frozenset("\x1c\x1d\x1e\x1f")


def _is_ws(ch: str) -> bool:
    return ch.isspace() and ch not in _NOT_WS


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch)[0] == "L"


def _is_number(ch: str) -> bool:
    return unicodedata.category(ch)[0] == "N"


def _is_punct(ch: str) -> bool:
    # [^\s\p{L}\p{N}]
    return not (_is_ws(ch) or _is_letter(ch) or _is_number(ch))


_SINGLE_CONTRACTIONS = frozenset("sdmt")
_DOUBLE_CONTRACTIONS = ("ll", "ve", "re")


def _fold(ch: str) -> str:
    folded = ch.casefold()
    return folded if len(folded) == 1 else ch


def _match_contraction_tail(s: str, i: int) -> int:
    """(?i:[sdmt]|ll|ve|re) at position i; returns end or -1."""
    n = len(s)
    if i < n and _fold(s[i]) in _SINGLE_CONTRACTIONS:
        return i + 1
    if i + 1 < n:
        two = _fold(s[i]) + _fold(s[i + 1])
        if two in _DOUBLE_CONTRACTIONS:
            return i + 2
    return -1


def _match_at(s: str, i: int, apostrophe: bool) -> int:
    """Return the end of the leftmost alternation match starting at i."""
    n = len(s)
    ch = s[i]

    # Branch 1: '(?i:[sdmt]|ll|ve|re)   (bare tail when apostrophe=False)
    if apostrophe:
        if ch == "'":
            end = _match_contraction_tail(s, i + 1)
            if end != -1:
                return end
    else:
        end = _match_contraction_tail(s, i)
        if end != -1:
            return end

    # Branch 2: [^\r\n\p{L}\p{N}]?+\p{L}+
    # The optional prefix is possessive: once taken, the branch fails
    # rather than retrying without it.
    if ch not in "\r\n" and not _is_letter(ch) and not _is_number(ch):
        j = i + 1
        if j < n and _is_letter(s[j]):
            while j < n and _is_letter(s[j]):
                j += 1
            return j
    elif _is_letter(ch):
        j = i + 1
        while j < n and _is_letter(s[j]):
            j += 1
        return j

    # Branch 3: \p{N}{1,3}
    if _is_number(ch):
        j = i + 1
        while j < n and j - i < 3 and _is_number(s[j]):
            j += 1
        return j

    # Branch 4:  ?[^\s\p{L}\p{N}]++[\r\n]*
    j = i
    if ch == " " and j + 1 < n and _is_punct(s[j + 1]):
        j += 1
    if j < n and _is_punct(s[j]):
        while j < n and _is_punct(s[j]):
            j += 1
        while j < n and s[j] in "\r\n":
            j += 1
        return j

    # Whitespace branches 5-7 all start with a \s run.
    if _is_ws(ch):
        j = i + 1
        while j < n and _is_ws(s[j]):
            j += 1
        run_end = j
        # Branch 5: \s*[\r\n] -- longest prefix of the run ending in CR/LF.
        for k in range(run_end - 1, i - 1, -1):
            if s[k] in "\r\n":
                return k + 1
        # Branch 6: \s+(?!\S) -- whole run at end of input, else all but
        # the last whitespace character (which needs >= 2 to leave one).
        if run_end == n:
            return run_end
        if run_end - i >= 2:
            return run_end - 1
        # Branch 7: \s+
        return run_end

    # Unreachable on valid input: branch 4 accepts any non-ws/L/N char and
    # branches 2/3 the rest, but keep a hard failure for safety.
    raise AssertionError(f"no branch matched at {i}: {ch!r}")


def reference_chunk(text: str, apostrophe: bool = True) -> list[bytes]:
    """Segment ``text`` exactly as the pre-tokenizer pattern does."""
    out: list[bytes] = []
    i = 0
    n = len(text)
    while i < n:
        end = _match_at(text, i, apostrophe)
        out.append(text[i:end].encode("utf-8"))
        i = end
    return out
