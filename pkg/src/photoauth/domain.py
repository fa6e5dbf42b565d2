"""Domain name handling: hostname extraction, punycode, lookalike mutation.

The verifier compares the domain photographed in a browser address bar
against the server's own accepted names. Comparison happens on the
ASCII (punycode) form so visually confusable Unicode spoofs normalize
to distinct strings instead of distinct glyphs.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

HOSTNAME_MAX_LEN = 253
LABEL_MAX_LEN = 63

_LDH_LABEL = re.compile(r"^[a-z0-9-]+$")
_SCHEME = re.compile(r"^[a-z][a-z0-9+.-]*://", re.IGNORECASE)
_PORT_SUFFIX = re.compile(r":\d*$")

# Bootstring parameters for punycode.
_BASE = 36
_TMIN = 1
_TMAX = 26
_SKEW = 38
_DAMP = 700
_INITIAL_BIAS = 72
_INITIAL_N = 0x80
_MAXINT = 2**31 - 1


class DomainError(ValueError):
    pass


class NoHostname(DomainError):
    """Raised when no hostname can be extracted from a piece of text."""


class InvalidLabel(DomainError):
    """Raised when a hostname label violates length or charset rules."""


class EncodingOverflow(DomainError):
    """Raised when punycode delta arithmetic exceeds the allowed integer range."""


@dataclass(frozen=True)
class DomainName:
    """Canonical hostname: lowercase ASCII labels, already punycoded.

    `original_text` keeps the raw string the name was parsed from; it is
    excluded from equality and hashing so names extracted from different
    surfaces (config, OCR output) compare by labels alone.
    """

    labels: tuple[str, ...]
    original_text: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.labels:
            raise InvalidLabel("hostname needs at least one label")
        for label in self.labels:
            if not label or len(label) > LABEL_MAX_LEN:
                raise InvalidLabel(f"label length out of range: {label!r}")
            if not _LDH_LABEL.match(label):
                raise InvalidLabel(f"label has characters outside letters/digits/hyphen: {label!r}")
        if len(str(self)) > HOSTNAME_MAX_LEN:
            raise InvalidLabel(f"hostname longer than {HOSTNAME_MAX_LEN} chars")

    def __str__(self) -> str:
        return ".".join(self.labels)


def _adapt(delta: int, numpoints: int, firsttime: bool) -> int:
    delta = delta // _DAMP if firsttime else delta // 2
    delta += delta // numpoints
    k = 0
    while delta > ((_BASE - _TMIN) * _TMAX) // 2:
        delta //= _BASE - _TMIN
        k += _BASE
    return k + (((_BASE - _TMIN + 1) * delta) // (delta + _SKEW))


def _digit_char(d: int) -> str:
    # 0..25 -> a..z, 26..35 -> 0..9
    return chr(d + ord("a")) if d < 26 else chr(d - 26 + ord("0"))


def to_punycode(label: str) -> str:
    """Encode one hostname label to its ASCII form.

    Pure-ASCII labels come back unchanged (lowercased). Labels with any
    other code point are bootstring-encoded and prefixed with "xn--".

    Raises:
        EncodingOverflow: delta arithmetic left the 32-bit range.
    """
    if not label:
        raise InvalidLabel("empty label")
    label = label.lower()
    if all(ord(c) < 0x80 for c in label):
        return label

    codepoints = [ord(c) for c in label]
    basic = [c for c in label if ord(c) < 0x80]
    out = basic + ["-"] if basic else []

    n = _INITIAL_N
    delta = 0
    bias = _INITIAL_BIAS
    h = b = len(basic)
    while h < len(codepoints):
        m = min(cp for cp in codepoints if cp >= n)
        delta += (m - n) * (h + 1)
        if delta > _MAXINT:
            raise EncodingOverflow(f"label too costly to encode: {label!r}")
        n = m
        for cp in codepoints:
            if cp < n:
                delta += 1
                if delta > _MAXINT:
                    raise EncodingOverflow(f"label too costly to encode: {label!r}")
            elif cp == n:
                q = delta
                k = _BASE
                while True:
                    t = _TMIN if k <= bias else (_TMAX if k >= bias + _TMAX else k - bias)
                    if q < t:
                        break
                    out.append(_digit_char(t + (q - t) % (_BASE - t)))
                    q = (q - t) // (_BASE - t)
                    k += _BASE
                out.append(_digit_char(q))
                bias = _adapt(delta, h + 1, h == b)
                delta = 0
                h += 1
        delta += 1
        n += 1
    return "xn--" + "".join(out)


def _parse_token(token: str) -> DomainName:
    raw = token
    token = _SCHEME.sub("", token)
    # Userinfo only appears before the first path separator.
    authority_end = len(token)
    for sep in "/?#":
        idx = token.find(sep)
        if idx != -1:
            authority_end = min(authority_end, idx)
    authority = token[:authority_end]
    at = authority.rfind("@")
    if at != -1:
        authority = authority[at + 1 :]
    authority = _PORT_SUFFIX.sub("", authority)
    if authority.endswith("."):
        authority = authority[:-1]
    if not authority:
        raise NoHostname(f"no hostname in {raw!r}")
    labels = tuple(to_punycode(label) for label in authority.split("."))
    return DomainName(labels=labels, original_text=raw)


def extract_hostname(text: str) -> DomainName:
    """Pull a canonical hostname out of address-bar text.

    Strips scheme, userinfo, port, path, query and fragment, lowercases,
    and punycodes each label. When the text contains several whitespace
    separated tokens the first one that parses as a hostname wins.

    Raises:
        NoHostname: nothing parseable remains.
        InvalidLabel: a label breaks LDH or length rules.
    """
    tokens = text.split()
    if not tokens:
        raise NoHostname("empty text")
    first_error: DomainError | None = None
    for token in tokens:
        try:
            return _parse_token(token)
        except DomainError as exc:
            if first_error is None:
                first_error = exc
    assert first_error is not None
    if len(tokens) == 1:
        raise first_error
    raise NoHostname(f"no parseable hostname in {text!r}")


def domains_equal(found: DomainName, accepted: frozenset[DomainName] | set[DomainName]) -> bool:
    """True when the found name exactly matches one of the accepted names.

    Label sequences must be identical; "www.example.com" and
    "example.com" are different names, so servers that answer on both
    must register both.
    """
    return any(found.labels == d.labels for d in accepted)


def load_confusable_rules(path: str) -> dict[str, str]:
    """Read lookalike substitution rules, one per line: "<char> <replacement>".

    A line with a single field maps that character to the empty string
    (deletion). Blank lines and lines starting with '#' are skipped.
    """
    rules: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) == 1:
                rules[parts[0]] = ""
            else:
                rules[parts[0]] = parts[1]
    return rules


def confusable_mutate(
    domain: DomainName,
    rules: dict[str, str],
    rng: random.Random | int,
    count: int = 1,
) -> DomainName:
    """Substitute lookalike characters into a domain name.

    Picks up to `count` distinct positions whose character has a rule and
    applies the replacement. Deterministic for a given rng state. Returns
    the input unchanged when no position matches any rule.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    text = str(domain)
    positions = [i for i, ch in enumerate(text) if ch in rules]
    if not positions:
        return domain
    chosen = sorted(rng.sample(positions, min(count, len(positions))))
    chars = list(text)
    for i in chosen:
        chars[i] = rules[chars[i]]
    return extract_hostname("".join(chars))
