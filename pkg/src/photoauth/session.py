"""Login sessions, cookies and short-link tokens.

One session tracks one login attempt from credentials to a terminal
state. The store owns all mutation; the Session values it hands out are
immutable snapshots.
"""

from __future__ import annotations

import random
import re
import secrets
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

from .domain import DomainName

COOKIE_BITS = 128
_COOKIE_RE = re.compile(r"[0-9a-f]{32}\Z")

DEFAULT_TOKEN_LENGTH = 10
MIN_TOKEN_LENGTH = 6
MAX_TOKEN_LENGTH = 12

DEFAULT_TTL_S = 300.0
DEFAULT_RETAKE_CAP = 5
DEFAULT_LOOKUP_RATE_LIMIT = 10  # token lookups per second per source


class SessionError(Exception):
    pass


class InvalidState(SessionError):
    """Raised on a transition the session lifecycle does not allow."""


class RateLimited(SessionError):
    """Raised when one source exceeds the token lookup budget."""


class Preference(Enum):
    SMS = "sms"
    PUSH = "push"
    EMAIL = "email"


class Channel(Enum):
    PC_BROWSER = "pc-browser"
    PHONE_BROWSER = "phone-browser"


class SessionState(Enum):
    CREDENTIALS_OK = "credentials-ok"
    LINK_SENT = "link-sent"
    AWAITING_PHOTO = "awaiting-photo"
    AUTHORIZED = "authorized"
    DENIED = "denied"
    FALLBACK_OFFERED = "fallback-offered"


# Allowed lifecycle transitions; terminal states have no exits.
_TRANSITIONS: dict[SessionState, frozenset[SessionState]] = {
    SessionState.CREDENTIALS_OK: frozenset({SessionState.LINK_SENT}),
    SessionState.LINK_SENT: frozenset({SessionState.AUTHORIZED, SessionState.AWAITING_PHOTO}),
    SessionState.AWAITING_PHOTO: frozenset(
        {
            SessionState.AUTHORIZED,
            SessionState.DENIED,
            SessionState.AWAITING_PHOTO,
            SessionState.FALLBACK_OFFERED,
        }
    ),
    SessionState.AUTHORIZED: frozenset(),
    SessionState.DENIED: frozenset(),
    SessionState.FALLBACK_OFFERED: frozenset(),
}


@dataclass(frozen=True)
class Cookie:
    """Session cookie bound to the origin that set it."""

    value: str
    origin: DomainName


def cookie_value_well_formed(value: str) -> bool:
    return bool(_COOKIE_RE.match(value))


@dataclass(frozen=True)
class ShortLinkToken:
    """Decimal token addressed as <server-domain>/c/<digits>."""

    digits: str

    def __post_init__(self):
        if not self.digits.isdigit():
            raise ValueError(f"token must be decimal digits, got {self.digits!r}")
        if not MIN_TOKEN_LENGTH <= len(self.digits) <= MAX_TOKEN_LENGTH:
            raise ValueError(f"token length must be in [{MIN_TOKEN_LENGTH}, {MAX_TOKEN_LENGTH}]")

    def link(self, server_domain: DomainName | str) -> str:
        return f"{server_domain}/c/{self.digits}"


@dataclass(frozen=True)
class Session:
    """Immutable snapshot of one login attempt."""

    id: str
    username: str
    cookie: Cookie
    token: Optional[ShortLinkToken]
    preference: Preference
    state: SessionState
    retakes: int
    created_at: float
    phishing_warned: bool = False
    login_source: Optional[str] = None
    login_channel: Optional[Channel] = None


def draw_cookie_value(rng: random.Random | None = None) -> str:
    """128-bit lowercase hex cookie value."""
    if rng is None:
        return secrets.token_hex(COOKIE_BITS // 8)
    return f"{rng.getrandbits(COOKIE_BITS):032x}"


def draw_token_digits(length: int, rng: random.Random | None = None) -> str:
    """Uniform decimal token of exactly `length` digits (leading zeros allowed)."""
    if not MIN_TOKEN_LENGTH <= length <= MAX_TOKEN_LENGTH:
        raise ValueError(f"token length must be in [{MIN_TOKEN_LENGTH}, {MAX_TOKEN_LENGTH}]")
    bound = 10**length
    n = secrets.randbelow(bound) if rng is None else rng.randrange(bound)
    return f"{n:0{length}d}"


class SessionStore:
    """Thread-safe session registry with token and cookie indexes.

    Sessions expire `ttl_s` after creation; expiry is applied lazily on
    every lookup so dead tokens can never resolve. An optional seeded rng
    makes every generated id, cookie and token reproducible.
    """

    def __init__(
        self,
        server_domain: DomainName,
        *,
        rng: random.Random | None = None,
        clock: Callable[[], float] | None = None,
        ttl_s: float = DEFAULT_TTL_S,
        retake_cap: int = DEFAULT_RETAKE_CAP,
        lookup_rate_limit: int = DEFAULT_LOOKUP_RATE_LIMIT,
    ):
        if ttl_s <= 0:
            raise ValueError("ttl_s must be positive")
        if retake_cap < 0:
            raise ValueError("retake_cap must be non-negative")
        self.server_domain = server_domain
        self.ttl_s = ttl_s
        self.retake_cap = retake_cap
        self.lookup_rate_limit = lookup_rate_limit
        self._rng = rng
        self._clock = clock if clock is not None else time.monotonic
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._token_index: dict[str, str] = {}
        self._cookie_index: dict[str, str] = {}
        self._lookup_windows: dict[str, tuple[float, int]] = {}

    # -- internal helpers, caller must hold the lock --

    def _expire_locked(self, now: float) -> None:
        dead = [sid for sid, s in self._sessions.items() if now - s.created_at > self.ttl_s]
        for sid in dead:
            s = self._sessions.pop(sid)
            if s.token is not None:
                self._token_index.pop(s.token.digits, None)
            self._cookie_index.pop(s.cookie.value, None)

    def _replace_locked(self, session: Session, **changes) -> Session:
        updated = replace(session, **changes)
        self._sessions[updated.id] = updated
        return updated

    def _get_locked(self, session_id: str, now: float) -> Session:
        self._expire_locked(now)
        session = self._sessions.get(session_id)
        if session is None:
            raise InvalidState(f"no live session {session_id!r}")
        return session

    def _check_transition(self, session: Session, target: SessionState) -> None:
        if target not in _TRANSITIONS[session.state]:
            raise InvalidState(f"cannot move {session.state.value} -> {target.value}")

    # -- public API --

    def create_session(
        self,
        username: str,
        preference: Preference,
        *,
        source: str | None = None,
        channel: Channel | None = None,
    ) -> Session:
        if not username:
            raise ValueError("username must be non-empty")
        now = self._clock()
        with self._lock:
            self._expire_locked(now)
            while True:
                sid = draw_cookie_value(self._rng)
                if sid not in self._sessions:
                    break
            while True:
                cookie_value = draw_cookie_value(self._rng)
                if cookie_value not in self._cookie_index:
                    break
            session = Session(
                id=sid,
                username=username,
                cookie=Cookie(value=cookie_value, origin=self.server_domain),
                token=None,
                preference=preference,
                state=SessionState.CREDENTIALS_OK,
                retakes=0,
                created_at=now,
                login_source=source,
                login_channel=channel,
            )
            self._sessions[sid] = session
            self._cookie_index[cookie_value] = sid
            return session

    def issue_short_link(self, session_id: str, length: int = DEFAULT_TOKEN_LENGTH) -> Session:
        """Attach a fresh token, moving the session to LINK_SENT.

        The token is unique among live sessions; a collision with one is
        redrawn, never reused.
        """
        now = self._clock()
        with self._lock:
            session = self._get_locked(session_id, now)
            self._check_transition(session, SessionState.LINK_SENT)
            while True:
                digits = draw_token_digits(length, self._rng)
                if digits not in self._token_index:
                    break
            token = ShortLinkToken(digits)
            self._token_index[digits] = session_id
            return self._replace_locked(session, token=token, state=SessionState.LINK_SENT)

    def resolve_token(self, digits: str, *, source: str | None = None) -> Session | None:
        """Look up the live session behind a token, rate limited per source."""
        now = self._clock()
        with self._lock:
            if source is not None:
                window_start, count = self._lookup_windows.get(source, (now, 0))
                if now - window_start >= 1.0:
                    window_start, count = now, 0
                count += 1
                self._lookup_windows[source] = (window_start, count)
                if count > self.lookup_rate_limit:
                    raise RateLimited(f"token lookups from {source!r} exceed "
                                      f"{self.lookup_rate_limit}/s")
            self._expire_locked(now)
            sid = self._token_index.get(digits)
            return self._sessions.get(sid) if sid is not None else None

    def get(self, session_id: str) -> Session | None:
        now = self._clock()
        with self._lock:
            self._expire_locked(now)
            return self._sessions.get(session_id)

    def find_by_cookie(self, cookie_value: str) -> Session | None:
        now = self._clock()
        with self._lock:
            self._expire_locked(now)
            sid = self._cookie_index.get(cookie_value)
            return self._sessions.get(sid) if sid is not None else None

    def mark_awaiting_photo(self, session_id: str) -> Session:
        now = self._clock()
        with self._lock:
            session = self._get_locked(session_id, now)
            if session.state is SessionState.AWAITING_PHOTO:
                return session
            self._check_transition(session, SessionState.AWAITING_PHOTO)
            return self._replace_locked(session, state=SessionState.AWAITING_PHOTO)

    def authorize(self, session_id: str) -> Session:
        now = self._clock()
        with self._lock:
            session = self._get_locked(session_id, now)
            self._check_transition(session, SessionState.AUTHORIZED)
            return self._replace_locked(session, state=SessionState.AUTHORIZED)

    def deny(self, session_id: str) -> Session:
        now = self._clock()
        with self._lock:
            session = self._get_locked(session_id, now)
            self._check_transition(session, SessionState.DENIED)
            return self._replace_locked(session, state=SessionState.DENIED)

    def record_retake(self, session_id: str, reason: str) -> Session:
        """Count one failed photo; past the cap the session falls back.

        A retake caused by multiple detected address bars marks the
        session as phishing-warned.
        """
        now = self._clock()
        with self._lock:
            session = self._get_locked(session_id, now)
            if session.state is not SessionState.AWAITING_PHOTO:
                raise InvalidState(f"retake requires awaiting-photo, session is {session.state.value}")
            retakes = session.retakes + 1
            warned = session.phishing_warned or reason == "multiple-addrbars"
            target = (
                SessionState.FALLBACK_OFFERED
                if retakes > self.retake_cap
                else SessionState.AWAITING_PHOTO
            )
            self._check_transition(session, target)
            return self._replace_locked(
                session, retakes=retakes, phishing_warned=warned, state=target
            )

    def live_count(self) -> int:
        now = self._clock()
        with self._lock:
            self._expire_locked(now)
            return len(self._sessions)

    def check_token_index(self) -> bool:
        """True when the token index maps exactly the live tokened sessions, 1:1."""
        with self._lock:
            tokened = {s.token.digits: sid for sid, s in self._sessions.items() if s.token}
            return tokened == self._token_index
