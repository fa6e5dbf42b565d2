"""Authentication decision engine.

Implements the full login flow:

  request with the cookie of an authorized session  -> authorize
  request with a malformed cookie                   -> bad request
  request without a usable cookie                   -> create session,
        send a short link to the user's phone (SMS, push or email all
        carry the same link)
  link click colocated with the login               -> authorize
  link click from elsewhere                         -> require a photo
  photo matches an accepted domain                  -> authorize
  photo shows another domain                        -> deny, phishing
  photo unreadable or showing two address bars      -> retake, capped
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .domain import DomainName
from .session import (
    Channel,
    DEFAULT_TOKEN_LENGTH,
    InvalidState,
    Preference,
    Session,
    SessionState,
    SessionStore,
    cookie_value_well_formed,
)
from .verify import (
    PhotoAnalysis,
    RETAKE_MULTIPLE_ADDRBARS,
    VerdictKind,
    VerifyConfig,
    verify_photo,
)

REASON_UNKNOWN_TOKEN = "unknown-token"
REASON_PHISHING = "phishing-detected"
REASON_SESSION_DENIED = "session-denied"

SAME_BROWSER_HINT = "open the link in the browser used to sign in"


class UnknownUser(Exception):
    """Raised for login attempts with an unregistered username."""


class ColocationMode(Enum):
    COOKIE_EQUALITY = "cookie"
    IP_EQUALITY = "ip"
    SAME_NETWORK = "same-network"


@dataclass(frozen=True)
class ColocationPolicy:
    """How the server decides the link click came from the login device."""

    mode: ColocationMode = ColocationMode.COOKIE_EQUALITY
    prefix_len: int = 24

    def __post_init__(self):
        if not 0 <= self.prefix_len <= 128:
            raise ValueError(f"prefix_len must be in [0, 128], got {self.prefix_len}")


@dataclass(frozen=True)
class AuthRequest:
    username: Optional[str]
    presented_cookie: Optional[str]
    source_address: str
    channel: Channel = Channel.PC_BROWSER


@dataclass(frozen=True)
class LinkClick:
    token_digits: str
    presented_cookie: Optional[str]
    source_address: str


class DecisionKind(Enum):
    AUTHORIZE = "authorize"
    LINK_SENT = "link-sent"
    REQUIRE_PHOTO = "require-photo"
    REQUEST_RETAKE = "request-retake"
    DENY = "deny"
    FALLBACK = "fallback"
    BAD_REQUEST = "bad-request"


@dataclass(frozen=True)
class AuthDecision:
    kind: DecisionKind
    reason: Optional[str] = None
    session_id: Optional[str] = None
    link: Optional[str] = None
    message: Optional[str] = None
    warning: bool = False
    retakes_left: Optional[int] = None


@dataclass(frozen=True)
class Notification:
    """Short-link message delivered to the account's registered phone."""

    username: str
    preference: Preference
    link: str
    session_id: str


def _same_network(a: str, b: str, prefix_len: int) -> bool:
    try:
        net_a = ipaddress.ip_network(f"{a}/{prefix_len}", strict=False)
        net_b = ipaddress.ip_network(f"{b}/{prefix_len}", strict=False)
    except ValueError:
        return False
    return net_a == net_b


class AuthEngine:
    """Binds the session store, user registry and verifier into one flow.

    Notifications are appended to `outbox`; the transport that drains it
    (SMS, push, email) is outside the engine and carries the same link
    either way.
    """

    def __init__(
        self,
        store: SessionStore,
        users: dict[str, Preference],
        accept_set: Iterable[DomainName],
        *,
        policy: ColocationPolicy = ColocationPolicy(),
        verify_cfg: VerifyConfig = VerifyConfig(),
        token_length: int = DEFAULT_TOKEN_LENGTH,
        outbox: list[Notification] | None = None,
    ):
        self.store = store
        self.users = dict(users)
        self.accept_set = frozenset(accept_set)
        self.policy = policy
        self.verify_cfg = verify_cfg
        self.token_length = token_length
        self.outbox = outbox if outbox is not None else []

    # -- flow steps --

    def handle_auth_request(self, request: AuthRequest) -> AuthDecision:
        """First contact: cookie shortcut, else start a new session."""
        cookie = request.presented_cookie
        if cookie is not None:
            if not cookie_value_well_formed(cookie):
                return AuthDecision(DecisionKind.BAD_REQUEST, reason="malformed-cookie")
            session = self.store.find_by_cookie(cookie)
            if session is not None and session.state is SessionState.AUTHORIZED:
                return AuthDecision(DecisionKind.AUTHORIZE, session_id=session.id)
            # Well-formed but not an authorized session: treat as a fresh login.

        if not request.username:
            return AuthDecision(DecisionKind.BAD_REQUEST, reason="missing-username")
        preference = self.users.get(request.username)
        if preference is None:
            raise UnknownUser(request.username)

        session = self.store.create_session(
            request.username,
            preference,
            source=request.source_address,
            channel=request.channel,
        )
        session = self.store.issue_short_link(session.id, self.token_length)
        assert session.token is not None
        link = session.token.link(self.store.server_domain)
        self.outbox.append(
            Notification(
                username=session.username,
                preference=preference,
                link=link,
                session_id=session.id,
            )
        )
        return AuthDecision(DecisionKind.LINK_SENT, session_id=session.id, link=link)

    def _colocated(self, click: LinkClick, session: Session) -> bool:
        mode = self.policy.mode
        if mode is ColocationMode.COOKIE_EQUALITY:
            return click.presented_cookie == session.cookie.value
        if mode is ColocationMode.IP_EQUALITY:
            return (
                session.login_source is not None
                and click.source_address == session.login_source
            )
        if session.login_source is None:
            return False
        return _same_network(click.source_address, session.login_source, self.policy.prefix_len)

    def handle_link_click(self, click: LinkClick) -> AuthDecision:
        """Short-link visit: skip the photo when the click is colocated."""
        session = self.store.resolve_token(click.token_digits, source=click.source_address)
        if session is None:
            return AuthDecision(DecisionKind.DENY, reason=REASON_UNKNOWN_TOKEN)
        if session.state is SessionState.AUTHORIZED:
            # Replayed click on a finished session changes nothing.
            return AuthDecision(DecisionKind.AUTHORIZE, session_id=session.id)
        if session.state is SessionState.DENIED:
            return AuthDecision(
                DecisionKind.DENY, reason=REASON_SESSION_DENIED, session_id=session.id
            )
        if session.state is SessionState.FALLBACK_OFFERED:
            return AuthDecision(DecisionKind.FALLBACK, session_id=session.id, warning=True)
        if session.state is SessionState.AWAITING_PHOTO:
            return AuthDecision(DecisionKind.REQUIRE_PHOTO, session_id=session.id)

        if self._colocated(click, session):
            self.store.authorize(session.id)
            return AuthDecision(DecisionKind.AUTHORIZE, session_id=session.id)
        self.store.mark_awaiting_photo(session.id)
        hint = None
        if (
            self.policy.mode is ColocationMode.COOKIE_EQUALITY
            and session.login_channel is Channel.PHONE_BROWSER
        ):
            # The login came from a phone browser; the click arrived from a
            # different one, otherwise the cookie would have matched.
            hint = SAME_BROWSER_HINT
        return AuthDecision(DecisionKind.REQUIRE_PHOTO, session_id=session.id, message=hint)

    def handle_photo_submission(
        self, token_digits: str, analysis: PhotoAnalysis, *, source: str | None = None
    ) -> AuthDecision:
        """Photo upload for a pending session.

        Raises:
            InvalidState: the session exists but is not awaiting a photo.
        """
        session = self.store.resolve_token(token_digits, source=source)
        if session is None:
            return AuthDecision(DecisionKind.DENY, reason=REASON_UNKNOWN_TOKEN)
        if session.state is not SessionState.AWAITING_PHOTO:
            raise InvalidState(
                f"photo submitted while session is {session.state.value}"
            )

        result = verify_photo(analysis, self.accept_set, self.verify_cfg)
        if result.kind is VerdictKind.MATCH:
            self.store.authorize(session.id)
            return AuthDecision(DecisionKind.AUTHORIZE, session_id=session.id)
        if result.kind is VerdictKind.MISMATCH:
            self.store.deny(session.id)
            found = str(result.found) if result.found else "unknown"
            return AuthDecision(
                DecisionKind.DENY,
                reason=REASON_PHISHING,
                session_id=session.id,
                message=f"photographed address bar shows {found}",
                warning=True,
            )

        assert result.reason is not None
        updated = self.store.record_retake(session.id, result.reason)
        if updated.state is SessionState.FALLBACK_OFFERED:
            return AuthDecision(
                DecisionKind.FALLBACK,
                session_id=session.id,
                warning=updated.phishing_warned,
            )
        return AuthDecision(
            DecisionKind.REQUEST_RETAKE,
            reason=result.reason,
            session_id=session.id,
            warning=result.reason == RETAKE_MULTIPLE_ADDRBARS,
            retakes_left=self.store.retake_cap - updated.retakes,
        )
