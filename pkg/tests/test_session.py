import itertools
import random
import threading

import pytest

from photoauth.domain import extract_hostname
from photoauth.session import (
    Channel,
    InvalidState,
    Preference,
    RateLimited,
    SessionState,
    SessionStore,
    ShortLinkToken,
    cookie_value_well_formed,
    draw_cookie_value,
    draw_token_digits,
)

SERVER = extract_hostname("microsoft.com")


class FakeClock:
    """Manually advanced clock for deterministic TTL and rate-limit tests."""

    def __init__(self, start=1000.0):
        self.t = start

    def __call__(self):
        return self.t

    def advance(self, dt):
        self.t += dt


def make_store(**kwargs):
    kwargs.setdefault("rng", random.Random(7))
    kwargs.setdefault("clock", FakeClock())
    return SessionStore(SERVER, **kwargs)


class TestValues:
    def test_cookie_value_shape(self):
        value = draw_cookie_value()
        assert cookie_value_well_formed(value)
        assert len(value) == 32

    def test_cookie_value_seeded_is_reproducible(self):
        assert draw_cookie_value(random.Random(5)) == draw_cookie_value(random.Random(5))

    @pytest.mark.parametrize("bad", ["", "xyz", "A" * 32, "0" * 31, "0" * 33, "0" * 32 + "\n"])
    def test_malformed_cookie_values(self, bad):
        assert not cookie_value_well_formed(bad)

    def test_token_digits_length_and_charset(self):
        for length in (6, 10, 12):
            digits = draw_token_digits(length, random.Random(3))
            assert len(digits) == length
            assert digits.isdigit()

    @pytest.mark.parametrize("length", [0, 5, 13])
    def test_token_length_bounds(self, length):
        with pytest.raises(ValueError):
            draw_token_digits(length)
        with pytest.raises(ValueError):
            ShortLinkToken("1" * length) if length else ShortLinkToken("")

    def test_token_leading_zeros_kept(self):
        assert ShortLinkToken("0000000042").link(SERVER) == "microsoft.com/c/0000000042"

    def test_token_rejects_non_digits(self):
        with pytest.raises(ValueError):
            ShortLinkToken("12345abcde")


class TestLifecycle:
    def test_create_starts_at_credentials_ok(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS, source="1.2.3.4",
                                 channel=Channel.PC_BROWSER)
        assert s.state is SessionState.CREDENTIALS_OK
        assert s.token is None
        assert s.retakes == 0
        assert s.cookie.origin == SERVER
        assert s.login_source == "1.2.3.4"
        assert s.login_channel is Channel.PC_BROWSER

    def test_issue_link_then_resolve(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        s = store.issue_short_link(s.id)
        assert s.state is SessionState.LINK_SENT
        assert s.token is not None
        found = store.resolve_token(s.token.digits)
        assert found is not None and found.id == s.id

    def test_happy_path_to_authorized(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        s = store.issue_short_link(s.id)
        s = store.mark_awaiting_photo(s.id)
        assert s.state is SessionState.AWAITING_PHOTO
        s = store.authorize(s.id)
        assert s.state is SessionState.AUTHORIZED

    def test_direct_authorize_from_link_sent(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        s = store.issue_short_link(s.id)
        assert store.authorize(s.id).state is SessionState.AUTHORIZED

    def test_transition_matrix(self):
        """Every illegal (state, operation) pair raises InvalidState."""
        ops = {
            "link": lambda st, sid: st.issue_short_link(sid),
            "await": lambda st, sid: st.mark_awaiting_photo(sid),
            "authorize": lambda st, sid: st.authorize(sid),
            "deny": lambda st, sid: st.deny(sid),
            "retake": lambda st, sid: st.record_retake(sid, "unreadable"),
        }
        allowed = {
            SessionState.CREDENTIALS_OK: {"link"},
            SessionState.LINK_SENT: {"await", "authorize"},
            SessionState.AWAITING_PHOTO: {"await", "authorize", "deny", "retake"},
            SessionState.AUTHORIZED: set(),
            SessionState.DENIED: set(),
            SessionState.FALLBACK_OFFERED: set(),
        }

        def put_in_state(store, target):
            s = store.create_session("bob", Preference.SMS)
            if target is SessionState.CREDENTIALS_OK:
                return s
            s = store.issue_short_link(s.id)
            if target is SessionState.LINK_SENT:
                return s
            if target is SessionState.AUTHORIZED:
                return store.authorize(s.id)
            s = store.mark_awaiting_photo(s.id)
            if target is SessionState.AWAITING_PHOTO:
                return s
            if target is SessionState.DENIED:
                return store.deny(s.id)
            for _ in range(store.retake_cap + 1):
                s = store.record_retake(s.id, "unreadable")
            assert s.state is SessionState.FALLBACK_OFFERED
            return s

        for state, op_name in itertools.product(allowed, ops):
            store = make_store()
            s = put_in_state(store, state)
            assert s.state is state
            if op_name in allowed[state]:
                ops[op_name](store, s.id)
            else:
                with pytest.raises(InvalidState):
                    ops[op_name](store, s.id)

    def test_mark_awaiting_is_idempotent(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        store.issue_short_link(s.id)
        store.mark_awaiting_photo(s.id)
        assert store.mark_awaiting_photo(s.id).state is SessionState.AWAITING_PHOTO

    def test_empty_username_rejected(self):
        with pytest.raises(ValueError):
            make_store().create_session("", Preference.SMS)


class TestRetakes:
    def test_fallback_exactly_past_cap(self):
        store = make_store(retake_cap=5)
        s = store.create_session("bob", Preference.SMS)
        store.issue_short_link(s.id)
        store.mark_awaiting_photo(s.id)
        for i in range(1, 6):
            s = store.record_retake(s.id, "unreadable")
            assert s.state is SessionState.AWAITING_PHOTO
            assert s.retakes == i
        s = store.record_retake(s.id, "unreadable")
        assert s.state is SessionState.FALLBACK_OFFERED
        assert s.retakes == 6

    def test_cap_zero_falls_back_immediately(self):
        store = make_store(retake_cap=0)
        s = store.create_session("bob", Preference.SMS)
        store.issue_short_link(s.id)
        store.mark_awaiting_photo(s.id)
        assert store.record_retake(s.id, "unreadable").state is SessionState.FALLBACK_OFFERED

    def test_multiple_addrbars_sets_phishing_flag(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        store.issue_short_link(s.id)
        store.mark_awaiting_photo(s.id)
        s = store.record_retake(s.id, "multiple-addrbars")
        assert s.phishing_warned
        # The flag is sticky across later plain retakes.
        s = store.record_retake(s.id, "unreadable")
        assert s.phishing_warned

    def test_plain_retake_does_not_warn(self):
        store = make_store()
        s = store.create_session("bob", Preference.SMS)
        store.issue_short_link(s.id)
        store.mark_awaiting_photo(s.id)
        assert not store.record_retake(s.id, "unreadable").phishing_warned


class TestExpiry:
    def test_expired_session_vanishes_everywhere(self):
        clock = FakeClock()
        store = make_store(clock=clock, ttl_s=300.0)
        s = store.create_session("bob", Preference.SMS)
        s = store.issue_short_link(s.id)
        clock.advance(301.0)
        assert store.get(s.id) is None
        assert store.resolve_token(s.token.digits) is None
        assert store.find_by_cookie(s.cookie.value) is None
        assert store.live_count() == 0

    def test_session_alive_within_ttl(self):
        clock = FakeClock()
        store = make_store(clock=clock, ttl_s=300.0)
        s = store.create_session("bob", Preference.SMS)
        clock.advance(299.0)
        assert store.get(s.id) is not None

    def test_operations_on_expired_session_raise(self):
        clock = FakeClock()
        store = make_store(clock=clock, ttl_s=10.0)
        s = store.create_session("bob", Preference.SMS)
        clock.advance(11.0)
        with pytest.raises(InvalidState):
            store.issue_short_link(s.id)

    def test_expired_token_frees_digits_for_reuse(self):
        clock = FakeClock()
        store = make_store(clock=clock, ttl_s=10.0)
        s = store.create_session("bob", Preference.SMS)
        s = store.issue_short_link(s.id)
        clock.advance(11.0)
        assert store.resolve_token(s.token.digits) is None
        assert store.check_token_index()

    def test_bad_ttl_rejected(self):
        with pytest.raises(ValueError):
            make_store(ttl_s=0.0)


class TestRateLimit:
    def test_eleventh_lookup_in_one_second_is_limited(self):
        clock = FakeClock()
        store = make_store(clock=clock, lookup_rate_limit=10)
        for _ in range(10):
            store.resolve_token("0" * 10, source="203.0.113.9")
        with pytest.raises(RateLimited):
            store.resolve_token("0" * 10, source="203.0.113.9")

    def test_window_resets_after_one_second(self):
        clock = FakeClock()
        store = make_store(clock=clock, lookup_rate_limit=10)
        for _ in range(10):
            store.resolve_token("0" * 10, source="203.0.113.9")
        clock.advance(1.0)
        store.resolve_token("0" * 10, source="203.0.113.9")

    def test_limit_is_per_source(self):
        clock = FakeClock()
        store = make_store(clock=clock, lookup_rate_limit=10)
        for _ in range(10):
            store.resolve_token("0" * 10, source="203.0.113.9")
        store.resolve_token("0" * 10, source="203.0.113.10")

    def test_unattributed_lookups_not_limited(self):
        store = make_store(lookup_rate_limit=1)
        for _ in range(50):
            store.resolve_token("0" * 10)


class TestUniqueness:
    def test_session_ids_and_cookies_distinct(self):
        store = make_store(ttl_s=1e9)
        seen_ids, seen_cookies = set(), set()
        for i in range(1000):
            s = store.create_session(f"user{i}", Preference.SMS)
            seen_ids.add(s.id)
            seen_cookies.add(s.cookie.value)
        assert len(seen_ids) == 1000
        assert len(seen_cookies) == 1000

    def test_cookie_draws_distinct(self):
        rng = random.Random(11)
        values = {draw_cookie_value(rng) for _ in range(100_000)}
        assert len(values) == 100_000

    def test_token_collision_redraws(self):
        """An rng that repeats its first token forces a redraw, not a clash."""

        class RiggedRandom(random.Random):
            def __init__(self):
                super().__init__(0)
                self.token_calls = 0

            def randrange(self, *args, **kwargs):
                self.token_calls += 1
                if self.token_calls <= 2:
                    return 123456789  # same digits for the first two sessions
                return super().randrange(*args, **kwargs)

        store = SessionStore(SERVER, rng=RiggedRandom(), clock=FakeClock(), ttl_s=1e9)
        a = store.create_session("a", Preference.SMS)
        b = store.create_session("b", Preference.SMS)
        a = store.issue_short_link(a.id)
        b = store.issue_short_link(b.id)
        assert a.token.digits != b.token.digits
        assert store.check_token_index()


class TestConcurrency:
    def test_parallel_sessions_keep_indexes_consistent(self):
        store = SessionStore(SERVER, clock=FakeClock(), ttl_s=1e9)
        errors = []

        def worker():
            try:
                for _ in range(200):
                    s = store.create_session("bob", Preference.SMS)
                    s = store.issue_short_link(s.id)
                    assert store.resolve_token(s.token.digits).id == s.id
                    store.mark_awaiting_photo(s.id)
                    store.record_retake(s.id, "unreadable")
                    store.authorize(s.id)
            except Exception as exc:  # pragma: no cover - failure report
                errors.append(exc)

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert store.live_count() == 8 * 200
        assert store.check_token_index()
