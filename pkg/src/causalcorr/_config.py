"""Size guards and environment switches."""

import os

DEFAULT_MAX_STATE_SPACE = 1 << 24
DEFAULT_MAX_PUSHBACK_ALPHABET = 1 << 20
DEFAULT_MAX_WIRE_DIM = 1 << 12
DEFAULT_MAX_STRATEGIES = 10**6
DEFAULT_MAX_PAIR_NODES = 14


def max_state_space(override=None):
    """Effective state-space guard; CC_MAX_STATE_SPACE takes precedence over the default."""
    if override is not None:
        return int(override)
    env = os.environ.get("CC_MAX_STATE_SPACE")
    if env is not None:
        return int(env)
    return DEFAULT_MAX_STATE_SPACE


def numba_disabled():
    """True when the CC_NO_NUMBA flag requests the pure-numpy kernel paths."""
    return os.environ.get("CC_NO_NUMBA", "").strip() not in ("", "0")
