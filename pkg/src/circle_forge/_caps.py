"""Enumeration budgets shared by every exact counter."""

from __future__ import annotations

DEFAULT_CAP = 10**9

_cap = DEFAULT_CAP


class CapExceeded(RuntimeError):
    """Raised when an enumeration would exceed the configured iteration budget."""

    def __init__(self, what: str, estimate: int, cap: int):
        self.what = what
        self.estimate = int(estimate)
        self.cap = int(cap)
        super().__init__(f"{what}: estimated {self.estimate} iterations exceeds cap {self.cap}")


def get_cap() -> int:
    return _cap


def set_cap(cap: int) -> None:
    global _cap
    if cap < 1:
        raise ValueError("cap must be positive")
    _cap = int(cap)


def check(what: str, estimate: int, cap: int | None = None) -> None:
    limit = _cap if cap is None else cap
    if estimate > limit:
        raise CapExceeded(what, estimate, limit)
