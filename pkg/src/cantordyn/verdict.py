"""A boolean check result that carries its reason."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Verdict:
    """Outcome of a checker.

    Truthiness follows ``ok``, so ``if check(...)`` reads naturally while the
    failure reason and an optional witness stay available.
    """

    ok: bool
    reason: str | None = None
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def fail(cls, reason: str, witness=None) -> "Verdict":
        return cls(False, reason, witness)


PASS = Verdict(True)
