"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math

# Absolute guard applied before rounding fraction * count products. Decimal
# parameters such as 0.02 or 0.95 are not exactly representable, so the raw
# product can land an ulp above or below the intended integer; desk-scale
# counts keep the true error far below this guard.
_GUARD = 1e-9


def stable_ceil(x: float) -> int:
    """Ceiling that treats values within 1e-9 of an integer as that integer."""
    return math.ceil(x - _GUARD)


def stable_floor(x: float) -> int:
    """Floor that treats values within 1e-9 of an integer as that integer."""
    return math.floor(x + _GUARD)
