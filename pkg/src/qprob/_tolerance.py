import os

#: Conditioning events at or below this probability are rejected.
ZERO_CONDITION = 1e-14


def scale():
    """Uniform tolerance multiplier read from ``QPROB_TOLERANCE_SCALE`` (>= 1)."""
    raw = os.environ.get("QPROB_TOLERANCE_SCALE", "1")
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"QPROB_TOLERANCE_SCALE must be a float, got {raw!r}") from None
    if not value >= 1.0:
        raise ValueError(f"QPROB_TOLERANCE_SCALE must be >= 1, got {value}")
    return value


def tol(base):
    return base * scale()
