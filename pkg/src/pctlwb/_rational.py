"""Exact rational arithmetic backend.

Everything in this package computes with exact rationals; no floats
anywhere.  Two interchangeable backends are supported:

* ``gmpy2.mpq`` (default when gmpy2 is installed) -- considerably faster
  on the large linear systems the model checker solves;
* ``fractions.Fraction`` -- pure stdlib fallback.

Set ``PCTLWB_RATIONAL=fractions`` (or ``gmpy2``) to force a backend.
Both produce identical results; ``benchmarks/bench_rational.py`` compares
their speed.  Values of the two backends compare and hash equal, so mixing
them (e.g. hypothesis generates Fraction) is safe.
"""

import os
from fractions import Fraction

_REQUESTED = os.environ.get("PCTLWB_RATIONAL", "").strip().lower()

if _REQUESTED in ("", "gmpy2", "gmp"):
    try:
        from gmpy2 import mpq as Rat

        BACKEND = "gmpy2"
    except ImportError:
        if _REQUESTED:
            raise
        Rat = Fraction
        BACKEND = "fractions"
elif _REQUESTED in ("fraction", "fractions", "stdlib"):
    Rat = Fraction
    BACKEND = "fractions"
else:
    raise ValueError(f"unknown PCTLWB_RATIONAL backend {_REQUESTED!r}")

ZERO = Rat(0)
ONE = Rat(1)


def rat_from_text(text):
    """Parse 'p' or 'p/q' into an exact rational (no signs, no floats)."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        if not (num.strip().isdigit() and den.strip().isdigit()):
            raise ValueError(f"malformed rational {text!r}")
        if int(den) == 0:
            raise ValueError(f"zero denominator in rational {text!r}")
        return Rat(int(num), int(den))
    if not text.isdigit():
        raise ValueError(f"malformed rational {text!r}")
    return Rat(int(text))


def rat_to_text(value):
    """Reduced 'p/q' (or bare 'p' when integral); both backends agree."""
    return str(value)
