"""Bundled example cases built from the published Northeast dataset.

* ``northeast_mini``: two zones, one representative week at 8-hour
  resolution, gas trucks only.  Small enough for the built-in solver,
  including the integer truck variant.
* ``northeast6``: the full six-zone network with the published inter-zone
  distances and average demands, one representative week, hourly.  Sized
  for the MPS export path; the built-in solver is not the tool for it.

Electricity price and refuelling profiles are synthetic stand-ins with a
documented shape (the published profiles are not tabulated); regenerate
with scripts/make_cases.py.
"""

from pathlib import Path

_ROOT = Path(__file__).parent

CASES = ("northeast_mini", "northeast6")


def case_path(name: str) -> Path:
    """Directory of a bundled case, usable with :func:`hsc_plan.caseio.load_case`."""
    if name not in CASES:
        raise KeyError(f"unknown bundled case {name!r}; have {CASES}")
    return _ROOT / name
