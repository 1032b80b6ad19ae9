"""Kernel backend selection.

The compiled extension is used when present; otherwise the pure-Python
fallback takes over.  ``STAGEOPT_BACKEND=pure`` forces the fallback, which
is mainly useful for the benchmark comparing both.
"""

from __future__ import annotations

import os

if os.environ.get("STAGEOPT_BACKEND", "").lower() == "pure":
    from stageopt import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from stageopt import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from stageopt import _pure as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

ipa_assign = _impl.ipa_assign
raa_path_walk = _impl.raa_path_walk
bruteforce_placement = _impl.bruteforce_placement
