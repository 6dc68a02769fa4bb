"""Backend selection: compiled core when available, numpy fallback otherwise.

Set ``IGROUP_BACKEND=python`` to force the fallback, or
``IGROUP_BACKEND=compiled`` to fail loudly if the extension is missing.
"""

import os

_requested = os.environ.get("IGROUP_BACKEND", "").strip().lower()

if _requested in ("python", "py", "fallback"):
    from . import _core_py as _impl

    ACTIVE = "python"
elif _requested in ("", "auto", "compiled", "c"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        ACTIVE = "compiled"
    except ImportError:
        if _requested in ("compiled", "c"):
            raise
        from . import _core_py as _impl

        ACTIVE = "python"
else:
    raise ValueError(f"unknown IGROUP_BACKEND value {_requested!r}")

dtw_cost_len = _impl.dtw_cost_len
loo_cv_error = _impl.loo_cv_error
nw_estimates = _impl.nw_estimates


def backend_name() -> str:
    """Name of the active compute backend ('compiled' or 'python')."""
    return ACTIVE
