# Numba is used when importable unless DRIFTLASSO_DISABLE_NUMBA is set to a
# truthy value; the flag is read once, at import time.
import logging
import os

logger = logging.getLogger(__name__)

_FLAG = os.environ.get("DRIFTLASSO_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

if HAVE_NUMBA:
    njit = numba.njit
else:  # pragma: no cover

    def njit(pyfunc=None, **kwargs):
        """Null decorator used when numba cannot be imported."""

        def wrap(func):
            return func

        return wrap if pyfunc is None else wrap(pyfunc)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
