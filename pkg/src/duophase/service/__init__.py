"""HTTP service exposing the experiment runner.

The FastAPI app in :mod:`duophase.service.app` wraps
:func:`duophase.experiments.run_operation` so remote clients get exactly
the in-process behavior: file contents come back in the response body and
the exit code travels as data, never as an HTTP error.
"""

from .app import app, create_app

__all__ = ["app", "create_app"]
