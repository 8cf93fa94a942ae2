"""Thread-count control shared by the grid, fold and bootstrap loops."""

import os


def thread_count():
    """Worker threads allowed by ``CODA_THREADS`` (default 1)."""
    raw = os.environ.get("CODA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
