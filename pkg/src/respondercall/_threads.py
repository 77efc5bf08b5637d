"""Worker-count resolution shared by the batch entry points.

Parallel sections are deterministic by construction (ordered inputs,
per-task RNG substreams, ordered reduction), so the worker count only
affects wall time, never results.
"""

from __future__ import annotations

import os

ENV_VAR = "RESPONDER_THREADS"


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get(ENV_VAR, "").strip()
    if raw:
        try:
            limit = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
        limit = max(1, limit)
    else:
        limit = min(4, os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))
