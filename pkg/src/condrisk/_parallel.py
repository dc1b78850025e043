import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "CONDRISK_THREADS"


def thread_cap():
    raw = os.environ.get(ENV_VAR, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


def map_blocks(fn, n_blocks):
    """[fn(k) for k in range(n_blocks)], optionally on a thread pool; order is preserved."""
    workers = min(thread_cap(), n_blocks)
    if workers <= 1:
        return [fn(k) for k in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_blocks)))
