"""Kernel backend selection.

The compiled extension is used when importable; ``MEQA_BACKEND=python``
forces the numpy fallback. ``MEQA_THREADS`` sets the default worker count.
"""

import os

if os.environ.get("MEQA_BACKEND", "").lower() == "python":
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND


def resolve_threads(threads=None) -> int:
    if threads is None:
        env = os.environ.get("MEQA_THREADS", "").strip()
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def chunked(n_items, threads):
    """Split ``range(n_items)`` into ``threads`` contiguous, ordered slices."""
    threads = max(1, min(threads, n_items)) if n_items else 1
    bounds = [n_items * i // threads for i in range(threads + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(threads)]


def run_chunks(func, n_items, threads=None):
    """Apply ``func(index_range)`` to ordered chunks; results keep chunk order."""
    threads = resolve_threads(threads)
    chunks = chunked(n_items, threads)
    if len(chunks) == 1:
        return [func(chunks[0])]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(func, chunks))
