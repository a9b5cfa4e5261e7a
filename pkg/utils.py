import os
import json
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = 'LAB_THREADS'
TOL_ENV = 'LAB_TOL'
DEFAULT_TOL = 1e-10


def load_dotenv(path='.env'):
    """Load KEY=VALUE lines from a .env file without overriding the environment."""
    if not os.path.exists(path):
        return
    with open(path, encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith('#') and '=' in line:
                key, value = line.split('=', 1)
                os.environ.setdefault(key.strip(), value.strip().strip('"').strip("'"))


def parse_int(value, default=None):
    """Parse an integer, returning default on blank or malformed input."""
    if value is None or str(value).strip() == '':
        return default
    try:
        return int(str(value).strip())
    except (ValueError, TypeError):
        return default


def parse_float(value, default=None):
    """Parse a float, returning default on blank or malformed input."""
    if value is None or str(value).strip() == '':
        return default
    try:
        return float(str(value).strip())
    except (ValueError, TypeError):
        return default


def resolve_workers(threads=None):
    """Worker count from --threads, then LAB_THREADS, then 1."""
    if threads is not None:
        workers = threads
    else:
        raw = os.environ.get(THREADS_ENV)
        workers = parse_int(raw, default=1)
        if raw and parse_int(raw) is None:
            logging.warning('Ignoring malformed %s=%r, running single-threaded', THREADS_ENV, raw)
    return max(1, int(workers))


def resolve_tol(tol=None):
    """Certificate tolerance from --tol, then LAB_TOL, then 1e-10."""
    if tol is not None:
        return float(tol)
    raw = os.environ.get(TOL_ENV)
    value = parse_float(raw, default=DEFAULT_TOL)
    if raw and parse_float(raw) is None:
        logging.warning('Ignoring malformed %s=%r', TOL_ENV, raw)
    return value


def pairwise_sum(values):
    """Sum a 1-D array by a fixed binary tree (pairs of neighbours, then pairs of those).

    The result depends only on the array, never on how it was produced, so
    partial sums computed by any number of workers reduce identically.
    """
    a = np.asarray(values)
    if a.size == 0:
        return a.dtype.type(0)
    a = a.copy()
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, a.dtype.type(0))
        a = a[0::2] + a[1::2]
    return a[0]


def parallel_map(func, items, workers=1):
    """map() that keeps input order; threads when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def digest(data):
    """sha256 hex digest of the canonical JSON form of data."""
    return hashlib.sha256(canonical_json(data).encode('utf-8')).hexdigest()


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def log_grid(lo, hi, points_per_decade):
    """Logarithmic grid from lo to hi inclusive with the given density."""
    decades = np.log10(hi) - np.log10(lo)
    count = int(round(decades * points_per_decade)) + 1
    if count < 2:
        return np.array([float(lo)])
    return np.logspace(np.log10(lo), np.log10(hi), count)
