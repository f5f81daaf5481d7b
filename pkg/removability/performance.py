"""
Performance utilities for the removability toolkit.
"""

import hashlib
import logging
import time
from functools import wraps

from django.core.cache import cache

logger = logging.getLogger(__name__)


def log_runtime(threshold=5.0):
    """
    Decorator logging the runtime of expensive numerical routines.

    Args:
        threshold: Seconds above which the call is logged as a warning
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(f"Error in {func.__name__}: {str(e)}")
                raise
            execution_time = time.perf_counter() - start_time
            if execution_time > threshold:
                logger.warning(
                    f"Slow call {func.__name__}: {execution_time:.2f}s",
                    extra={'function': func.__name__, 'seconds': execution_time},
                )
            else:
                logger.debug(f"{func.__name__} finished in {execution_time:.3f}s")
            return result

        return wrapper
    return decorator


def cache_key(prefix, *parts):
    """Build a stable cache key from the repr of hashable arguments."""
    digest = hashlib.sha1(repr(parts).encode('utf-8')).hexdigest()
    return f"removability:{prefix}:{digest}"


def cache_result(timeout=None):
    """
    Decorator to cache results of pure functions in the Django cache.

    Arguments must have a deterministic repr (frozen dataclasses, numbers,
    tuples). The cache backend pickles values, so numpy arrays are fine.

    Args:
        timeout: Cache timeout in seconds (None keeps entries until evicted)
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            key = cache_key(func.__qualname__, args, tuple(sorted(kwargs.items())))
            result = cache.get(key)
            if result is not None:
                return result
            result = func(*args, **kwargs)
            cache.set(key, result, timeout)
            return result

        return wrapper
    return decorator
