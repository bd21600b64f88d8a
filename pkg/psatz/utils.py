"""
Utility functions shared by the drivers and the command line
"""

import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .config import MAX_WORKERS

logger = logging.getLogger(__name__)


def first_success(items: Sequence[Any], fn: Callable[[Any], Any], is_success: Callable[[Any], bool],
                  workers: Optional[int] = None) -> Tuple[Optional[int], List[Any]]:
    """Run fn over items and return the index of the first success in item order.

    Sequential runs stop at the first success. Parallel runs evaluate every item and
    still report the earliest success, so the answer never depends on completion order.
    """
    workers = MAX_WORKERS if workers is None else workers
    outcomes: List[Any] = []

    if workers <= 1 or len(items) <= 1:
        for i, item in enumerate(items):
            outcome = fn(item)
            outcomes.append(outcome)
            if is_success(outcome):
                return i, outcomes
        return None, outcomes

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, items))
    for i, outcome in enumerate(results):
        outcomes.append(outcome)
        if is_success(outcome):
            return i, outcomes
    return None, outcomes


def format_file_size(size_bytes: float) -> str:
    """Format file size in human-readable format"""
    if size_bytes == 0:
        return "0B"

    size_names = ["B", "KB", "MB", "GB", "TB"]
    i = 0
    while size_bytes >= 1024 and i < len(size_names) - 1:
        size_bytes = size_bytes / 1024.0
        i += 1

    return f"{size_bytes:.1f}{size_names[i]}"


def format_duration(seconds: float) -> str:
    """Format duration in human-readable format"""
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    elif seconds < 60:
        return f"{seconds:.2f}s"
    minutes = int(seconds // 60)
    return f"{minutes}m {seconds - 60 * minutes:.0f}s"


def get_system_info() -> Dict[str, Any]:
    """Get basic system information for report files"""
    import psutil

    try:
        return {
            'platform': platform.system(),
            'python_version': platform.python_version(),
            'cpu_count': psutil.cpu_count(),
            'memory_total': format_file_size(psutil.virtual_memory().total),
            'memory_available': format_file_size(psutil.virtual_memory().available),
        }
    except Exception as e:
        logger.error(f"Error getting system info: {e}")
        return {'error': 'Unable to retrieve system information'}
