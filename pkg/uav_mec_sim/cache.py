"""
Fading Cache Module.

This module provides the per-slot channel cache. Every (device, server, slot) triple draws its
small-scale fading and shadowing once; preference construction, negotiation and execution then
read the same realization. Entries are scoped to their slot and dropped once the clock moves on.

Key Features:
- Thread-safe cache operations with locking mechanism
- Whole-slot batch fill on first miss
- Slot-scoped expiry instead of wall-clock TTL
- Cache statistics and monitoring capabilities
- Helper function for generating consistent cache keys
"""

import logging
from threading import Lock
from typing import Any, Callable

logger = logging.getLogger(__name__)

CacheKey = tuple[int, int, int]


def get_fading_cache_key(md_id: int, server_id: int, slot: int) -> CacheKey:
    """Generate cache key for one link realization."""
    return (md_id, server_id, slot)


class FadingCache:
    """Thread-safe store of per-slot link realizations."""

    def __init__(self, slot_sampler: Callable[[int], dict[tuple[int, int], Any]]):
        """``slot_sampler(slot)`` returns the realization of every (md, server) link of a slot."""
        self._cache: dict[CacheKey, Any] = {}
        self._lock = Lock()
        self._slot_sampler = slot_sampler
        self._filled: set[int] = set()
        self._hit_count = 0
        self._miss_count = 0

    def get(self, md_id: int, server_id: int, slot: int) -> Any:
        """Return the realization for the link, drawing the whole slot on first access."""
        key = get_fading_cache_key(md_id, server_id, slot)
        with self._lock:
            if key in self._cache:
                self._hit_count += 1
                return self._cache[key]
            self._miss_count += 1
            if slot in self._filled:
                raise KeyError(f"No link between MD {md_id} and server {server_id} at slot {slot}")
            for (md, server), value in self._slot_sampler(slot).items():
                self._cache[get_fading_cache_key(md, server, slot)] = value
            self._filled.add(slot)
            logger.debug(f"Fading cache filled for slot {slot}")
            return self._cache[key]

    def clear(self) -> None:
        with self._lock:
            cleared_count = len(self._cache)
            self._cache.clear()
            self._filled.clear()
            logger.debug(f"Fading cache cleared, {cleared_count} items removed")

    def cleanup(self, current_slot: int) -> int:
        """Remove entries of slots before ``current_slot``."""
        with self._lock:
            expired_keys = [key for key in self._cache if key[2] < current_slot]
            for key in expired_keys:
                del self._cache[key]
            self._filled = {slot for slot in self._filled if slot >= current_slot}
            return len(expired_keys)

    def stats(self) -> dict[str, int]:
        with self._lock:
            return {
                "total_items": len(self._cache),
                "slots": len(self._filled),
                "hit_count": self._hit_count,
                "miss_count": self._miss_count,
            }
