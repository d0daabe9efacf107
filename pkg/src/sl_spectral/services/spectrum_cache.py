"""Spectrum cache service using SQLite for storing computed discrete spectral functions."""

import json
import logging
from dataclasses import asdict
from datetime import datetime, timedelta, timezone
from typing import Optional

import aiosqlite

from sl_utils import config
from ..core import expr as ex
from ..core.utils import calculate_content_hash, canonical_json
from .nevpair import EntirePair
from .sl_core import Problem
from .spectrum import DiscreteSpectralFunction

logger = logging.getLogger(__name__)


def _utc_days_ago(days: float) -> str:
    """Timestamp in the format of SQLite CURRENT_TIMESTAMP (UTC)."""
    return (datetime.now(timezone.utc) - timedelta(days=days)).strftime("%Y-%m-%d %H:%M:%S")


def compute_cache_key(problem: Problem, pair: EntirePair, window) -> str:
    """
    SHA-256 of the canonical JSON of everything the spectrum depends on.

    Args:
        problem: The Sturm-Liouville problem (coefficients, interval, B, tolerances, knots)
        pair: Right boundary pair
        window: (lo, hi)

    Returns:
        Hex string of SHA-256 hash
    """
    document = {
        "interval": {"a": problem.a, "b": problem.b, "regularity": problem.regularity.value},
        "coefficients": {
            "p": ex.to_source(problem.coeffs.p),
            "q": ex.to_source(problem.coeffs.q),
            "delta": ex.to_source(problem.coeffs.delta),
        },
        "B": problem.B,
        "knots": list(problem.knots),
        "pair": pair.describe(),
        "window": [float(v) for v in window],
        "tolerances": asdict(problem.tolerances),
    }
    return calculate_content_hash(canonical_json(document).encode("utf-8"))


async def init_cache_database():
    """Initialize the spectrum cache database with required tables."""
    config.SPECTRUM_CACHE_DB_PATH.parent.mkdir(parents=True, exist_ok=True)

    async with aiosqlite.connect(config.SPECTRUM_CACHE_DB_PATH) as db:
        await db.execute("""
            CREATE TABLE IF NOT EXISTS spectrum_cache (
                cache_key TEXT PRIMARY KEY,
                result_json TEXT NOT NULL,
                eigenvalue_count INTEGER NOT NULL DEFAULT 0,
                problem_name TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                last_accessed TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        await db.execute("""
            CREATE INDEX IF NOT EXISTS idx_spectrum_created_at ON spectrum_cache(created_at)
        """)
        await db.execute("""
            CREATE INDEX IF NOT EXISTS idx_spectrum_last_accessed ON spectrum_cache(last_accessed)
        """)
        await db.commit()


async def get_cached_spectrum(cache_key: str) -> Optional[DiscreteSpectralFunction]:
    """
    Retrieve a cached spectrum for the given key.

    Returns:
        The cached DiscreteSpectralFunction (t and xi only) if found, None otherwise
    """
    async with aiosqlite.connect(config.SPECTRUM_CACHE_DB_PATH) as db:
        await db.execute("""
            UPDATE spectrum_cache
            SET last_accessed = CURRENT_TIMESTAMP
            WHERE cache_key = ?
        """, (cache_key,))

        cursor = await db.execute("""
            SELECT result_json FROM spectrum_cache WHERE cache_key = ?
        """, (cache_key,))
        result = await cursor.fetchone()
        await db.commit()

    if result:
        logger.info(f"Spectrum cache hit for {cache_key[:12]}")
        return DiscreteSpectralFunction.from_dict(json.loads(result[0]))
    return None


async def save_spectrum_to_cache(cache_key: str, spectrum: DiscreteSpectralFunction, problem_name: Optional[str] = None):
    """
    Save a spectrum to the cache.

    Args:
        cache_key: Key from compute_cache_key
        spectrum: Result to store
        problem_name: Optional file name for debugging
    """
    async with aiosqlite.connect(config.SPECTRUM_CACHE_DB_PATH) as db:
        await db.execute("""
            INSERT OR REPLACE INTO spectrum_cache
            (cache_key, result_json, eigenvalue_count, problem_name)
            VALUES (?, ?, ?, ?)
        """, (cache_key, canonical_json(spectrum.to_dict()), len(spectrum), problem_name))
        await db.commit()


async def clean_old_cache_entries() -> int:
    """
    Remove entries older than SPECTRUM_CACHE_RETENTION_DAYS, and entries not
    accessed for twice that long.

    Returns:
        Number of rows removed
    """
    retention = config.SPECTRUM_CACHE_RETENTION_DAYS
    created_cutoff = _utc_days_ago(retention)
    access_cutoff = _utc_days_ago(retention * 2)
    removed = 0

    async with aiosqlite.connect(config.SPECTRUM_CACHE_DB_PATH) as db:
        for column, cutoff in (("created_at", created_cutoff), ("last_accessed", access_cutoff)):
            cursor = await db.execute(f"DELETE FROM spectrum_cache WHERE {column} < ?", (cutoff,))
            removed += cursor.rowcount
        await db.commit()

    if removed:
        logger.info(f"Cleaned {removed} old spectrum cache entries")
    return removed


async def get_cache_stats() -> dict:
    """
    Get statistics about the spectrum cache.

    Returns:
        Dictionary with cache statistics
    """
    db_path = config.SPECTRUM_CACHE_DB_PATH
    async with aiosqlite.connect(db_path) as db:
        cursor = await db.execute("SELECT COUNT(*), SUM(eigenvalue_count) FROM spectrum_cache")
        total_entries, total_eigenvalues = await cursor.fetchone()

        yesterday = _utc_days_ago(1)
        cursor = await db.execute("""
            SELECT COUNT(*) FROM spectrum_cache WHERE created_at > ?
        """, (yesterday,))
        recent_entries = (await cursor.fetchone())[0]

    db_size_bytes = db_path.stat().st_size if db_path.exists() else 0
    return {
        "total_entries": total_entries,
        "recent_entries": recent_entries,
        "total_eigenvalues": total_eigenvalues or 0,
        "db_size_mb": round(db_size_bytes / (1024 * 1024), 2),
        "retention_days": config.SPECTRUM_CACHE_RETENTION_DAYS,
    }
