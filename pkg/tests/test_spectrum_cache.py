import asyncio

import aiosqlite
import pytest

from sl_spectral.services import spectrum_cache
from sl_spectral.services.nevpair import EntirePair
from sl_spectral.services.spectrum import DiscreteSpectralFunction, Eigenvalue
from sl_utils import config


@pytest.fixture
def cache_db(tmp_path, monkeypatch):
    path = tmp_path / "cache" / "spectrum_cache.db"
    monkeypatch.setattr(config, "SPECTRUM_CACHE_DB_PATH", path)
    asyncio.run(spectrum_cache.init_cache_database())
    return path


def small_spectrum() -> DiscreteSpectralFunction:
    rows = [Eigenvalue(t=0.0, residue_xi=0.5, psi_deriv=2.0, multiplicity_check=1.0),
            Eigenvalue(t=4.115858, residue_xi=1.67299, psi_deriv=-0.3, multiplicity_check=1.0)]
    return DiscreteSpectralFunction(rows, (-1.0, 10.0), contour_count=2.0)


def test_init_creates_database(cache_db):
    assert cache_db.exists()
    stats = asyncio.run(spectrum_cache.get_cache_stats())
    assert stats["total_entries"] == 0
    assert stats["total_eigenvalues"] == 0
    assert stats["retention_days"] == config.SPECTRUM_CACHE_RETENTION_DAYS


def test_save_and_get(cache_db):
    saved = small_spectrum()
    asyncio.run(spectrum_cache.save_spectrum_to_cache("key", saved, "worked"))
    loaded = asyncio.run(spectrum_cache.get_cached_spectrum("key"))
    assert loaded.to_rows() == saved.to_rows()
    assert loaded.window == (-1.0, 10.0)
    assert loaded.contour_count == 2.0
    assert asyncio.run(spectrum_cache.get_cached_spectrum("other")) is None

    stats = asyncio.run(spectrum_cache.get_cache_stats())
    assert stats["total_entries"] == 1
    assert stats["recent_entries"] == 1
    assert stats["total_eigenvalues"] == 2


def test_cache_key_is_deterministic(worked_problem, worked_pair):
    first = spectrum_cache.compute_cache_key(worked_problem, worked_pair, (-1.0, 120.0))
    second = spectrum_cache.compute_cache_key(worked_problem, EntirePair.from_strings("lambda", "-1"), (-1, 120))
    assert first == second
    assert len(first) == 64


def test_cache_key_changes_with_inputs(worked_problem, worked_pair, dirichlet_pair):
    base = spectrum_cache.compute_cache_key(worked_problem, worked_pair, (-1.0, 120.0))
    assert spectrum_cache.compute_cache_key(worked_problem, worked_pair, (-1.0, 100.0)) != base
    assert spectrum_cache.compute_cache_key(worked_problem, dirichlet_pair, (-1.0, 120.0)) != base


def test_clean_old_entries(cache_db):
    asyncio.run(spectrum_cache.save_spectrum_to_cache("fresh", small_spectrum()))
    asyncio.run(spectrum_cache.save_spectrum_to_cache("stale", small_spectrum()))

    async def age(key: str):
        async with aiosqlite.connect(cache_db) as db:
            await db.execute(
                "UPDATE spectrum_cache SET created_at = '2000-01-01 00:00:00' WHERE cache_key = ?", (key,),
            )
            await db.commit()

    asyncio.run(age("stale"))
    assert asyncio.run(spectrum_cache.clean_old_cache_entries()) == 1
    assert asyncio.run(spectrum_cache.get_cached_spectrum("stale")) is None
    assert asyncio.run(spectrum_cache.get_cached_spectrum("fresh")) is not None
    assert asyncio.run(spectrum_cache.clean_old_cache_entries()) == 0
