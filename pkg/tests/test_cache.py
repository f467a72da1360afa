from elastoscatter.services.cache_service import CacheService


def test_get_and_set_track_hits_and_misses():
    cache = CacheService(max_entries=4)
    assert cache.get("grid_kernels", n=8) is None
    cache.set("grid_kernels", "value", n=8)
    assert cache.get("grid_kernels", n=8) == "value"
    stats = cache.get_stats()
    assert stats["hits"] == 1
    assert stats["misses"] == 1
    assert stats["entries_by_prefix"] == {"grid_kernels": 1}


def test_oldest_entries_are_evicted():
    cache = CacheService(max_entries=2)
    for n in (4, 8, 16):
        cache.set("grid_kernels", n, n=n)
    assert cache.get("grid_kernels", n=4) is None
    assert cache.get("grid_kernels", n=16) == 16
    assert cache.get_stats()["total_entries"] == 2


def test_recently_used_entry_survives_eviction():
    cache = CacheService(max_entries=2)
    cache.set("grid_kernels", "a", n=4)
    cache.set("grid_kernels", "b", n=8)
    cache.get("grid_kernels", n=4)
    cache.set("grid_kernels", "c", n=16)
    assert cache.get("grid_kernels", n=4) == "a"
    assert cache.get("grid_kernels", n=8) is None


def test_clear_by_prefix():
    cache = CacheService(max_entries=8)
    cache.set("grid_kernels", 1, n=4)
    cache.set("other", 2, n=4)
    cache.clear("grid_kernels")
    assert cache.get_stats()["entries_by_prefix"] == {"other": 1}


def test_grid_kernel_helpers_key_on_alpha():
    cache = CacheService()
    medium_key = {"lambda": 2.0, "mu": 1.0, "omega": 2.0}
    cache.set_grid_kernels(medium_key, 4.0, 16, (0.0, 0.1), data="km")
    assert cache.get_grid_kernels(medium_key, 4.0, 16, (0.0, 0.1)) == "km"
    assert cache.get_grid_kernels(medium_key, 4.0, 16, (0.0, 0.2)) is None
