import pytest

from rabiq import checks


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("RABIQ_THREADS", "3")
    assert checks.thread_count() == 3


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv("RABIQ_THREADS", "4")
    assert checks._pmap(lambda x: x * x, list(range(20))) == [x * x for x in range(20)]


def test_grid_covers_criterion_one():
    g = checks.grid_values()
    assert len(g) == 120
    assert min(g) == pytest.approx((0.1, 0.1)) and max(g) == pytest.approx((1.2, 1.0))


def test_unknown_check():
    with pytest.raises(KeyError):
        checks.run_checks([99])


def test_single_check_result():
    (r,) = checks.run_checks([5])
    assert r.id == 5 and r.passed
    assert set(r.metrics) == {"truncates", "truncation_residual", "max_abs_K", "min_rel_G"}
