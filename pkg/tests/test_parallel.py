import pytest

from ifslab import _backend, _fallback
from ifslab.parallel import default_threads, pmap


def test_pmap_keeps_order():
    items = list(range(50))
    assert pmap(lambda x: x * x, items, threads=8) == [x * x for x in items]


def test_threads_env(monkeypatch):
    monkeypatch.setenv("IFSLAB_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("IFSLAB_THREADS", "0")
    with pytest.raises(ValueError):
        default_threads()
    with pytest.raises(ValueError):
        pmap(abs, [1], threads=0)


def test_backend_env_forces_fallback(monkeypatch):
    monkeypatch.setenv("IFSLAB_BACKEND", "python")
    assert _backend.get() is _fallback
    assert _backend.default_name() == "python"
