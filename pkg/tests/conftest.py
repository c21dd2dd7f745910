import os

import pytest

from twistval.analytic import LSeriesContext, Precision
from twistval.cli_io import RunConfig, bundled_table

CACHE_DIR = os.environ.get("TWISTVAL_CACHE",
                           os.path.join(os.path.dirname(__file__), "..",
                                        ".twistval-cache"))


@pytest.fixture(scope="session")
def cache_dir():
    os.makedirs(CACHE_DIR, exist_ok=True)
    return CACHE_DIR


@pytest.fixture(scope="session")
def table():
    return bundled_table()


@pytest.fixture(scope="session")
def config(cache_dir):
    return RunConfig(cache_dir=cache_dir)


@pytest.fixture(scope="session")
def contexts(table, config):
    """Shared per-curve series contexts so coefficient caches persist."""
    cache = {}

    def get(label, bits=192, eps=1e-30):
        key = (label, bits)
        if key not in cache:
            rec = table[label]
            cache[key] = LSeriesContext(
                rec.model, rec.conductor, Precision(bits, eps),
                curve_key=rec.label, cache_dir=config.cache_dir,
            )
        return cache[key]

    return get
