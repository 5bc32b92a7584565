import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from convexsos import HierarchyConfig, run_hierarchy
from convexsos.backends import default_backend
from convexsos import corpus as corpus_module


@pytest.fixture(scope="session")
def backend():
    return default_backend()


def load_corpus(name):
    return corpus_module.load(name)


@pytest.fixture(scope="session")
def corpus_names():
    return corpus_module.corpus_names()


@pytest.fixture(scope="session")
def solved_corpus(backend):
    """One hierarchy run per corpus instance, shared by the whole session."""
    results = {}
    for name in corpus_module.corpus_names():
        problem = corpus_module.load(name)
        k_max = 3 if name == "ex33" else None
        results[name] = (
            problem,
            run_hierarchy(problem, HierarchyConfig(k_max=k_max), backend),
        )
    return results
