from __future__ import annotations

import pytest

from basehep.graph import build_graph
from basehep.idtable import load_idtable

from support import SAMPLE_TABLE_TEXT


@pytest.fixture(scope="session")
def sample_store():
    return load_idtable(SAMPLE_TABLE_TEXT)


@pytest.fixture(scope="session")
def sample_graph(sample_store):
    return build_graph(sample_store)
