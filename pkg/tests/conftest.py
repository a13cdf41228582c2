from __future__ import annotations

import pytest

from agentplant.bundled import (
    bundled_agents,
    bundled_backends,
    bundled_golden,
    bundled_layout,
    bundled_rules,
    bundled_script,
    bundled_session_config,
    sample_dataset_path,
)
from agentplant.dataset.io import import_tests
from agentplant.session import Session, replay_script


@pytest.fixture(scope="session")
def layout():
    return bundled_layout()


@pytest.fixture(scope="session")
def rules():
    return bundled_rules()


@pytest.fixture(scope="session")
def agents(layout):
    return bundled_agents(layout)


@pytest.fixture(scope="session")
def backends():
    return bundled_backends()


@pytest.fixture(scope="session")
def sample_dataset():
    return import_tests(sample_dataset_path())


@pytest.fixture(scope="session")
def retrieval_golden():
    return bundled_golden("retrieval").splitlines()


@pytest.fixture(scope="session")
def export_golden():
    return bundled_golden("export").splitlines()


def replay_bundled(name: str, layout, rules) -> Session:
    actions, header = bundled_script(name)
    return replay_script(
        layout, rules, actions, epoch=header["epoch"], run_until=header["run_until"]
    )


@pytest.fixture()
def retrieval_replay(layout, rules):
    return replay_bundled("retrieval", layout, rules)


@pytest.fixture()
def export_replay(layout, rules):
    return replay_bundled("export", layout, rules)


@pytest.fixture()
def demo_session():
    session = Session(bundled_session_config("demo_retrieval"))
    session.run_to_end()
    return session
