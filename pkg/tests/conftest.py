import numpy as np
import pytest

from softtype.natural.train import TrainConfig, fit, split_indices
from softtype.synth import labelled_name_corpus, write_fixtures

SAME_TYPE_SOURCE = "function addNum(start, end) {\n    return start + end;\n}\n"


@pytest.fixture(scope="session")
def name_split():
    """(train, test) halves of the seeded naming corpus; test is never seen in training."""
    corpus = labelled_name_corpus(1000, seed=0)
    train_idx, test_idx = split_indices(len(corpus), 0.2, np.random.default_rng(1))
    return corpus.subset(train_idx), corpus.subset(test_idx)


@pytest.fixture(scope="session")
def trained_run(name_split):
    return fit(name_split[0], TrainConfig(seed=0))


@pytest.fixture(scope="session")
def toy_model(trained_run):
    return trained_run.model


@pytest.fixture(scope="session")
def toy_model_path(toy_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "toy.ckpt"
    toy_model.save(path)
    return path


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    write_fixtures(out, seed=0)
    return out


# -- acceptance reporting -------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
