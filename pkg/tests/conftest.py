import itertools
import random

import pytest
from hypothesis import HealthCheck, settings

from kgraph_kms.kgraph import load_fixture, validate

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def mcnamara():
    return load_fixture("mcnamara")


@pytest.fixture(scope="session")
def eyeglasses():
    return load_fixture("eyeglasses")


@pytest.fixture(scope="session", params=["mcnamara", "eyeglasses"])
def fixture_graph(request):
    return load_fixture(request.param)


def loops_1graph(n=2):
    return {"k": 1, "vertices": {"ids": ["v"]}, "edges": {"color_1": {f"a{i}": {"src": "v", "rng": "v"} for i in range(n)}}}


def one_vertex_raw(k, per_color, seed=None):
    """One vertex, ``per_color`` loops of each color; squares from random bijections (or the flip e.f = f.e)."""
    rng = random.Random(seed)
    names = [[f"{chr(97 + c)}{j}" for j in range(per_color)] for c in range(k)]
    edges = {f"color_{c + 1}": {e: {"src": "v", "rng": "v"} for e in names[c]} for c in range(k)}
    rels = []
    for c1, c2 in itertools.combinations(range(k), 2):
        words = list(itertools.product(names[c1], names[c2]))
        targets = list(itertools.product(names[c2], names[c1]))
        if seed is None:
            targets = [(f, e) for e, f in words]
        else:
            rng.shuffle(targets)
        rels.extend([e, f, f2, e2] for (e, f), (f2, e2) in zip(words, targets))
    return {"k": k, "vertices": {"ids": ["v"]}, "edges": edges, "squares": {"relations": rels}}


@pytest.fixture(scope="session")
def loops2():
    return validate(loops_1graph(2))


@pytest.fixture(scope="session")
def cube3():
    return validate(one_vertex_raw(3, 2))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for report in terminalreporter.stats.get(key, []):
            if report.when == "call":
                lines.extend(v for k, v in report.user_properties if k == "criterion")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
