import pytest

from equivgen import data_file
from equivgen.determining import generate_determining
from equivgen.parser import parse_expression
from equivgen.problem import declare_problem
from equivgen.prolong import GeneratorCandidate
from equivgen.solver import AnsatzSpec, ansatz_solve, trivial_reduce

BUNDLED = ["kdv", "wave", "diffusion", "antiplane"]


def load(name):
    return declare_problem(data_file(f"{name}.eqv").read_text(), name=name)


def gen(p, name="", table=None, **comps):
    t = table or p.table
    return GeneratorCandidate(p, {k: parse_expression(v, t) for k, v in comps.items()}, name)


def ex(p, text, table=None):
    return parse_expression(text, table or p.table)


_BASES = {}


def basis_of(name, degree=None):
    key = (name, degree)
    if key not in _BASES:
        p = load(name)
        ds = trivial_reduce(generate_determining(p))
        _BASES[key] = ansatz_solve(ds, AnsatzSpec.from_problem(p, degree))
    return _BASES[key]


@pytest.fixture(scope="session")
def kdv():
    return load("kdv")


@pytest.fixture(scope="session")
def wave():
    return load("wave")


@pytest.fixture(scope="session")
def diffusion():
    return load("diffusion")


@pytest.fixture(scope="session")
def antiplane():
    return load("antiplane")


# acceptance criteria report: one line per criterion, printed after the run
CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    if call.when == "call":
        item.rep_call = outcome.get_result()


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int(k[0]), k)):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
