import pytest

from equivgen import symbols as S
from equivgen.determining import DeterminingSystem, generate_determining, residual
from equivgen.errors import ContradictionError
from equivgen.expr import Expr, partial_derivative, substitute
from equivgen.problem import declare_problem
from equivgen.solver import AnsatzSpec, ansatz_solve, trivial_reduce

from conftest import BUNDLED, basis_of, gen, load
from oracle import oracle_dimension


def instantiate(e, g):
    """Replace every unknown derivative in ``e`` by the matching derivative of g."""
    p = g.problem
    rule = {}
    for i in e.atom_ids():
        s = S.sym_of(i)
        if s.kind is not S.Kind.UNKNOWN:
            continue
        v = g.components[s.base]
        for var in s.index:
            v = partial_derivative(v, p.table.symbol(var))
        rule[s] = v
    return substitute(e, rule)


@pytest.fixture(scope="module")
def systems():
    return {n: generate_determining(load(n)) for n in BUNDLED}


def test_equations_are_linear_homogeneous(systems):
    for ds in systems.values():
        for e in ds.equations:
            assert not e.den
            for mono in e.num:
                k = sum(x for i, x in mono if S.sym_of(i).kind is S.Kind.UNKNOWN)
                assert k == 1


def test_every_equation_is_tagged(systems):
    for ds in systems.values():
        assert len(ds.provenance) == len(ds.equations)
        assert all(t.startswith(("split:", "restriction:", "side-relation")) for t in ds.provenance)


def test_restrictions_follow_declarations(systems):
    tags = [t for t in systems["wave"].provenance if t.startswith("restriction")]
    assert tags == ["restriction:theta_C:x", "restriction:theta_C:t", "restriction:theta_C:W"]
    kdv = [t for t in systems["kdv"].provenance if t.startswith("restriction:theta_A")]
    assert sorted(kdv) == ["restriction:theta_A:U", "restriction:theta_A:t", "restriction:theta_A:x"]


@pytest.mark.parametrize("name", BUNDLED)
def test_basis_members_satisfy_the_system(systems, name):
    ds = systems[name]
    red = trivial_reduce(ds)
    for g in basis_of(name):
        assert all(instantiate(e, g).is_zero() for e in ds.equations)
        assert all(instantiate(e, g).is_zero() for e in red.equations)


def test_nonsymmetry_violates_the_system(systems, kdv):
    g = gen(kdv, eta_U="U")
    assert any(r for r in residual(kdv, g))
    assert any(not instantiate(e, g).is_zero() for e in systems["kdv"].equations)


def test_concrete_generator_gives_residual_split(kdv):
    # Y3 is a symmetry: nothing survives splitting
    ds = generate_determining(kdv, gen(kdv, eta_U="1", theta_A="-B"))
    assert not [e for e, t in zip(ds.equations, ds.provenance) if t.startswith("split")]
    ds = generate_determining(kdv, gen(kdv, eta_U="U"))
    assert ds.equations


def test_informational_counts(systems):
    for ds in systems.values():
        info = ds.informational
        assert info["split_coefficients"] >= info["distinct_split_equations"] > 0


def test_trivial_reduce(systems):
    red = trivial_reduce(systems["kdv"])
    assert red.args["xi_t"] == ("t",)
    assert red.args["xi_x"] == ("x", "t")
    assert red.args["eta_U"] == ("x", "t", "U")
    assert len(red) < len(systems["kdv"])
    # single-unknown equations survive only as bare facts u = 0
    for e in red.equations:
        unk = {i for i in e.atom_ids() if S.sym_of(i).kind is S.Kind.UNKNOWN}
        if len(unk) == 1:
            assert e == Expr.sym(S.sym_of(next(iter(unk))))


def test_contradiction_detected(kdv):
    ds = DeterminingSystem(kdv, [Expr.const(1)], ["split:test"], {})
    with pytest.raises(ContradictionError):
        trivial_reduce(ds)


TRANSPORT = """\
independent x t
dependent U
arbitrary K constant
equation D[t](U) = K*D[x](U)
component theta_K depends(K)
"""


@pytest.mark.parametrize("degree", [1, 2])
def test_transport_family_matches_dense_oracle(degree):
    p = declare_problem(TRANSPORT)
    basis = ansatz_solve(trivial_reduce(generate_determining(p)), AnsatzSpec.from_problem(p, degree))
    full = ["x", "t", "U", "K"]
    want = oracle_dimension(["x", "t"], ["U"], ["K"], ("t",), "K*D_U_x",
                            {"x": full, "t": full, "U": full, "K": ["K"]}, degree, 1)
    assert basis.dimension == want


def test_kdv_matches_dense_oracle():
    cs = ["A", "B", "Q"]
    want = oracle_dimension(["x", "t"], ["U"], cs, ("t",), "-A*D_U_x - B*U*D_U_x - Q*D_U_xxx",
                            {"x": ["x", "t"], "t": ["x", "t"], "U": ["x", "t", "U"],
                             "A": cs, "B": cs, "Q": cs}, 2, 3)
    assert basis_of("kdv", 2).dimension == want == 7


def test_diffusion_matches_dense_oracle():
    full = ["x", "t", "U", "C"]
    want = oracle_dimension(["x", "t"], ["U"], ["C"], ("t",), "C**2*D_U_xx",
                            {"x": full, "t": full, "U": full, "C": ["U", "C"]}, 2, 2)
    assert basis_of("diffusion", 2).dimension == want
