import pytest

from equivgen import data_file
from equivgen.errors import InputError, VerificationError
from equivgen.expr import to_string
from equivgen.prolong import GeneratorCandidate
from equivgen.report import extend_table, load_generators
from equivgen.verify import (complete_generator, dependency_violations, verify_affine_transformation,
                             verify_all, verify_generator)

from conftest import ex, gen, load


def gens(problem, name):
    p = load(problem)
    return p, load_generators(data_file(f"gens/{name}.json").read_text(), p)


@pytest.mark.parametrize("problem,name", [
    ("kdv", "kdv_y"), ("wave", "wave_x"), ("antiplane", "antiplane_x"),
    ("diffusion", "diffusion_x"), ("kdvburgers", "kdvburgers_point"), ("kdvburgers", "x3_F1_t"),
])
def test_listed_generators_verify(problem, name):
    p, gf = gens(problem, name)
    rep = verify_all(p, gf.generators)
    assert rep.all_verified, [r for r in rep.results if not r.verified]


@pytest.mark.parametrize("problem,name", [
    ("kdv", "kdv_u_scaling"), ("wave", "wave_z1"), ("kdvburgers", "kdvburgers_x4_as_printed"),
])
def test_refuted_generators(problem, name):
    p, gf = gens(problem, name)
    assert not verify_all(p, gf.generators).all_verified


def test_projective_generator_as_listed_first(wave):
    # -2uc d/dx in place of -2cu d/dc
    assert not verify_generator(wave, gen(wave, xi_t="t*U", xi_x="W - 2*U*C", eta_U="U^2")).verified


def test_residual_is_reported(kdv):
    res = verify_generator(kdv, gen(kdv, eta_U="U"), "scale")
    assert res.status == "refuted" and res.name == "scale"
    assert res.residuals == ["D[t](U): B*U*D[x](U)"]


def test_dependency_violation(kdv, wave):
    g = gen(kdv, xi_x="U")
    assert dependency_violations(g) == ["xi_x depends on U"]
    assert not verify_generator(kdv, g).verified
    assert dependency_violations(gen(wave, theta_C="t*C")) == ["theta_C depends on t"]


def test_opaque_calls(kdv):
    p, gf = gens("kdvburgers", "kdvburgers_point")
    # X3 without its theta_A0 = F1' part
    bad = gen(p, table=gf.table, theta_B="F1(t)*B", eta_U="F1(t)*U", theta_C="-F1(t)*C")
    res = verify_generator(p, bad)
    assert res.status == "refuted" and res.residuals == ["D[t](U): U*F1(t)'"]
    table = extend_table(kdv.table, opaque={"F1": "t"})
    with pytest.raises(VerificationError):
        dependency_violations(gen(kdv, table=table, theta_A="F1(t)"))


def test_abstract_candidate_rejected(kdv):
    with pytest.raises(VerificationError):
        verify_generator(kdv, GeneratorCandidate.unknown(kdv))


# ---------------------------------------------------------------------------
# constrained solve

def test_complete_generator_on_point_family():
    p = load("kdvburgers")
    g = complete_generator(p, {"xi_x": ex(p, "x"), "xi_t": ex(p, "3*t"), "eta_U": ex(p, "0")},
                           ["theta_A0", "theta_A2", "theta_B", "theta_C"])
    assert verify_generator(p, g).verified
    got = {c: to_string(g.components[c]) for c in ["theta_A0", "theta_A2", "theta_B", "theta_C"]}
    assert got == {"theta_A0": "-3*A0", "theta_A2": "-A2", "theta_B": "-3*B", "theta_C": "-2*C"}


def test_complete_generator_generalized():
    p, gf = gens("kdvburgers_gen", "kdvburgers_generalized")
    (g,) = gf.generators
    fixed = {c: e for c, e in g.components.items() if c not in gf.complete[g.name]}
    done = complete_generator(p, fixed, gf.complete[g.name])
    assert verify_generator(p, done).verified
    assert not done.components["theta_C"].is_zero()


def test_complete_generator_reports_undetermined(kdv):
    # eta_U = c, theta_A = -B c leaves c free
    with pytest.raises(VerificationError, match="undetermined"):
        complete_generator(kdv, {"xi_x": ex(kdv, "1")}, ["eta_U", "theta_A"])
    g = complete_generator(kdv, {"xi_x": ex(kdv, "1")}, ["eta_U"])
    assert g.components["eta_U"].is_zero()


def test_complete_generator_refuses_fixed_contradiction(kdv):
    # u d/du cannot be completed by theta_A alone
    with pytest.raises(VerificationError):
        complete_generator(kdv, {"eta_U": ex(kdv, "U")}, ["theta_A"])


# ---------------------------------------------------------------------------
# finite transformations

def test_kdv_transformations():
    p, gf = gens("kdv", "kdv_transformations")
    for name, m in gf.transformations:
        assert verify_affine_transformation(p, m, name).verified, name


def test_wrong_transformation_refuted(kdv):
    m = {"U": ex(kdv, "2*U")}
    res = verify_affine_transformation(kdv, m, "double")
    assert res.status == "refuted" and res.residuals


@pytest.mark.parametrize("name,ok", [("antiplane_reduction", True), ("antiplane_reduction_flipped", False)])
def test_antiplane_reduction(name, ok):
    p, gf = gens("antiplane", name)
    ((n, m),) = gf.transformations
    assert verify_affine_transformation(p, m, n).verified is ok


@pytest.mark.parametrize("name,ok", [("diffusion_scaling", True), ("diffusion_scaling_as_printed", False)])
def test_diffusion_scaling(name, ok):
    p, gf = gens("diffusion", name)
    ((n, m),) = gf.transformations
    assert verify_affine_transformation(p, m, n).verified is ok


def test_non_affine_map_rejected(kdv):
    with pytest.raises(VerificationError):
        verify_affine_transformation(kdv, {"x": ex(kdv, "x^2")}, "square")
    with pytest.raises(VerificationError):
        verify_affine_transformation(kdv, {"x": ex(kdv, "t"), "t": ex(kdv, "t")}, "degenerate")


def test_generator_file_errors(kdv):
    with pytest.raises(InputError):
        load_generators("[1]", kdv)
    with pytest.raises(InputError):
        load_generators('{"generators": [{"components": {"xi_y": "1"}}]}', kdv)
    with pytest.raises(InputError):
        load_generators('{"parameters": ["x"]}', kdv)
    with pytest.raises(InputError):
        load_generators('{"opaque": {"F": "z"}}', kdv)
    with pytest.raises(InputError):
        load_generators("{not json", kdv)
