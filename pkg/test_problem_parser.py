import pytest

from dynamics import ProblemKind, create_domain
from problem_parser import ProblemFileError, ProblemParser, ProblemValidator
from timescales import ScaleKind

BASE = """\
[domain]
t1 = integers(0, 3)
t2 = uniform(0, 1, 5)   # five points
zscale = points(0, 0.5, 1)

[equation]
F = u + Hu
G = x*u

[conditions]
alpha = 1 + x
beta = 1 + y
"""


@pytest.fixture
def parser():
    return ProblemParser()


def test_sections_entries_and_lines(parser):
    problem = parser.parse_text(BASE, "base.tsde")

    assert set(problem.sections) == {"domain", "equation", "conditions"}
    assert problem.get("domain", "t2").value == "uniform(0, 1, 5)"
    assert problem.get("equation", "G").line == 8
    assert problem.section_lines["conditions"] == 10
    assert problem.has("conditions", "beta")
    assert not problem.has("kernels")


def test_build_spec(parser):
    spec = parser.build_spec(parser.parse_text(BASE, "dir/base.tsde"))

    assert spec.kind == ProblemKind.FULL
    assert spec.name == "base"
    assert spec.domain.shape == (4, 5, 3)
    assert spec.domain.t1.kind == ScaleKind.INTEGERS
    assert spec.domain.zscale.points == (0.0, 0.5, 1.0)
    assert spec.forcing.text == "u + Hu"


def test_weights_become_controls(parser):
    spec = parser.build_spec(parser.parse_text(BASE + "[weights]\nlambda = 2\ntol = 1e-8\nmax_iter = 7\n"))

    assert (spec.lam, spec.tol, spec.max_iter) == (2.0, 1e-8, 7)


@pytest.mark.parametrize("text, line, fragment", [
    ("[domain]\n[domain]\n", 2, "appears twice"),
    ("[mesh]\n", 1, "unknown section"),
    ("t1 = integers(0, 1)\n", 1, "before the first section"),
    ("[domain]\nt3 = integers(0, 1)\n", 2, "unknown key 't3'"),
    ("[domain]\nt1 = integers(0, 1)\nt1 = integers(0, 2)\n", 3, "given twice"),
    ("[domain]\nt1 =\n", 2, "has no value"),
    ("[domain]\njust words\n", 2, "expected 'key = value'"),
])
def test_structural_errors_carry_a_line(parser, text, line, fragment):
    with pytest.raises(ProblemFileError) as excinfo:
        parser.parse_text(text, "bad.tsde")

    assert excinfo.value.line == line
    assert fragment in str(excinfo.value)
    assert str(excinfo.value).startswith(f"bad.tsde:{line}: ")


@pytest.mark.parametrize("value, fragment", [
    ("circle(0, 1)", "expected uniform"),
    ("integers(0, 1.5)", "integer endpoints"),
    ("uniform(0, 1)", "takes 3 arguments"),
    ("integers(0, x)", "not a decimal number"),
    ("integers(0, 1e999)", "out of range"),
])
def test_bad_scales(parser, value, fragment):
    problem = parser.parse_text(BASE.replace("integers(0, 3)", value), "s.tsde")

    with pytest.raises(ProblemFileError) as excinfo:
        parser.build_domain(problem)

    assert excinfo.value.line == 2
    assert fragment in str(excinfo.value)


def test_build_domain_goes_through_the_domain_factory(parser, monkeypatch):
    calls = []

    def factory(t1, t2, zscale):
        calls.append((t1.kind, t2.kind, zscale.kind))
        return create_domain(t1, t2, zscale)

    monkeypatch.setattr("problem_parser.create_domain", factory)
    domain = parser.build_domain(parser.parse_text(BASE))

    assert domain.shape == (4, 5, 3)
    assert calls == [(ScaleKind.INTEGERS, ScaleKind.UNIFORM, ScaleKind.EXPLICIT)]


def test_single_point_z_interval_is_rejected(parser):
    problem = parser.parse_text(BASE.replace("points(0, 0.5, 1)", "points(1)"))

    with pytest.raises(ProblemFileError):
        parser.build_domain(problem)


def test_max_iter_must_be_integral(parser):
    problem = parser.parse_text(BASE + "[weights]\nmax_iter = 2.5\n")

    with pytest.raises(ProblemFileError, match="max_iter must be an integer"):
        parser.build_spec(problem)


def test_kind_must_be_known(parser):
    problem = parser.parse_text(BASE.replace("[equation]\n", "[equation]\nkind = partial\n"))

    with pytest.raises(ProblemFileError, match="full or reduced"):
        parser.kind(problem)


def test_second_conditions(parser):
    text = BASE + "[conditions2]\nalpha2 = 2 + x\nbeta2 = 2 + y\n"
    problem = parser.parse_text(text)
    first = parser.build_spec(problem)
    second = parser.build_spec(problem, domain=first.domain, second=True)

    assert second.domain is first.domain
    assert second.alpha.text == "2 + x"
    assert second.forcing.text == first.forcing.text


def test_kernels_and_moduli(parser):
    problem = parser.parse_text(BASE + "[kernels]\np = 1 + x\nr = q\nM = 0.1\nK = 0.2\n")

    kernels = parser.build_kernels(problem)
    M, K = parser.build_moduli(problem)

    assert kernels.p.text == "1 + x"
    assert kernels.r.text == "q"
    assert (float(M.evaluate({})), float(K.evaluate({}))) == (0.1, 0.2)


def test_validator_accepts_a_solvable_file(parser):
    ok, errors = ProblemValidator(parser).validate(parser.parse_text(BASE), "solve")

    assert ok
    assert errors == []


def test_validator_lists_missing_sections_for_a_certificate(parser):
    ok, errors = ProblemValidator(parser).validate(parser.parse_text(BASE, "p.tsde"), "certify", "depend")

    assert not ok
    assert "p.tsde: missing [kernels] section for certify --which depend" in errors
    assert "p.tsde: missing [conditions2] section for certify --which depend" in errors


def test_validator_checks_variables_per_role(parser):
    text = BASE.replace("alpha = 1 + x", "alpha = 1 + y").replace("G = x*u", "G = x*Hu")
    ok, errors = ProblemValidator(parser).validate(parser.parse_text(text, "v.tsde"), "solve")

    assert not ok
    assert any(e.startswith("v.tsde:8: G:") for e in errors)
    assert any(e.startswith("v.tsde:11: alpha:") for e in errors)


def test_validator_rejects_keys_of_the_other_kind(parser):
    text = BASE.replace("[equation]\n", "[equation]\nkind = reduced\nf = u\nj = 0\n")
    ok, errors = ProblemValidator(parser).validate(parser.parse_text(text, "k.tsde"), "solve")

    assert not ok
    assert any("F belongs to a full problem" in e for e in errors)
    assert any("G belongs to a full problem" in e for e in errors)


def test_validator_needs_forcing_and_kernel(parser):
    text = BASE.replace("G = x*u\n", "")
    ok, errors = ProblemValidator(parser).validate(parser.parse_text(text, "g.tsde"), "solve")

    assert not ok
    assert "g.tsde:6: [equation] of a full problem needs G" in errors


def test_unreadable_file(tmp_path, parser):
    with pytest.raises(ProblemFileError, match="cannot read problem file"):
        parser.parse_file(tmp_path / "missing.tsde")
