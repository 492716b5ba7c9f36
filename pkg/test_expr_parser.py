import numpy as np
import pytest

from expr_parser import (
    FUNCTIONS,
    ArityError,
    BinOp,
    Call,
    EvaluationError,
    ExprError,
    Expression,
    ExprSyntaxError,
    Neg,
    Num,
    UnboundVariableError,
    UnknownIdentifierError,
    Var,
    evaluate,
    parse,
    to_text,
    variables,
)

PRECEDENCE = [
    ("2+3*4", 14.0),
    ("(2+3)*4", 20.0),
    ("2^3^2", 512.0),
    ("(2^3)^2", 64.0),
    ("-2^2", -4.0),
    ("(-2)^2", 4.0),
    ("2^-1", 0.5),
    ("3--2", 5.0),
    ("1e2+1", 101.0),
    (".5*4", 2.0),
    ("8/4/2", 1.0),
    ("8-3-2", 3.0),
    ("2*3^2", 18.0),
    ("-3*-2", 6.0),
    ("10/4*2", 5.0),
    ("min(3, 2)+max(1, 4)", 6.0),
    ("abs(-7)", 7.0),
    ("sqrt(16)^2", 16.0),
    ("1 - -1 - -1", 3.0),
    ("exp(0)*cos(0)+sin(0)", 1.0),
]


@pytest.mark.parametrize("text, expected", PRECEDENCE)
def test_precedence(text, expected):
    assert evaluate(parse(text), {}) == expected


@pytest.mark.parametrize(
    "text, error, offset",
    [
        ("2 + $", ExprSyntaxError, 4),
        ("", ExprSyntaxError, 0),
        ("(1+2", ExprSyntaxError, 4),
        ("1 2", ExprSyntaxError, 2),
        ("1e999", ExprSyntaxError, 0),
        ("foo + 1", UnknownIdentifierError, 0),
        ("bar(1)", UnknownIdentifierError, 0),
        ("\u00a0w", UnknownIdentifierError, 2),
        ("sin(1, 2)", ArityError, 0),
        ("1 + sin", ArityError, 4),
        ("max(1)", ArityError, 0),
    ],
)
def test_parse_errors_carry_byte_offsets(text, error, offset):
    with pytest.raises(error) as info:
        parse(text)
    assert info.value.offset == offset


@pytest.mark.parametrize(
    "text",
    ["(" * 150 + "1" + ")" * 150, "-" * 150 + "1", "^".join(["1"] * 150), "sin(" * 150 + "1" + ")" * 150],
)
def test_deep_nesting_is_a_syntax_error(text):
    with pytest.raises(ExprSyntaxError):
        parse(text)


def test_long_flat_chains_parse_and_evaluate():
    assert evaluate(parse("+".join(["1"] * 500)), {}) == 500.0
    assert evaluate(parse("*".join(["x"] * 5000)), {"x": 1.0}) == 1.0

    chain = "x-" * 4000 + "x"
    assert variables(parse(chain)) == {"x"}
    assert evaluate(parse(chain), {"x": 1.0}) == -3999.0
    assert to_text(parse("+".join(["1"] * 3000))).count("+") == 2999


def test_errors_deep_in_a_flat_chain_keep_their_offset():
    text = "1+" * 2000 + "1/0"
    with pytest.raises(EvaluationError) as info:
        Expression(text, "F").evaluate({})
    assert info.value.offset == len(text) - 2


def test_evaluation_errors():
    with pytest.raises(EvaluationError) as info:
        evaluate(parse("1/0"), {})
    assert info.value.offset == 1

    for text in ("sqrt(0-1)", "exp(1000)", "0^-1", "(-8)^0.5", "1/(x-x)"):
        with pytest.raises(EvaluationError):
            evaluate(parse(text), {"x": 2.0})


def test_unbound_and_array_bindings():
    with pytest.raises(UnboundVariableError) as info:
        evaluate(parse("1 + x"), {})
    assert info.value.offset == 4

    with pytest.raises(EvaluationError):
        evaluate(parse("x"), {"x": np.array([1.0, 2.0])})


def test_expression_broadcasts():
    e = Expression("x*y + z", "F")
    values = e.evaluate({"x": np.array([[1.0], [2.0]]), "y": np.array([[3.0, 4.0]]), "z": 1.0})

    assert values.tolist() == [[4.0, 5.0], [7.0, 9.0]]
    assert e.variables == {"x", "y", "z"}
    assert repr(e) == "Expression(F='x*y + z')"


def test_expression_restricts_its_variables():
    with pytest.raises(UnknownIdentifierError):
        Expression("x + u", "alpha", allowed=("x", "z"))
    assert Expression.constant(0.25).evaluate({}) == 0.25


def test_variables():
    assert variables(parse("max(x, Hu) * sin(q) - 3")) == {"x", "Hu", "q"}
    assert variables(parse("2^3")) == frozenset()


def random_tree(rng, depth, negative=False):
    if depth <= 1 or rng.random() < 0.25:
        if rng.random() < 0.5:
            value = float(round(rng.uniform(0, 100), int(rng.integers(0, 4))))
            return Num(-value if negative and rng.random() < 0.5 else value)
        return Var(str(rng.choice(sorted(["x", "y", "z", "q", "u", "u1", "u2", "Hu"]))))
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return Neg(random_tree(rng, depth - 1, negative))
    if kind == 1:
        op = str(rng.choice(["+", "-", "*", "/", "^"]))
        return BinOp(op, random_tree(rng, depth - 1, negative), random_tree(rng, depth - 1, negative))
    name = str(rng.choice(sorted(FUNCTIONS)))
    return Call(name, tuple(random_tree(rng, depth - 1, negative) for _ in range(FUNCTIONS[name])))


def test_printed_trees_parse_back():
    rng = np.random.default_rng(7)
    for _ in range(500):
        tree = random_tree(rng, int(rng.integers(1, 9)))
        assert parse(to_text(tree)) == tree


def test_negative_literals_print_as_negations():
    assert to_text(Num(-2.5)) == "(-2.5)"
    assert to_text(Num(-0.0)) == "(-0.0)"
    assert parse(to_text(Num(-2.5))) == Neg(Num(2.5))
    assert evaluate(parse(to_text(BinOp("^", Num(-2.0), Num(2.0)))), {}) == 4.0

    rng = np.random.default_rng(13)
    for _ in range(500):
        text = to_text(random_tree(rng, int(rng.integers(1, 9)), negative=True))
        assert to_text(parse(text)) == text


FUZZ_PIECES = [
    "x", "y", "z", "q", "u", "u1", "u2", "Hu", "sin", "max", "min", "sqrt", "abs", "exp",
    "(", ")", ",", "+", "-", "*", "/", "^", "0", "1", "2.5", ".5", "1e3", "1e999", " ", "$", "é", "e",
]


def test_fuzzed_inputs_fail_cleanly():
    rng = np.random.default_rng(11)
    env = {name: 1.5 for name in ("x", "y", "z", "q", "u", "u1", "u2", "Hu")}
    parsed = 0
    for _ in range(100000):
        text = "".join(rng.choice(FUZZ_PIECES, size=int(rng.integers(1, 12))))
        try:
            tree = parse(text)
        except ExprError as exc:
            assert exc.offset is not None
            continue
        parsed += 1
        try:
            value = evaluate(tree, env)
        except ExprError:
            continue
        assert np.isfinite(value)
    assert parsed > 0
