"""Symbolic expressions: parse, print, simplify, differentiate, evaluate."""

from .calculus import (count_nodes, depends_on, diff, free_symbols,
                       linear_coefficients, solve_linear, substitute)
from .nodes import (HALF, MINUS_ONE, ONE, ZERO, Add, Const, Div, Expr, Func,
                    Mul, Neg, Pow, Sym, add, as_expr, div, func, is_known_name,
                    jet_name, jet_orders, mul, neg, power, sub, sym, symbols)
from .numeric import (Compiled, EvalDomainError, EvalError, UnboundSymbolError,
                      ZeroTestResult, compile_expr, evaluate, random_env,
                      sample_range, zero_test)
from .parser import ExprSyntaxError, UnknownIdentifierError, parse
from .printer import to_text
from .simplify import simplify


def E(text: str) -> Expr:
    """Parse and simplify in one step."""
    return simplify(parse(text))


__all__ = [
    "Add", "Compiled", "Const", "Div", "E", "EvalDomainError", "EvalError", "Expr",
    "ExprSyntaxError", "Func", "HALF", "MINUS_ONE", "Mul", "Neg", "ONE", "Pow", "Sym",
    "UnboundSymbolError", "UnknownIdentifierError", "ZERO", "ZeroTestResult", "add",
    "as_expr", "compile_expr", "count_nodes", "depends_on", "diff", "div", "evaluate",
    "free_symbols", "func", "is_known_name", "jet_name", "jet_orders",
    "linear_coefficients", "mul", "neg", "parse", "power", "random_env", "sample_range",
    "simplify", "solve_linear", "sub", "substitute", "sym", "symbols", "to_text",
    "zero_test",
]
