"""Parameter expressions evaluated at arbitrary precision.

Sequence parameters such as ``theta=sqrt(2)`` or ``a=3/2`` are kept as source
text and re-evaluated at whatever precision a computation needs.  Decimal
literals are read exactly, so ``1.41421356237`` is the rational
141421356237/10**11 rather than its nearest double.
"""
from __future__ import annotations

import ast
from fractions import Fraction
from functools import cached_property

import gmpy2
from gmpy2 import mpfr, mpq

from .._hp import precision

_CONSTANTS = {
    "pi": lambda: gmpy2.const_pi(),
    "e": lambda: gmpy2.exp(1),
    "phi": lambda: (1 + gmpy2.sqrt(5)) / 2,
    "golden": lambda: (1 + gmpy2.sqrt(5)) / 2,
    "sqrt2": lambda: gmpy2.sqrt(2),
}
_FUNCTIONS = {
    "sqrt": gmpy2.sqrt,
    "log": gmpy2.log,
    "exp": gmpy2.exp,
    "cbrt": gmpy2.cbrt,
}


class ExprError(ValueError):
    pass


class Expr:
    """A real constant given by a small arithmetic expression."""

    __slots__ = ("text", "_tree", "__dict__")

    def __init__(self, text: str | int | float | Fraction):
        if isinstance(text, Fraction):
            text = f"{text.numerator}/{text.denominator}"
        elif isinstance(text, float):
            text = repr(text)
        self.text = str(text).strip()
        try:
            self._tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ExprError(f"cannot parse expression {self.text!r}") from exc
        self._check(self._tree.body)

    def __repr__(self) -> str:
        return f"Expr({self.text!r})"

    def __str__(self) -> str:
        return self.text

    def __eq__(self, other) -> bool:
        return isinstance(other, Expr) and other.text == self.text

    def __hash__(self) -> int:
        return hash(self.text)

    def _check(self, node: ast.AST) -> None:
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExprError(f"unsupported literal in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _CONSTANTS:
                raise ExprError(f"unknown constant {node.id!r}")
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise ExprError(f"unsupported operator in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ExprError(f"unsupported operator in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ExprError(f"unsupported function in {self.text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExprError(f"functions take exactly one argument: {self.text!r}")
            self._check(node.args[0])
        else:
            raise ExprError(f"unsupported syntax in {self.text!r}")

    @cached_property
    def rational(self) -> Fraction | None:
        """Exact value when the expression is built from literals with + - * / and integer powers."""
        try:
            return self._exact(self._tree.body)
        except _NotRational:
            return None

    def _exact(self, node):
        if isinstance(node, ast.Constant):
            return Fraction(ast.get_source_segment(self.text, node))
        if isinstance(node, ast.UnaryOp):
            v = self._exact(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            left, right = self._exact(node.left), self._exact(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if right == 0:
                    raise ExprError(f"division by zero in {self.text!r}")
                return left / right
            if right.denominator == 1 and abs(right) <= 64:
                if left == 0 and right < 0:
                    raise ExprError(f"division by zero in {self.text!r}")
                return left ** int(right)
        raise _NotRational

    def evaluate(self, bits: int = 128) -> mpfr:
        """Value rounded to ``bits`` of precision."""
        exact = self.rational
        with precision(bits):
            if exact is not None:
                return mpfr(mpq(exact.numerator, exact.denominator))
            return mpfr(self._eval(self._tree.body))

    def evaluate_mpq(self, bits: int = 128) -> mpq:
        exact = self.rational
        if exact is not None:
            return mpq(exact.numerator, exact.denominator)
        return mpq(self.evaluate(bits))

    def _eval(self, node):
        if isinstance(node, ast.Constant):
            return mpfr(mpq(Fraction(ast.get_source_segment(self.text, node))))
        if isinstance(node, ast.Name):
            return _CONSTANTS[node.id]()
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return _FUNCTIONS[node.func.id](self._eval(node.args[0]))
        left, right = self._eval(node.left), self._eval(node.right)
        op = node.op
        if isinstance(op, ast.Add):
            return left + right
        if isinstance(op, ast.Sub):
            return left - right
        if isinstance(op, ast.Mult):
            return left * right
        if isinstance(op, ast.Div):
            return left / right
        return left ** right

    def __float__(self) -> float:
        exact = self.rational
        if exact is not None:
            return float(exact)
        return float(self.evaluate(96))

    @property
    def is_exact(self) -> bool:
        return self.rational is not None


class _NotRational(Exception):
    pass
