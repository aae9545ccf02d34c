"""Recursive-descent parser for the constraint surface syntax.

Accepted shape, loosely::

    constraint := ["result" "=" "(" expr ")"] expr
    expr       := or-chain of and-chains of [not] atoms
    atom       := value CMP value | value ["not"] "in" setval | bool-valued value
                | forall/exists "(" "plan" "," STRING "," body ")" | "(" expr ")"
    value      := NUMBER arithmetic | STRING | {'a', 'b'} | accessor "(plan"...")"

Aliased accessor spellings (``people_count`` for ``people_number`` and so on)
are resolved here, the ``result=(...)`` wrapper is stripped here, and
arithmetic over numeric literals is folded here, so parsed trees never
contain any of the three. Numeric literals are converted exactly: money to
integer minor units (two decimals at most), ratings to integer tenths (one
decimal at most), counts must be whole.

Errors carry byte offsets; ``ParseError.expected`` lists what would have
been accepted at that point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .ast import (
    COMPARE_OPS,
    FIELD_TYPES,
    HEAD_ALIASES,
    HEADS_WITH_ARG,
    NUMERIC_TYPES,
    ORDER_OPS,
    SURFACE_TO_HEAD,
    Accessor,
    BoolOp,
    Compare,
    ConstraintExpr,
    ItemField,
    Lit,
    Membership,
    Not,
    Quantifier,
    ValueType,
)
from ..model import Kind


class ParseError(ValueError):
    """Syntax error with a byte offset and the token set that was expected."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        text = f"{message} (offset {position})"
        if expected:
            text += "; expected " + " | ".join(expected)
        super().__init__(text)


class DslTypeError(ValueError):
    """Well-formed syntax combining values of incompatible types."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (offset {position})"
        super().__init__(message)


@dataclass(frozen=True)
class _Tok:
    type: str  # NAME | NUMBER | STRING | OP | EOF
    value: object
    pos: int


@dataclass(frozen=True)
class _Num:
    """Exact decimal: value = mantissa / 10**exp, trailing zeros stripped."""

    mantissa: int
    exp: int

    @staticmethod
    def make(mantissa: int, exp: int) -> "_Num":
        while exp > 0 and mantissa % 10 == 0:
            mantissa //= 10
            exp -= 1
        return _Num(mantissa, exp)

    def cmp_key(self, other: "_Num") -> tuple[int, int]:
        """Cross-multiplied pair for exact comparison with another number."""
        return self.mantissa * 10**other.exp, other.mantissa * 10**self.exp


_MULTI_OPS = ("==", "!=", "<=", ">=")
_SINGLE_OPS = "<>+-*(){},="


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text[i : i + 2] in _MULTI_OPS:
            toks.append(_Tok("OP", text[i : i + 2], i))
            i += 2
            continue
        if ch in _SINGLE_OPS:
            toks.append(_Tok("OP", ch, i))
            i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            exp = 0
            if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
                i += 1
                frac_start = i
                while i < n and text[i].isdigit():
                    i += 1
                exp = i - frac_start
            digits = text[start:i].replace(".", "")
            toks.append(_Tok("NUMBER", _Num.make(int(digits), exp), start))
            continue
        if ch in ("'", '"'):
            quote_ch, start = ch, i
            i += 1
            buf: list[str] = []
            while i < n and text[i] != quote_ch:
                if text[i] == "\\" and i + 1 < n:
                    buf.append(text[i + 1])
                    i += 2
                else:
                    buf.append(text[i])
                    i += 1
            if i >= n:
                raise ParseError("unterminated string", start, ("closing quote",))
            i += 1
            toks.append(_Tok("STRING", "".join(buf), start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            toks.append(_Tok("NAME", text[start:i], start))
            continue
        raise ParseError(f"unexpected character {ch!r}", i, ())
    toks.append(_Tok("EOF", None, n))
    return toks


_KIND_VALUES = frozenset(k.value for k in Kind)
_KEYWORDS = frozenset({"and", "or", "not", "in", "true", "false", "forall", "exists", "plan", "result"})

# intermediate operand: either a raw number or a built expression node
_Operand = Union[_Num, ConstraintExpr]


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.in_body = False

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        if tok.type != "EOF":
            self.i += 1
        return tok

    def at_op(self, op: str) -> bool:
        tok = self.peek()
        return tok.type == "OP" and tok.value == op

    def at_name(self, word: str) -> bool:
        tok = self.peek()
        return tok.type == "NAME" and tok.value == word

    def expect_op(self, op: str) -> _Tok:
        if not self.at_op(op):
            tok = self.peek()
            raise ParseError(f"unexpected {tok.value!r}", tok.pos, (f"'{op}'",))
        return self.advance()

    def expect_name(self, word: str) -> _Tok:
        if not self.at_name(word):
            tok = self.peek()
            raise ParseError(f"unexpected {tok.value!r}", tok.pos, (f"'{word}'",))
        return self.advance()

    def expect_string(self, what: str) -> _Tok:
        tok = self.peek()
        if tok.type != "STRING":
            raise ParseError(f"unexpected {tok.value!r}", tok.pos, (what,))
        return self.advance()

    # -- grammar ------------------------------------------------------------

    def parse(self) -> ConstraintExpr:
        if self.at_name("result") and self.peek(1).type == "OP" and self.peek(1).value == "=":
            self.advance()
            self.advance()
            self.expect_op("(")
            expr = self.or_expr()
            self.expect_op(")")
        else:
            expr = self.or_expr()
        tok = self.peek()
        if tok.type != "EOF":
            raise ParseError(f"unexpected trailing {tok.value!r}", tok.pos, ("end of input",))
        return expr

    def or_expr(self) -> ConstraintExpr:
        parts = [self.and_expr()]
        while self.at_name("or"):
            self.advance()
            parts.append(self.and_expr())
        if len(parts) == 1:
            return parts[0]
        return BoolOp("or", tuple(self._ensure_constraint(p) for p in parts))

    def and_expr(self) -> ConstraintExpr:
        parts = [self.unary()]
        while self.at_name("and"):
            self.advance()
            parts.append(self.unary())
        if len(parts) == 1:
            return parts[0]
        return BoolOp("and", tuple(self._ensure_constraint(p) for p in parts))

    def unary(self) -> ConstraintExpr:
        # prefix 'not'; the infix 'not in' never starts an operand position
        if self.at_name("not"):
            tok = self.advance()
            inner = self.unary()
            return Not(self._ensure_constraint(inner, tok.pos))
        return self.comparison()

    def comparison(self) -> ConstraintExpr:
        left = self.operand()
        tok = self.peek()
        if tok.type == "OP" and tok.value in COMPARE_OPS:
            self.advance()
            right = self.operand()
            return self._typed_compare(left, tok.value, right, tok.pos)
        if self.at_name("in"):
            self.advance()
            rhs = self.operand()
            return self._membership(left, rhs, True, tok.pos)
        if self.at_name("not") and self.peek(1).type == "NAME" and self.peek(1).value == "in":
            self.advance()
            self.advance()
            rhs = self.operand()
            return self._membership(left, rhs, False, tok.pos)
        return self._ensure_constraint(left, tok.pos)

    # value positions allow +, -, * over numeric literals, folded on the spot

    def operand(self) -> _Operand:
        node = self.term()
        while self.at_op("+") or self.at_op("-"):
            tok = self.advance()
            rhs = self.term()
            node = self._fold_arith(node, tok.value, rhs, tok.pos)
        return node

    def term(self) -> _Operand:
        node = self.factor()
        while self.at_op("*"):
            tok = self.advance()
            rhs = self.factor()
            node = self._fold_arith(node, "*", rhs, tok.pos)
        return node

    def factor(self) -> _Operand:
        if self.at_op("-"):
            tok = self.advance()
            inner = self.factor()
            if not isinstance(inner, _Num):
                raise DslTypeError("unary minus applies to numeric literals only", tok.pos)
            return _Num(-inner.mantissa, inner.exp)
        return self.primary()

    def primary(self) -> _Operand:
        tok = self.peek()
        if tok.type == "NUMBER":
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.type == "STRING":
            self.advance()
            return Lit(ValueType.STRING, tok.value)  # type: ignore[arg-type]
        if self.at_op("{"):
            return self._set_literal()
        if self.at_op("("):
            self.advance()
            inner = self.or_expr()
            self.expect_op(")")
            return inner
        if tok.type == "NAME":
            word = tok.value
            if word == "true" or word == "false":
                self.advance()
                return Lit(ValueType.BOOL, word == "true")
            if word in ("forall", "exists"):
                if self.in_body:
                    raise DslTypeError("nested quantifiers are not supported", tok.pos)
                return self._quantifier()
            if word not in _KEYWORDS:
                return self._name_atom()
        raise ParseError(
            f"unexpected {tok.value!r}",
            tok.pos,
            ("number", "string", "set", "accessor", "'('"),
        )

    def _set_literal(self) -> Lit:
        self.expect_op("{")
        values: list[str] = []
        if not self.at_op("}"):
            values.append(self.expect_string("string").value)  # type: ignore[arg-type]
            while self.at_op(","):
                self.advance()
                values.append(self.expect_string("string").value)  # type: ignore[arg-type]
        self.expect_op("}")
        return Lit(ValueType.STRSET, frozenset(values))

    def _name_atom(self) -> _Operand:
        tok = self.advance()
        word: str = tok.value  # type: ignore[assignment]
        if self.in_body:
            if word in FIELD_TYPES:
                return ItemField(word)
            if HEAD_ALIASES.get(word, word) in SURFACE_TO_HEAD:
                raise DslTypeError("plan accessors are not allowed inside a quantifier body", tok.pos)
            raise ParseError(
                f"unknown item field {word!r}", tok.pos, tuple(sorted(FIELD_TYPES))
            )
        surface = HEAD_ALIASES.get(word, word)
        head = SURFACE_TO_HEAD.get(surface)
        if head is None:
            raise ParseError(
                f"unknown accessor {word!r}", tok.pos, tuple(sorted(SURFACE_TO_HEAD))
            )
        self.expect_op("(")
        self.expect_name("plan")
        arg: Optional[str] = None
        if head in HEADS_WITH_ARG:
            self.expect_op(",")
            arg_tok = self.expect_string("accessor argument string")
            arg = arg_tok.value  # type: ignore[assignment]
            if not arg:
                raise DslTypeError(f"{surface} argument must be non-empty", arg_tok.pos)
            if head.value == "cost_of" and arg not in _KIND_VALUES:
                raise DslTypeError(f"unknown item kind {arg!r}", arg_tok.pos)
        self.expect_op(")")
        return Accessor(head, arg)

    def _quantifier(self) -> Quantifier:
        tok = self.advance()
        universal = tok.value == "forall"
        self.expect_op("(")
        self.expect_name("plan")
        self.expect_op(",")
        kind_tok = self.expect_string("kind filter string")
        kind_filter: str = kind_tok.value  # type: ignore[assignment]
        if kind_filter != "any" and kind_filter not in _KIND_VALUES:
            raise DslTypeError(f"unknown kind filter {kind_filter!r}", kind_tok.pos)
        self.expect_op(",")
        self.in_body = True
        try:
            body = self.or_expr()
        finally:
            self.in_body = False
        self.expect_op(")")
        return Quantifier(universal, kind_filter, self._ensure_constraint(body, kind_tok.pos))

    # -- typing -------------------------------------------------------------

    def _fold_arith(self, a: _Operand, op: str, b: _Operand, pos: int) -> _Num:
        if not isinstance(a, _Num) or not isinstance(b, _Num):
            raise DslTypeError("arithmetic is supported over numeric literals only", pos)
        if op == "*":
            return _Num.make(a.mantissa * b.mantissa, a.exp + b.exp)
        exp = max(a.exp, b.exp)
        ma = a.mantissa * 10 ** (exp - a.exp)
        mb = b.mantissa * 10 ** (exp - b.exp)
        return _Num.make(ma + mb if op == "+" else ma - mb, exp)

    @staticmethod
    def _coerce_num(num: _Num, vtype: ValueType, pos: int) -> Lit:
        if vtype is ValueType.COUNT:
            if num.exp != 0:
                raise DslTypeError("count literals must be whole numbers", pos)
            return Lit(vtype, num.mantissa)
        if vtype is ValueType.MONEY:
            if num.exp > 2:
                raise DslTypeError("money literals allow at most two decimals", pos)
            return Lit(vtype, num.mantissa * 10 ** (2 - num.exp))
        if vtype is ValueType.RATING:
            if num.exp > 1:
                raise DslTypeError("rating literals allow at most one decimal", pos)
            return Lit(vtype, num.mantissa * 10 ** (1 - num.exp))
        raise DslTypeError(f"a number cannot be used as {vtype.value}", pos)

    @staticmethod
    def _operand_type(x: _Operand) -> Optional[ValueType]:
        if isinstance(x, (Accessor, ItemField)):
            return x.vtype
        if isinstance(x, Lit):
            return x.vtype
        return None

    def _typed_compare(self, left: _Operand, op: str, right: _Operand, pos: int) -> ConstraintExpr:
        if isinstance(left, _Num) and isinstance(right, _Num):
            a, b = left.cmp_key(right)
            result = {
                "==": a == b, "!=": a != b,
                "<": a < b, "<=": a <= b,
                ">": a > b, ">=": a >= b,
            }[op]
            return Lit(ValueType.BOOL, result)
        for side in (left, right):
            if not isinstance(side, (_Num, Accessor, ItemField, Lit)):
                raise DslTypeError("comparison operands must be values, not boolean expressions", pos)
        if isinstance(left, _Num):
            target = self._operand_type(right)
            if target not in NUMERIC_TYPES:
                raise DslTypeError(f"cannot compare a number with {target.value}", pos)  # type: ignore[union-attr]
            left = self._coerce_num(left, target, pos)
        if isinstance(right, _Num):
            target = self._operand_type(left)
            if target not in NUMERIC_TYPES:
                raise DslTypeError(f"cannot compare {target.value} with a number", pos)  # type: ignore[union-attr]
            right = self._coerce_num(right, target, pos)
        lt, rt = self._operand_type(left), self._operand_type(right)
        if lt != rt:
            raise DslTypeError(f"cannot compare {lt.value} with {rt.value}", pos)  # type: ignore[union-attr]
        if op in ORDER_OPS and lt not in NUMERIC_TYPES:
            raise DslTypeError(f"ordering comparison is not defined for {lt.value}", pos)  # type: ignore[union-attr]
        return Compare(op, left, right)  # type: ignore[arg-type]

    def _membership(self, elem: _Operand, rhs: _Operand, positive: bool, pos: int) -> Membership:
        if isinstance(elem, ItemField) and elem.vtype is ValueType.STRING:
            pass
        elif isinstance(elem, Lit) and elem.vtype is ValueType.STRING:
            pass
        else:
            raise DslTypeError("membership element must be a string", pos)
        if isinstance(rhs, Accessor) and rhs.vtype is ValueType.STRSET:
            pass
        elif isinstance(rhs, Lit) and rhs.vtype is ValueType.STRSET:
            pass
        else:
            raise DslTypeError("membership target must be a string set", pos)
        return Membership(elem, rhs, positive)  # type: ignore[arg-type]

    def _ensure_constraint(self, x: _Operand, pos: Optional[int] = None) -> ConstraintExpr:
        if isinstance(x, _Num):
            raise DslTypeError("a bare number is not a constraint", pos)
        if isinstance(x, Lit) and x.vtype is not ValueType.BOOL:
            raise DslTypeError("a bare literal is not a constraint", pos)
        if isinstance(x, Accessor) and x.vtype is not ValueType.BOOL:
            raise DslTypeError(f"{x.head.value} yields a value; compare it with something", pos)
        if isinstance(x, ItemField):
            raise DslTypeError(f"item field {x.name!r} yields a value; compare it with something", pos)
        return x


def parse(text: str) -> ConstraintExpr:
    """Parse one constraint. Raises ParseError or DslTypeError."""
    return _Parser(text).parse()


__all__ = ["DslTypeError", "ParseError", "parse"]
