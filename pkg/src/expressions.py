"""
Expression Language for Map Configs
Parses small arithmetic formulas once and evaluates them in mpmath, numpy or exact rationals
"""

import logging
import re
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import mpmath as mp
import numpy as np

from errors import ExpressionError

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

_NUMBER_REGEXP = re.compile(r"(\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_REGEXP = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPERATORS = ('**', '+', '-', '*', '/', '^', '(', ')', ',')

_CONSTANTS = {'pi', 'e', 'inf'}
_FUNCTIONS = {
    'exp': 1, 'log': 1, 'sqrt': 1, 'abs': 1, 'min': 2, 'max': 2,
}

# AST nodes are plain tuples: ('num', text) ('var', name) ('neg', a)
# ('bin', op, a, b) ('call', name, args)
Node = Tuple


def _tokenize(source: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        match = _NUMBER_REGEXP.match(source, pos)
        if match:
            tokens.append(('num', match.group(0), pos))
            pos = match.end()
            continue
        match = _NAME_REGEXP.match(source, pos)
        if match:
            tokens.append(('name', match.group(0), pos))
            pos = match.end()
            continue
        for op in _OPERATORS:
            if source.startswith(op, pos):
                tokens.append(('op', '^' if op == '**' else op, pos))
                pos += len(op)
                break
        else:
            raise ExpressionError(source, f"unexpected character '{ch}'", pos)
    tokens.append(('end', '', len(source)))
    return tokens


class _Parser:
    """Recursive descent: sum > product > unary > power > atom"""

    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0

    def _peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.index]

    def _take(self) -> Tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _expect(self, text: str):
        kind, value, pos = self._take()
        if value != text:
            raise ExpressionError(self.source, f"expected '{text}'", pos)

    def parse(self) -> Node:
        node = self._sum()
        kind, value, pos = self._peek()
        if kind != 'end':
            raise ExpressionError(self.source, f"unexpected '{value}'", pos)
        return node

    def _sum(self) -> Node:
        node = self._product()
        while self._peek()[1] in ('+', '-') and self._peek()[0] == 'op':
            op = self._take()[1]
            node = ('bin', op, node, self._product())
        return node

    def _product(self) -> Node:
        node = self._unary()
        while self._peek()[1] in ('*', '/') and self._peek()[0] == 'op':
            op = self._take()[1]
            node = ('bin', op, node, self._unary())
        return node

    def _unary(self) -> Node:
        if self._peek()[1] in ('-', '+') and self._peek()[0] == 'op':
            op = self._take()[1]
            operand = self._unary()
            return ('neg', operand) if op == '-' else operand
        return self._power()

    def _power(self) -> Node:
        base = self._atom()
        if self._peek()[1] == '^':
            self._take()
            # right associative, binds tighter than unary minus on the left only
            return ('bin', '^', base, self._unary())
        return base

    def _atom(self) -> Node:
        kind, value, pos = self._take()
        if kind == 'num':
            return ('num', value)
        if kind == 'name':
            if self._peek()[1] == '(':
                if value not in _FUNCTIONS:
                    raise ExpressionError(self.source, f"unknown function '{value}'", pos)
                self._take()
                args = [self._sum()]
                while self._peek()[1] == ',':
                    self._take()
                    args.append(self._sum())
                self._expect(')')
                if len(args) != _FUNCTIONS[value]:
                    raise ExpressionError(self.source, f"'{value}' takes {_FUNCTIONS[value]} argument(s)", pos)
                return ('call', value, tuple(args))
            return ('var', value)
        if value == '(':
            node = self._sum()
            self._expect(')')
            return node
        raise ExpressionError(self.source, f"unexpected '{value or 'end of input'}'", pos)


def _free_names(node: Node) -> set:
    tag = node[0]
    if tag == 'var':
        return set() if node[1] in _CONSTANTS else {node[1]}
    if tag == 'num':
        return set()
    if tag == 'neg':
        return _free_names(node[1])
    if tag == 'bin':
        return _free_names(node[2]) | _free_names(node[3])
    names = set()
    for arg in node[2]:
        names |= _free_names(arg)
    return names


class Expression:
    """A parsed formula with mpmath, numpy and exact-rational evaluators"""

    def __init__(self, source: Union[str, int, float, Fraction]):
        """
        Parse a formula

        Args:
            source: Formula text; plain numbers are accepted and turned into text
        """
        if isinstance(source, Fraction):
            source = f"{source.numerator}/{source.denominator}"
        self.source = str(source).strip()
        if not self.source:
            raise ExpressionError(self.source, "empty formula")
        self.tree = _Parser(self.source).parse()
        self.variables = frozenset(_free_names(self.tree))

    def __repr__(self) -> str:
        return f"Expression('{self.source}')"

    def _check_env(self, env: Dict) -> None:
        missing = self.variables - set(env)
        if missing:
            raise ExpressionError(self.source, f"unbound variable(s) {sorted(missing)}")

    # --- extended precision ---

    def evaluate(self, **env) -> mp.mpf:
        """Evaluate in mpmath at the current working precision"""
        self._check_env(env)
        try:
            return self._mp(self.tree, {k: mp.mpf(v) if not isinstance(v, Fraction)
                                        else mp.mpf(v.numerator) / v.denominator
                                        for k, v in env.items()})
        except ExpressionError:
            raise
        except (ZeroDivisionError, ValueError, OverflowError) as e:
            raise ExpressionError(self.source, f"evaluation failed ({e})")

    def _mp(self, node: Node, env: Dict) -> mp.mpf:
        tag = node[0]
        if tag == 'num':
            return mp.mpf(node[1])
        if tag == 'var':
            name = node[1]
            if name in env:
                return env[name]
            if name == 'pi':
                return +mp.pi
            if name == 'e':
                return +mp.e
            return mp.inf
        if tag == 'neg':
            return -self._mp(node[1], env)
        if tag == 'bin':
            a, b = self._mp(node[2], env), self._mp(node[3], env)
            op = node[1]
            if op == '+':
                return a + b
            if op == '-':
                return a - b
            if op == '*':
                return a * b
            if op == '/':
                if b == 0:
                    raise ExpressionError(self.source, "division by zero")
                return a / b
            return mp.power(a, b)
        args = [self._mp(arg, env) for arg in node[2]]
        name = node[1]
        if name == 'log' and args[0] <= 0:
            raise ExpressionError(self.source, "log of a non-positive value")
        if name == 'sqrt' and args[0] < 0:
            raise ExpressionError(self.source, "sqrt of a negative value")
        return {'exp': mp.exp, 'log': mp.log, 'sqrt': mp.sqrt, 'abs': mp.fabs,
                'min': min, 'max': max}[name](*args)

    # --- vectorized double precision ---

    def vectorized(self, *names: str) -> Callable[..., np.ndarray]:
        """
        Build a numpy callable taking arrays for the given variable names

        Args:
            names: Positional variable order of the returned callable
        """
        unknown = self.variables - set(names)
        if unknown:
            raise ExpressionError(self.source, f"unbound variable(s) {sorted(unknown)}")

        def fn(*arrays):
            env = {name: np.asarray(a, dtype=float) for name, a in zip(names, arrays)}
            with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
                return np.asarray(self._np(self.tree, env), dtype=float)
        return fn

    def _np(self, node: Node, env: Dict):
        tag = node[0]
        if tag == 'num':
            return float(node[1])
        if tag == 'var':
            name = node[1]
            if name in env:
                return env[name]
            return {'pi': np.pi, 'e': np.e, 'inf': np.inf}[name]
        if tag == 'neg':
            return -self._np(node[1], env)
        if tag == 'bin':
            a, b = self._np(node[2], env), self._np(node[3], env)
            return {'+': np.add, '-': np.subtract, '*': np.multiply,
                    '/': np.divide, '^': np.power}[node[1]](a, b)
        args = [self._np(arg, env) for arg in node[2]]
        return {'exp': np.exp, 'log': np.log, 'sqrt': np.sqrt, 'abs': np.abs,
                'min': np.minimum, 'max': np.maximum}[node[1]](*args)

    # --- exact rationals ---

    def exact_value(self, **env) -> Optional[Fraction]:
        """Return a Fraction when the formula is rational arithmetic, else None"""
        try:
            return self._exact(self.tree, env)
        except (_NotRational, ZeroDivisionError):
            return None

    def _exact(self, node: Node, env: Dict) -> Fraction:
        tag = node[0]
        if tag == 'num':
            return Fraction(node[1])
        if tag == 'var':
            value = env.get(node[1])
            if isinstance(value, (int, Fraction)):
                return Fraction(value)
            raise _NotRational()
        if tag == 'neg':
            return -self._exact(node[1], env)
        if tag == 'bin':
            a, b = self._exact(node[2], env), self._exact(node[3], env)
            op = node[1]
            if op == '+':
                return a + b
            if op == '-':
                return a - b
            if op == '*':
                return a * b
            if op == '/':
                return a / b
            if b.denominator == 1:
                return a ** int(b)
            raise _NotRational()
        if node[1] in ('abs', 'min', 'max'):
            args = [self._exact(arg, env) for arg in node[2]]
            return {'abs': abs, 'min': min, 'max': max}[node[1]](*args)
        raise _NotRational()


class _NotRational(Exception):
    pass


def parse_quantity(value: Union[str, int, float, Fraction], **env) -> Union[Fraction, mp.mpf]:
    """
    Parse a declared constant, keeping it exact when possible

    Args:
        value: Formula text or number

    Returns:
        Fraction if rational, else an mpmath number
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    expression = Expression(value if not isinstance(value, float) else repr(value))
    exact = expression.exact_value(**env)
    if exact is not None:
        return exact
    return expression.evaluate(**env)
