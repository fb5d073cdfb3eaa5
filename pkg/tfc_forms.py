"""
Form Language - .form parser and the canonical monomial representation

A .form file declares elements, arguments and coefficients, then defines one
form as a sum of integrals. Products of sums are distributed so every form
ends up as a flat list of monomials: a rational constant times a product of
basis-function factors.

    element = Lagrange(1, tetrahedron, 3)
    arguments = v, u
    coefficients = w
    a = v[i]*w[j]*u[i].dx(j)*dx
"""

import itertools
import logging
from collections import Counter, namedtuple
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path

from lark import Lark, Token
from lark.exceptions import UnexpectedEOF, UnexpectedInput

from tfc_elements import FiniteElement, ReferenceCell
from tfc_errors import ElementError, FormError, FormSyntaxError

logger = logging.getLogger(__name__)

DEFAULT_ELEMENT = 'element'

GRAMMAR = r"""
    start: statement*

    ?statement: element_decl
              | arguments_decl
              | coefficients_decl
              | form_def

    element_decl: "element" [NAME] "=" NAME "(" NUMBER "," NAME "," NUMBER ")"
    arguments_decl: "arguments" "=" function_decl ("," function_decl)*
    coefficients_decl: "coefficients" "=" function_decl ("," function_decl)*
    function_decl: NAME [":" NAME]
    form_def: NAME "=" integral_sum

    integral_sum: [SIGN] integral
                | integral_sum SIGN integral
    integral: product "*" "dx"

    sum: [SIGN] product
       | sum SIGN product
    product: atom
           | product "*" atom

    ?atom: number
         | "(" sum ")"
         | function
    number: NUMBER ["/" NUMBER]
    function: NAME ["[" index "]"] derivative*
    derivative: "." "dx" "(" index ")"
    index: NAME
         | NUMBER

    SIGN: "+" | "-"
    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    NUMBER: /\d+(\.\d+)?([eE][+-]?\d+)?/
    COMMENT: /#[^\n]*/

    %ignore COMMENT
    %ignore /\s+/
"""

FORM_PARSER = Lark(GRAMMAR, start='start', parser='lalr', propagate_positions=True)


class IndexKind(Enum):
    PRIMARY = 'primary'
    SECONDARY = 'secondary'
    AUXILIARY = 'auxiliary'
    AUXILIARY_GEOMETRY = 'auxiliary_geometry'
    FIXED = 'fixed'
    FREE = 'free'


@dataclass(frozen=True)
class Index:
    id: str
    kind: IndexKind
    range: int
    fixed_value: int = None

    @property
    def is_fixed(self):
        return self.kind is IndexKind.FIXED

    def with_kind(self, kind):
        return replace(self, kind=kind)

    def __str__(self):
        return str(self.fixed_value) if self.is_fixed else self.id


def fixed_index(value, range_):
    return Index(f"#{value}", IndexKind.FIXED, range_, value)


@dataclass(frozen=True)
class Function:
    """An argument (test/trial function) or a coefficient of the form"""
    name: str
    element: FiniteElement
    number: int
    is_coefficient: bool = False


@dataclass(frozen=True)
class Factor:
    function: Function
    basis_index: Index
    component: Index = None
    derivatives: tuple = ()

    @property
    def element(self):
        return self.function.element

    @property
    def is_coefficient(self):
        return self.function.is_coefficient

    def indices(self):
        found = [self.basis_index]
        if self.component is not None:
            found.append(self.component)
        found.extend(self.derivatives)
        return found


@dataclass(frozen=True)
class Monomial:
    constant: Fraction
    factors: tuple

    def free_indices(self):
        """Distinct non-fixed, non-primary indices in order of first occurrence"""
        seen = {}
        for factor in self.factors:
            for index in factor.indices():
                if index.kind not in (IndexKind.FIXED, IndexKind.PRIMARY):
                    seen.setdefault(index.id, index)
        return list(seen.values())


@dataclass(frozen=True)
class Form:
    name: str
    arguments: tuple
    coefficients: tuple
    monomials: tuple

    @property
    def arity(self):
        return len(self.arguments)

    @property
    def dimension(self):
        functions = self.arguments + self.coefficients
        return functions[0].element.dimension if functions else None

    @property
    def output_shape(self):
        return tuple(f.element.space_dimension for f in self.arguments)


_FactorSpec = namedtuple('_FactorSpec', 'name component derivatives line column')


def _position(node):
    meta = getattr(node, 'meta', None)
    if meta is not None and not getattr(meta, 'empty', True):
        return meta.line, meta.column
    if isinstance(node, Token):
        return node.line, node.column
    return None, None


class _FormBuilder:
    """Turns a parse tree into a Form"""

    def __init__(self, element_declarations=None, rescale=None):
        self.overrides = dict(element_declarations or {})
        self.rescale = rescale
        self.elements = {}
        self.arguments = []
        self.coefficients = []
        self.forms = []

    def error(self, message, node=None):
        line, column = _position(node) if node is not None else (None, None)
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        return FormError(message)

    def build(self, tree):
        for statement in tree.children:
            handler = getattr(self, f"_on_{statement.data}")
            handler(statement)
        if len(self.forms) != 1:
            raise FormError(f"expected exactly one form definition, found {len(self.forms)}")
        name, terms = self.forms[0]

        functions = self.arguments + self.coefficients
        if not functions:
            raise FormError(f"form '{name}' declares no arguments or coefficients, so it has no cell to integrate over")
        dimensions = {f.element.dimension for f in functions}
        if len(dimensions) > 1:
            raise FormError(f"form '{name}' mixes cells of dimensions {sorted(dimensions)}")

        monomials = tuple(self._monomial(constant, specs) for constant, specs in terms)
        return Form(name, tuple(self.arguments), tuple(self.coefficients), monomials)

    # statements

    def _on_element_decl(self, node):
        name_tok, family, degree_tok, cell_tok, size_tok = node.children
        name = str(name_tok) if name_tok is not None else DEFAULT_ELEMENT
        if str(family) != 'Lagrange':
            raise self.error(f"unsupported element family '{family}'", family)
        degree = self._integer(degree_tok)
        vector_size = self._integer(size_tok)
        try:
            if name in self.overrides:
                element = self.overrides[name]
            else:
                element = FiniteElement(degree, ReferenceCell.from_name(str(cell_tok)), vector_size)
            if self.rescale is not None:
                element = element.rescaled(*self.rescale)
        except ElementError as e:
            raise self.error(str(e), node)
        self.elements[name] = element

    def _on_arguments_decl(self, node):
        for decl in node.children:
            self.arguments.append(self._function(decl, len(self.arguments), False))

    def _on_coefficients_decl(self, node):
        for decl in node.children:
            self.coefficients.append(self._function(decl, len(self.coefficients), True))

    def _function(self, decl, number, is_coefficient):
        name_tok, element_tok = decl.children
        name = str(name_tok)
        element_name = str(element_tok) if element_tok is not None else DEFAULT_ELEMENT
        if any(f.name == name for f in self.arguments + self.coefficients):
            raise self.error(f"'{name}' declared twice", name_tok)
        element = self.elements.get(element_name, self.overrides.get(element_name))
        if element is None:
            raise self.error(f"unknown element '{element_name}'", element_tok or name_tok)
        return Function(name, element, number, is_coefficient)

    def _on_form_def(self, node):
        name_tok, body = node.children
        self.forms.append((str(name_tok), self._expand(body)))

    # expressions

    def _integer(self, token):
        try:
            return int(str(token))
        except ValueError:
            raise self.error(f"expected an integer, got '{token}'", token)

    def _expand(self, node):
        """List of (constant, [_FactorSpec]) terms"""
        kind = node.data
        if kind in ('integral_sum', 'sum'):
            if len(node.children) == 3:
                head, sign, tail = node.children
                terms = self._expand(head)
                tail_terms = self._expand(tail)
                if str(sign) == '-':
                    tail_terms = [(-c, specs) for c, specs in tail_terms]
                return terms + tail_terms
            sign, tail = node.children
            terms = self._expand(tail)
            if sign is not None and str(sign) == '-':
                terms = [(-c, specs) for c, specs in terms]
            return terms
        if kind == 'integral':
            return self._expand(node.children[0])
        if kind == 'product':
            terms = [(Fraction(1), [])]
            for child in node.children:
                right = self._expand(child)
                terms = [(c1 * c2, s1 + s2) for c1, s1 in terms for c2, s2 in right]
            return terms
        if kind == 'number':
            numerator, denominator = node.children
            value = Fraction(str(numerator))
            if denominator is not None:
                if Fraction(str(denominator)) == 0:
                    raise self.error("division by zero", denominator)
                value /= Fraction(str(denominator))
            return [(value, [])]
        if kind == 'function':
            name_tok, component, *derivatives = node.children
            component_tok = component.children[0] if component is not None else None
            derivative_toks = [d.children[0].children[0] for d in derivatives]
            spec = _FactorSpec(str(name_tok), component_tok, derivative_toks, name_tok.line, name_tok.column)
            return [(Fraction(1), [spec])]
        raise self.error(f"unexpected construct '{kind}'", node)

    def _index(self, token, range_, ranges, uses):
        if token.type == 'NUMBER':
            value = self._integer(token)
            if not 0 <= value < range_:
                raise self.error(f"fixed index {value} out of range [0, {range_})", token)
            return fixed_index(value, range_)
        letter = str(token)
        if ranges.setdefault(letter, range_) != range_:
            raise self.error(f"index '{letter}' used with ranges {ranges[letter]} and {range_}", token)
        uses.setdefault(letter, []).append(token)
        return Index(letter, IndexKind.FREE, range_)

    def _monomial(self, constant, specs):
        functions = {f.name: f for f in self.arguments + self.coefficients}
        ranges = {}
        uses = {}
        used_arguments = set()
        occurrences = Counter()
        factors = []
        for spec in specs:
            function = functions.get(spec.name)
            if function is None:
                raise FormError(f"line {spec.line}, column {spec.column}: unknown identifier '{spec.name}'")
            element = function.element
            where = f"line {spec.line}, column {spec.column}"
            if function.is_coefficient:
                basis = Index(f"{function.name}:{occurrences[function.name]}", IndexKind.FREE,
                              element.space_dimension)
                occurrences[function.name] += 1
            else:
                if function.name in used_arguments:
                    raise FormError(f"{where}: argument '{function.name}' appears twice in one term (not multilinear)")
                used_arguments.add(function.name)
                basis = Index(f"i{function.number}", IndexKind.PRIMARY, element.space_dimension)

            if spec.component is None:
                if element.is_vector:
                    raise FormError(f"{where}: vector-valued '{function.name}' needs a component index")
                component = None
            else:
                if not element.is_vector:
                    raise FormError(f"{where}: scalar '{function.name}' cannot take a component index")
                component = self._index(spec.component, element.vector_size, ranges, uses)
            derivatives = tuple(self._index(tok, element.dimension, ranges, uses) for tok in spec.derivatives)
            factors.append(Factor(function, basis, component, derivatives))

        # summation is implied by repetition only
        for letter, tokens in uses.items():
            if len(tokens) == 1:
                raise self.error(f"index '{letter}' appears only once in its term; repeat it to sum over it", tokens[0])

        missing = [f.name for f in self.arguments if f.name not in used_arguments]
        if missing:
            raise FormError(f"a term of the form does not involve argument(s) {', '.join(missing)}")
        return Monomial(constant, tuple(factors))


def parse(source, element_declarations=None, rescale=None):
    """
    Parse .form source into a fully expanded Form.

    element_declarations maps element names to FiniteElement objects that
    replace the declared ones; rescale=(degree, dimension) moves every
    element to another degree and/or cell.
    """
    try:
        tree = FORM_PARSER.parse(source)
    except UnexpectedEOF:
        lines = source.splitlines() or ['']
        raise FormSyntaxError("unexpected end of input", len(lines), len(lines[-1]) + 1)
    except UnexpectedInput as e:
        token = getattr(e, 'token', None)
        found = repr(str(token)) if token is not None else repr(getattr(e, 'char', '?'))
        raise FormSyntaxError(f"unexpected {found}", e.line, e.column)
    form = _FormBuilder(element_declarations, rescale).build(tree)
    logger.debug("parsed form '%s': %d monomials", form.name, len(form.monomials))
    return form


def parse_file(path, element_declarations=None, rescale=None):
    return parse(Path(path).read_text(encoding='utf-8'), element_declarations, rescale)


def _index_key(index, names):
    if index is None:
        return ('-', 0)
    if index.is_fixed:
        return ('#', index.fixed_value)
    return ('@', names.setdefault(index.id, len(names)))


def _ordered_key(factors):
    names = {}
    key = []
    for factor in factors:
        key.append((
            factor.function.name,
            _index_key(factor.component, names),
            tuple(_index_key(d, names) for d in factor.derivatives),
        ))
    return tuple(key)


def canonical_key(monomial):
    """Key equal for monomials that differ only by index renaming and factor order"""
    arguments = sorted((f for f in monomial.factors if not f.is_coefficient), key=lambda f: f.function.number)
    by_name = {}
    for factor in monomial.factors:
        if factor.is_coefficient:
            by_name.setdefault((factor.function.number, factor.function.name), []).append(factor)
    groups = [by_name[k] for k in sorted(by_name)]
    best = None
    for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
        key = _ordered_key(arguments + [f for group in choice for f in group])
        if best is None or key < best:
            best = key
    return best


def simplify(form):
    """Merge monomials equal up to renaming/factor order and drop zero terms"""
    totals = {}
    for monomial in form.monomials:
        key = canonical_key(monomial)
        if key in totals:
            first, constant = totals[key]
            totals[key] = (first, constant + monomial.constant)
        else:
            totals[key] = (monomial, monomial.constant)
    monomials = tuple(replace(m, constant=c) for m, c in totals.values() if c != 0)
    if not monomials:
        raise FormError(f"form '{form.name}' vanishes identically")
    if len(monomials) != len(form.monomials):
        logger.debug("simplified '%s': %d -> %d monomials", form.name, len(form.monomials), len(monomials))
    return replace(form, monomials=monomials)


def _format_constant(value, first):
    sign = '-' if value < 0 else '+'
    magnitude = abs(value)
    if magnitude.denominator == 1:
        text = str(magnitude.numerator)
    else:
        text = f"{magnitude.numerator}/{magnitude.denominator}"
    if first:
        return ('-' if sign == '-' else ''), text
    return f" {sign} ", text


def format_factor(factor):
    text = factor.function.name
    if factor.component is not None:
        text += f"[{factor.component}]"
    for d in factor.derivatives:
        text += f".dx({d})"
    return text


def format_form(form):
    """Source text that parses back to the same Form"""
    element_names = {}
    lines = []
    for function in form.arguments + form.coefficients:
        element = function.element
        if element not in element_names:
            name = DEFAULT_ELEMENT if not element_names else f"E{len(element_names)}"
            element_names[element] = name
            head = 'element' if name == DEFAULT_ELEMENT else f'element {name}'
            lines.append(f"{head} = Lagrange({element.degree}, {element.cell.name}, {element.vector_size})")

    def declaration(function):
        name = element_names[function.element]
        return function.name if name == DEFAULT_ELEMENT else f"{function.name} : {name}"

    if form.arguments:
        lines.append("arguments = " + ", ".join(declaration(f) for f in form.arguments))
    if form.coefficients:
        lines.append("coefficients = " + ", ".join(declaration(f) for f in form.coefficients))

    body = ''
    for n, monomial in enumerate(form.monomials):
        sign, constant = _format_constant(monomial.constant, n == 0)
        parts = [format_factor(f) for f in monomial.factors]
        if constant != '1' or not parts:
            parts.insert(0, constant)
        body += sign + '*'.join(parts) + '*dx'
    lines.append(f"{form.name} = {body}")
    return '\n'.join(lines) + '\n'
