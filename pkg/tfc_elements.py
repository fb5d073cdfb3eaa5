"""
Reference Elements - unit simplices and Lagrange elements of arbitrary degree

Nodal bases are built from an orthonormal collapsed-coordinate (Dubiner)
expansion: tabulate the expansion at the equispaced lattice, invert the
generalized Vandermonde matrix once, and map expansion values/derivatives
to the nodal basis through that inverse.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache, reduce
from math import comb, factorial, sqrt

import numpy as np

from tfc_errors import ElementError

logger = logging.getLogger(__name__)

CELL_NAMES = {1: 'interval', 2: 'triangle', 3: 'tetrahedron'}
MAX_DEGREE = 8


class ReferenceCell:
    """Unit simplex with vertices {0, e_1, ..., e_d}"""

    def __init__(self, dimension):
        if dimension not in CELL_NAMES:
            raise ElementError(f"unsupported cell dimension {dimension} (use 1, 2 or 3)")
        self.dimension = dimension
        self.name = CELL_NAMES[dimension]
        origin = tuple(0.0 for _ in range(dimension))
        unit = [tuple(1.0 if k == j else 0.0 for k in range(dimension)) for j in range(dimension)]
        self.vertices = [origin] + unit

    @classmethod
    def from_name(cls, name):
        for dimension, cell_name in CELL_NAMES.items():
            if cell_name == name:
                return cls(dimension)
        raise ElementError(f"unknown cell '{name}'")

    @property
    def volume(self):
        return 1.0 / factorial(self.dimension)

    def contains(self, point, tol=1e-12):
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= -tol) and point.sum() <= 1.0 + tol)

    def __eq__(self, other):
        return isinstance(other, ReferenceCell) and other.dimension == self.dimension

    def __hash__(self):
        return hash(('ReferenceCell', self.dimension))

    def __repr__(self):
        return f"ReferenceCell({self.name})"


def as_cell(cell):
    """Accept a ReferenceCell, a dimension or a cell name"""
    if isinstance(cell, ReferenceCell):
        return cell
    if isinstance(cell, str):
        return ReferenceCell.from_name(cell)
    return ReferenceCell(int(cell))


def lagrange_nodes(cell, q):
    """
    Equispaced lattice {(a/q, b/q, ...) : a+b+... <= q}.

    Points are ordered lexicographically by the reversed exponent tuple, so
    the degree-one lattice lists the cell vertices in order.
    """
    cell = as_cell(cell)
    if q < 1:
        raise ElementError(f"Lagrange degree must be at least 1, got {q}")
    exponents = [e for e in itertools.product(range(q + 1), repeat=cell.dimension) if sum(e) <= q]
    exponents.sort(key=lambda e: e[::-1])
    return [tuple(a / q for a in e) for e in exponents]


class _Jet:
    """Polynomial values and gradients carried through the expansion recurrences"""

    __slots__ = ('value', 'grad')

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    def __add__(self, other):
        if isinstance(other, _Jet):
            return _Jet(self.value + other.value, self.grad + other.grad)
        return _Jet(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, _Jet):
            return _Jet(self.value - other.value, self.grad - other.grad)
        return _Jet(self.value - other, self.grad)

    def __rsub__(self, other):
        return _Jet(other - self.value, -self.grad)

    def __mul__(self, other):
        if isinstance(other, _Jet):
            grad = self.grad * other.value[:, None] + other.grad * self.value[:, None]
            return _Jet(self.value * other.value, grad)
        return _Jet(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return _Jet(self.value / scalar, self.grad / scalar)


def _jacobi_sequence(n, a, xb, b):
    """P_k^{(a,0)}(x) * b^k for k = 0..n, given the jets x*b and b"""
    one = _Jet(np.ones_like(b.value), np.zeros_like(b.grad))
    seq = [one]
    if n >= 1:
        seq.append((xb * (a + 2.0) + b * float(a)) * 0.5)
    for k in range(2, n + 1):
        s = 2 * k + a
        lead = (xb * float(s * (s - 2)) + b * float(a * a)) * seq[k - 1] * float(s - 1)
        trail = (b * b) * seq[k - 2] * float(2 * (k + a - 1) * (k - 1) * s)
        seq.append((lead - trail) / float(2 * k * (k + a) * (s - 2)))
    return seq


def _orthonormal_jets(points, dimension, degree):
    """Dubiner expansion on the unit simplex, keyed by exponent tuple"""
    points = np.asarray(points, dtype=float)
    npts = len(points)

    def coord(k):
        grad = np.zeros((npts, dimension))
        grad[:, k] = 1.0
        return _Jet(points[:, k].copy(), grad)

    one = _Jet(np.ones(npts), np.zeros((npts, dimension)))
    jets = {}

    if dimension == 1:
        x = coord(0)
        legendre = _jacobi_sequence(degree, 0, 2.0 * x - 1.0, one)
        for p in range(degree + 1):
            jets[(p,)] = legendre[p] * sqrt(2 * p + 1.0)
        return jets

    if dimension == 2:
        x, y = coord(0), coord(1)
        outer = _jacobi_sequence(degree, 0, 2.0 * x + y - 1.0, 1.0 - y)
        for p in range(degree + 1):
            inner = _jacobi_sequence(degree - p, 2 * p + 1, 2.0 * y - 1.0, one)
            for q in range(degree - p + 1):
                scale = 2.0 * sqrt((p + 0.5) * (p + q + 1.0))
                jets[(p, q)] = outer[p] * inner[q] * scale
        return jets

    x, y, z = coord(0), coord(1), coord(2)
    outer = _jacobi_sequence(degree, 0, 2.0 * x + y + z - 1.0, 1.0 - y - z)
    for p in range(degree + 1):
        middle = _jacobi_sequence(degree - p, 2 * p + 1, 2.0 * y + z - 1.0, 1.0 - z)
        for q in range(degree - p + 1):
            inner = _jacobi_sequence(degree - p - q, 2 * p + 2 * q + 2, 2.0 * z - 1.0, one)
            for r in range(degree - p - q + 1):
                scale = sqrt(8.0 * (p + 0.5) * (p + q + 1.0) * (p + q + r + 1.5))
                jets[(p, q, r)] = outer[p] * middle[q] * inner[r] * scale
    return jets


class _NodalBasis:
    """Scalar Lagrange basis of one (dimension, degree), built eagerly"""

    def __init__(self, dimension, degree):
        self.dimension = dimension
        self.degree = degree
        self.nodes = np.array(lagrange_nodes(dimension, degree))
        jets = _orthonormal_jets(self.nodes, dimension, degree)
        self.exponents = sorted(jets, key=lambda e: (sum(e), e))

        vandermonde = np.column_stack([jets[e].value for e in self.exponents])
        self.vandermonde_inverse = np.linalg.inv(vandermonde)

        # d(psi_i)/dX_k = sum_j D_k[i, j] psi_j, nonzero only for deg(j) < deg(i)
        degrees = np.array([sum(e) for e in self.exponents])
        lowers_degree = degrees[None, :] < degrees[:, None]
        self.derivative_matrices = []
        for k in range(dimension):
            grads = np.column_stack([jets[e].grad[:, k] for e in self.exponents])
            matrix = np.linalg.solve(vandermonde, grads).T
            self.derivative_matrices.append(np.where(lowers_degree, matrix, 0.0))
        logger.debug("built P%d basis on %s (%d nodes)", degree, CELL_NAMES[dimension], len(self.nodes))

    def tabulate(self, points, derivative=()):
        jets = _orthonormal_jets(points, self.dimension, self.degree)
        psi = np.column_stack([jets[e].value for e in self.exponents])
        if derivative:
            chain = reduce(np.matmul, [self.derivative_matrices[k] for k in derivative])
            psi = psi @ chain.T
        return psi @ self.vandermonde_inverse


@lru_cache(maxsize=None)
def _nodal_basis(dimension, degree):
    return _NodalBasis(dimension, degree)


@dataclass(frozen=True, eq=False)
class TabulatedBasis:
    """Basis (derivative) values at a set of points: values[point][basis](component)"""
    element: 'FiniteElement'
    points: np.ndarray
    derivative: tuple
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


class FiniteElement:
    """Scalar or vector-valued Lagrange element on a reference simplex"""

    family = 'Lagrange'

    def __init__(self, degree, cell, vector_size=1):
        self.cell = as_cell(cell)
        if not 1 <= degree <= MAX_DEGREE:
            raise ElementError(f"Lagrange degree must be in [1, {MAX_DEGREE}], got {degree}")
        if vector_size not in (1, self.cell.dimension):
            raise ElementError(
                f"vector size must be 1 or {self.cell.dimension} on a {self.cell.name}, got {vector_size}"
            )
        self.degree = int(degree)
        self.vector_size = int(vector_size)
        self._basis = _nodal_basis(self.cell.dimension, self.degree)

    @property
    def dimension(self):
        return self.cell.dimension

    @property
    def scalar_dimension(self):
        return comb(self.degree + self.dimension, self.dimension)

    @property
    def space_dimension(self):
        return self.vector_size * self.scalar_dimension

    @property
    def is_vector(self):
        return self.vector_size > 1

    def description(self):
        article = 'an' if self.cell.name[0] in 'aeiou' else 'a'
        text = f"Lagrange finite element of degree {self.degree} on {article} {self.cell.name}"
        return f"Vector {text}" if self.is_vector else text

    def rescaled(self, degree=None, dimension=None):
        """Same family and vector-ness on another degree and/or cell"""
        degree = self.degree if degree is None else degree
        dimension = self.dimension if dimension is None else dimension
        return FiniteElement(degree, dimension, dimension if self.is_vector else 1)

    @property
    def key(self):
        return (self.family, self.degree, self.dimension, self.vector_size)

    def __eq__(self, other):
        return isinstance(other, FiniteElement) and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"FiniteElement({self.degree}, {self.cell.name}, {self.vector_size})"

    def check_derivative(self, derivative):
        derivative = tuple(int(k) for k in derivative)
        for k in derivative:
            if not 0 <= k < self.dimension:
                raise ElementError(f"derivative direction {k} out of range [0, {self.dimension})")
        return derivative

    def values(self, points, derivative=()):
        """
        Raw table: (points, space_dimension) for scalar elements,
        (points, space_dimension, vector_size) for vector elements with
        component-major numbering.
        """
        derivative = self.check_derivative(derivative)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        scalar = self._basis.tabulate(points, derivative)
        if not self.is_vector:
            return scalar
        n = self.scalar_dimension
        table = np.zeros((len(points), self.space_dimension, self.vector_size))
        for c in range(self.vector_size):
            table[:, c * n:(c + 1) * n, c] = scalar
        return table

    def eval_basis(self, point, derivative=()):
        point = np.asarray(point, dtype=float).reshape(-1)
        if len(point) != self.dimension:
            raise ElementError(f"point {tuple(point)} is not {self.dimension}-dimensional")
        if not self.cell.contains(point):
            raise ElementError(f"point {tuple(point)} lies outside the reference {self.cell.name}")
        return self.values(point[None, :], derivative)[0]

    def tabulate(self, points, derivative=()):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        derivative = self.check_derivative(derivative)
        return TabulatedBasis(self, points, derivative, self.values(points, derivative))


def eval_basis(element, point, derivative=()):
    return element.eval_basis(point, derivative)


def tabulate(element, points, derivative=()):
    return element.tabulate(points, derivative)
