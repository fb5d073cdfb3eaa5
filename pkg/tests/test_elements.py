import itertools

import numpy as np
import pytest

from tfc_elements import FiniteElement, ReferenceCell, eval_basis, lagrange_nodes, tabulate
from tfc_errors import ElementError


def test_degree_one_nodes_are_the_vertices():
    assert lagrange_nodes(2, 1) == [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    assert lagrange_nodes('tetrahedron', 1) == [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]


def test_quadratic_lattice_order():
    assert lagrange_nodes(2, 2) == [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.0, 1.0)]


@pytest.mark.parametrize('dimension', [1, 2, 3])
@pytest.mark.parametrize('degree', [1, 2, 3, 4])
def test_nodal_basis_is_kronecker_at_nodes(dimension, degree):
    element = FiniteElement(degree, dimension)
    values = element.values(lagrange_nodes(dimension, degree))
    assert np.allclose(values, np.eye(element.space_dimension), atol=1e-11)


@pytest.mark.parametrize('dimension', [2, 3])
@pytest.mark.parametrize('degree', [1, 3, 5])
def test_partition_of_unity(dimension, degree):
    element = FiniteElement(degree, dimension)
    points = [(0.1,) * dimension, (0.2,) + (0.05,) * (dimension - 1)]
    assert np.allclose(element.values(points).sum(axis=1), 1.0, atol=1e-11)
    for direction in range(dimension):
        assert np.allclose(element.values(points, (direction,)).sum(axis=1), 0.0, atol=1e-9)


def test_p1_triangle_values_and_gradients():
    element = FiniteElement(1, 'triangle')
    assert np.allclose(eval_basis(element, (0.2, 0.3)), [0.5, 0.2, 0.3])
    assert np.allclose(eval_basis(element, (0.2, 0.3), (0,)), [-1.0, 1.0, 0.0])
    assert np.allclose(eval_basis(element, (0.2, 0.3), (1,)), [-1.0, 0.0, 1.0])
    assert np.allclose(eval_basis(element, (0.2, 0.3), (0, 1)), 0.0, atol=1e-12)


def test_quadratic_interpolation_reproduces_quadratics():
    element = FiniteElement(2, 2)
    f = lambda x, y: x * x + x * y - 3 * y + 1
    nodal = np.array([f(*p) for p in lagrange_nodes(2, 2)])
    point = (0.15, 0.6)
    assert nodal @ element.eval_basis(point) == pytest.approx(f(*point), abs=1e-12)
    # d/dx = 2x + y
    assert nodal @ element.eval_basis(point, (0,)) == pytest.approx(2 * 0.15 + 0.6, abs=1e-11)
    # d2/dxdy = 1
    assert nodal @ element.eval_basis(point, (0, 1)) == pytest.approx(1.0, abs=1e-9)


def test_vector_element_is_component_major():
    element = FiniteElement(1, 2, 2)
    scalar = FiniteElement(1, 2)
    assert element.space_dimension == 6
    table = element.values([(0.25, 0.25)])
    assert table.shape == (1, 6, 2)
    assert np.allclose(table[0, :3, 0], scalar.values([(0.25, 0.25)])[0])
    assert np.allclose(table[0, 3:, 1], scalar.values([(0.25, 0.25)])[0])
    assert np.allclose(table[0, :3, 1], 0.0)


def test_tabulate_shape():
    element = FiniteElement(3, 3)
    result = tabulate(element, np.full((7, 3), 0.1), (2,))
    assert result.shape == (7, 20)
    assert result.derivative == (2,)


def test_space_dimensions_and_descriptions():
    assert FiniteElement(2, 'tetrahedron').space_dimension == 10
    assert FiniteElement(1, 3, 3).space_dimension == 12
    assert FiniteElement(1, 2).description() == "Lagrange finite element of degree 1 on a triangle"
    assert FiniteElement(2, 1).description() == "Lagrange finite element of degree 2 on an interval"
    assert FiniteElement(1, 3, 3).description() == \
        "Vector Lagrange finite element of degree 1 on a tetrahedron"


def test_rescaled_keeps_vector_valuedness():
    element = FiniteElement(1, 3, 3).rescaled(degree=2, dimension=2)
    assert element.key == ('Lagrange', 2, 2, 2)
    assert FiniteElement(1, 2).rescaled(4) == FiniteElement(4, 'triangle')


def test_reference_cell():
    cell = ReferenceCell.from_name('tetrahedron')
    assert cell.volume == pytest.approx(1 / 6)
    assert cell.contains((0.2, 0.2, 0.2))
    assert not cell.contains((0.5, 0.5, 0.5))


@pytest.mark.parametrize('build', [
    lambda: FiniteElement(0, 2),
    lambda: FiniteElement(9, 2),
    lambda: FiniteElement(1, 4),
    lambda: FiniteElement(1, 2, 3),
    lambda: ReferenceCell.from_name('hexahedron'),
    lambda: lagrange_nodes(2, 0),
    lambda: FiniteElement(1, 2).eval_basis((0.8, 0.8)),
    lambda: FiniteElement(1, 2).eval_basis((0.1, 0.1), (2,)),
])
def test_invalid_requests_raise(build):
    with pytest.raises(ElementError):
        build()


def _interior_points(rng, dimension, count):
    return rng.dirichlet(np.ones(dimension + 1), size=count)[:, 1:]


@pytest.mark.parametrize('dimension', [1, 2, 3])
@pytest.mark.parametrize('degree', [1, 2, 3])
def test_derivatives_match_central_differences(rng, dimension, degree):
    element = FiniteElement(degree, dimension)
    points = _interior_points(rng, dimension, 10)
    h = 1e-6
    for direction in range(dimension):
        step = np.zeros(dimension)
        step[direction] = h
        difference = (element.values(points + step) - element.values(points - step)) / (2 * h)
        assert np.allclose(element.values(points, (direction,)), difference, rtol=0, atol=1e-6)


@pytest.mark.parametrize('dimension', [1, 2, 3])
@pytest.mark.parametrize('degree', range(1, 9))
def test_interpolation_reproduces_polynomials_of_its_degree(rng, dimension, degree):
    element = FiniteElement(degree, dimension)
    exponents = [e for e in itertools.product(range(degree + 1), repeat=dimension) if sum(e) <= degree]
    coefficients = rng.standard_normal(len(exponents))

    def f(points):
        points = np.atleast_2d(points)
        return sum(c * np.prod(points ** np.array(e), axis=1) for c, e in zip(coefficients, exponents))

    nodal = f(np.array(lagrange_nodes(dimension, degree)))
    points = _interior_points(rng, dimension, 20)
    assert np.allclose(element.values(points) @ nodal, f(points), rtol=0, atol=1e-8)


@pytest.mark.parametrize('dimension', [1, 2, 3])
@pytest.mark.parametrize('degree', [1, 2, 4, 8])
def test_partition_of_unity_at_random_points(rng, dimension, degree):
    element = FiniteElement(degree, dimension)
    points = _interior_points(rng, dimension, 50)
    assert np.allclose(element.values(points).sum(axis=1), 1.0, rtol=0, atol=1e-10)
    vector = FiniteElement(degree, dimension, dimension) if dimension > 1 else element
    if vector.is_vector:
        n = vector.scalar_dimension
        table = vector.values(points)
        for c in range(dimension):
            assert np.allclose(table[:, c * n:(c + 1) * n, c].sum(axis=1), 1.0, rtol=0, atol=1e-10)


@pytest.mark.parametrize('dimension', [1, 2, 3])
@pytest.mark.parametrize('degree', [1, 2, 3])
def test_derivatives_above_the_degree_are_exact_zeros(rng, dimension, degree):
    element = FiniteElement(degree, dimension)
    points = _interior_points(rng, dimension, 5)
    for directions in itertools.product(range(dimension), repeat=degree + 1):
        assert np.all(element.values(points, directions) == 0.0)
