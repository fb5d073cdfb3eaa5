"""
Geometry Runtime - affine maps, geometry tensors, contraction and assembly

Everything that depends on a physical cell lives here: the affine map and its
inverse Jacobian, numeric evaluation of G_K, the contraction A0 : G_K, a
direct physical-space quadrature oracle used to check that contraction, and a
small dense assembler over simplicial meshes.
"""

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tfc_elements import lagrange_nodes
from tfc_errors import DofMapError, GeometryError
from tfc_quadrature import required_degree, simplex_rule

logger = logging.getLogger(__name__)

_LETTERS = 'abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'


def _subscripts(operand_labels, output_labels):
    letters = {}
    for label in itertools.chain(*operand_labels, output_labels):
        if label not in letters:
            if len(letters) == len(_LETTERS):
                raise GeometryError("too many distinct indices for one contraction")
            letters[label] = _LETTERS[len(letters)]
    inputs = ','.join(''.join(letters[x] for x in labels) for labels in operand_labels)
    return inputs + '->' + ''.join(letters[x] for x in output_labels)


class AffineMap:
    """x = F(X) = v0 + F' X with F' = [v1 - v0 | ... | vd - v0]"""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim == 1:
            vertices = vertices[:, None]
        d = vertices.shape[1]
        if vertices.shape[0] != d + 1 or d not in (1, 2, 3):
            raise GeometryError(f"a {d}-simplex needs {d + 1} vertices, got {vertices.shape[0]}")
        self.vertices = vertices
        self.dimension = d
        self.jacobian = (vertices[1:] - vertices[0]).T
        self.det = float(np.linalg.det(self.jacobian))
        scale = max(np.linalg.norm(a - b) for a, b in itertools.combinations(vertices, 2))
        if abs(self.det) < 1e-14 * scale ** d:
            raise GeometryError(f"degenerate cell with vertices {vertices.tolist()}")
        self.inverse = np.linalg.inv(self.jacobian)

    @property
    def abs_det(self):
        return abs(self.det)

    def __call__(self, points):
        return self.vertices[0] + np.atleast_2d(points) @ self.jacobian.T


def affine_map(vertices):
    return AffineMap(vertices)


class CoefficientData:
    """Per-cell expansion vectors of the form's coefficients, keyed by name"""

    def __init__(self, values=None):
        self.values = {name: np.asarray(v, dtype=float) for name, v in (values or {}).items()}

    @classmethod
    def wrap(cls, coeffs):
        return coeffs if isinstance(coeffs, CoefficientData) else cls(coeffs)

    def vector(self, function):
        if function.name not in self.values:
            raise GeometryError(f"missing coefficient vector for '{function.name}'")
        vector = self.values[function.name]
        if vector.shape != (function.element.space_dimension,):
            raise GeometryError(
                f"coefficient '{function.name}' needs {function.element.space_dimension} values, got {vector.shape}"
            )
        return vector


def eval_geometry_tensor(expr, amap, coeffs):
    """G[alpha] = const * |detF'| * prod w * prod delta * sum_beta' prod Jinv"""
    coeffs = CoefficientData.wrap(coeffs)
    operands = []
    labels = []
    for function, index in expr.coefficient_refs:
        operands.append(coeffs.vector(function))
        labels.append([index.id])
    for jac in expr.jacobian_factors:
        if jac.physical.is_fixed:
            operands.append(amap.inverse[:, jac.physical.fixed_value])
            labels.append([jac.reference.id])
        else:
            operands.append(amap.inverse)
            labels.append([jac.reference.id, jac.physical.id])
    for a, b in expr.kronecker_pairs:
        operands.append(np.eye(a.range))
        labels.append([a.id, b.id])

    scale = float(expr.constant) * amap.abs_det
    output = [a.id for a in expr.secondary]
    if not operands:
        if output:
            raise GeometryError("geometry tensor has secondary axes but no factors")
        return np.array(scale)
    return np.einsum(_subscripts(labels, output), *operands) * scale


def contract_flattened(A0, G):
    """|I| x |A| matrix times |A| vector, reshaped to the primary axes"""
    G = np.asarray(G, dtype=float)
    expected = tuple(a.range for a in A0.secondary)
    if G.shape != expected:
        raise GeometryError(f"geometry tensor shape {G.shape} does not match A0 secondary axes {expected}")
    return (A0.flattened() @ G.reshape(-1)).reshape(tuple(i.range for i in A0.primary))


def contract(A0, G):
    """A^K_i = sum_alpha A0[i, alpha] G[alpha]"""
    return contract_flattened(A0, G)


def element_tensor(groups, tensors, amap, coeffs, output_shape):
    coeffs = CoefficientData.wrap(coeffs)
    result = np.zeros(output_shape)
    for group, tensor in zip(groups, tensors):
        G = sum(eval_geometry_tensor(member.geometry, amap, coeffs) for member in group.members)
        result = result + contract(tensor, G)
    return result


def _physical_table(element, derivatives, amap, points):
    """values[point, dof, component, x_1, ..., x_m] with physical derivative directions"""
    d = element.dimension
    m = len(derivatives)
    table = np.empty((len(points), element.space_dimension, element.vector_size) + (d,) * m)
    for directions in itertools.product(range(d), repeat=m):
        values = element.values(points, directions)
        if not element.is_vector:
            values = values[:, :, None]
        table[(slice(None),) * 3 + directions] = values
    for _ in range(m):
        table = np.tensordot(table, amap.inverse, axes=([3], [0]))
    return table


def _oracle_monomial(monomial, amap, coeffs, rule):
    operands = [rule.weights]
    labels = [['#point']]
    for factor in monomial.factors:
        table = _physical_table(factor.element, factor.derivatives, amap, rule.points)
        if factor.is_coefficient:
            table = np.tensordot(coeffs.vector(factor.function), table, axes=([0], [1]))
            selector = [slice(None)]
            axis_labels = ['#point']
        else:
            selector = [slice(None), slice(None)]
            axis_labels = ['#point', factor.basis_index.id]

        component = factor.component
        if component is None:
            selector.append(0)
        elif component.is_fixed:
            selector.append(component.fixed_value)
        else:
            selector.append(slice(None))
            axis_labels.append(component.id)
        for direction in factor.derivatives:
            if direction.is_fixed:
                selector.append(direction.fixed_value)
            else:
                selector.append(slice(None))
                axis_labels.append(direction.id)
        operands.append(table[tuple(selector)])
        labels.append(axis_labels)

    arguments = sorted({f.basis_index.id for f in monomial.factors if not f.is_coefficient},
                       key=lambda i: int(i[1:]))
    value = np.einsum(_subscripts(labels, arguments), *operands)
    return value * float(monomial.constant) * amap.abs_det


def oracle_element_tensor(form, amap, coeffs, rule=None):
    """Element tensor by quadrature of the physical integrand"""
    coeffs = CoefficientData.wrap(coeffs)
    result = np.zeros(form.output_shape)
    for monomial in form.monomials:
        monomial_rule = rule or simplex_rule(form.dimension, required_degree(monomial))
        result = result + _oracle_monomial(monomial, amap, coeffs, monomial_rule)
    return result


@dataclass
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray

    @property
    def dimension(self):
        return self.vertices.shape[1]

    @property
    def num_cells(self):
        return len(self.cells)

    def cell_map(self, c):
        return AffineMap(self.vertices[self.cells[c]])


def read_mesh(path):
    vertices = []
    cells = []
    for number, line in enumerate(Path(path).read_text(encoding='utf-8').splitlines(), start=1):
        words = line.split('#', 1)[0].split()
        if not words:
            continue
        try:
            if words[0] == 'vertex':
                vertices.append([float(x) for x in words[1:]])
            elif words[0] == 'cell':
                cells.append([int(x) for x in words[1:]])
            else:
                raise GeometryError(f"{path}:{number}: unknown record '{words[0]}'")
        except ValueError:
            raise GeometryError(f"{path}:{number}: malformed numbers in '{line.strip()}'")
    if not vertices or not cells:
        raise GeometryError(f"{path}: mesh needs at least one vertex and one cell")
    if len({len(v) for v in vertices}) != 1 or len({len(c) for c in cells}) != 1:
        raise GeometryError(f"{path}: vertices or cells have inconsistent sizes")
    mesh = Mesh(np.array(vertices), np.array(cells, dtype=int))
    if mesh.cells.shape[1] != mesh.dimension + 1:
        raise GeometryError(f"{path}: {mesh.dimension}-D mesh cells need {mesh.dimension + 1} vertices")
    if mesh.cells.min() < 0 or mesh.cells.max() >= len(mesh.vertices):
        raise GeometryError(f"{path}: cell refers to a missing vertex")
    return mesh


def write_mesh(mesh, path):
    lines = ['vertex ' + ' '.join(repr(float(x)) for x in v) for v in mesh.vertices]
    lines += ['cell ' + ' '.join(str(int(i)) for i in c) for c in mesh.cells]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def unit_square_mesh():
    """Unit square split along its diagonal into two triangles"""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cells = np.array([[0, 1, 2], [0, 2, 3]])
    return Mesh(vertices, cells)


class DofMap:
    """
    Global numbering for P1 (vertices) and P2 (vertices + edges) elements.

    Scalar dofs are numbered in order of first appearance over the cells;
    vector dofs are component-major over the scalar numbering.
    """

    def __init__(self, mesh, element):
        if element.degree not in (1, 2):
            raise DofMapError(f"dof maps support degrees 1 and 2, got {element.degree}")
        if mesh.dimension != element.dimension:
            raise DofMapError(f"{element.dimension}-D element on a {mesh.dimension}-D mesh")
        self.element = element
        supports = []
        for node in lagrange_nodes(element.cell, element.degree):
            barycentric = (1.0 - sum(node),) + tuple(node)
            supports.append(tuple(j for j, lam in enumerate(barycentric) if lam > 1e-12))

        numbering = {}
        scalar = np.empty((mesh.num_cells, len(supports)), dtype=int)
        for c, cell in enumerate(mesh.cells):
            for n, support in enumerate(supports):
                key = tuple(sorted(int(cell[j]) for j in support))
                scalar[c, n] = numbering.setdefault(key, len(numbering))
        self.scalar_size = len(numbering)
        v = element.vector_size
        self.cell_dofs = np.hstack([scalar + k * self.scalar_size for k in range(v)])
        self.size = v * self.scalar_size
        logger.debug("dof map for %s: %d global dofs", element.description(), self.size)


class TensorRepresentationKernel:
    """Element tensors from precomputed reference tensors: A0 once, G per cell"""

    def __init__(self, compiled):
        self.groups = compiled.groups
        self.tensors = compiled.tensors
        self.output_shape = compiled.form.output_shape

    def __call__(self, amap, coeffs):
        return element_tensor(self.groups, self.tensors, amap, coeffs, self.output_shape)


class OracleKernel:
    """Element tensors by direct physical quadrature"""

    def __init__(self, form, rule=None):
        self.form = form
        self.rule = rule

    def __call__(self, amap, coeffs):
        return oracle_element_tensor(self.form, amap, coeffs, self.rule)


def assemble(mesh, compiled, coeffs=None, kernel=None):
    """Dense global tensor: sum over cells of scattered element tensors"""
    form = compiled.form
    if form.arity > 2:
        raise DofMapError(f"dense assembly supports arity 0, 1 or 2, got {form.arity}")
    kernel = kernel or TensorRepresentationKernel(compiled)
    coeffs = dict(coeffs or {})

    argument_maps = [DofMap(mesh, f.element) for f in form.arguments]
    coefficient_maps = {}
    for function in form.coefficients:
        dofmap = DofMap(mesh, function.element)
        vector = np.asarray(coeffs.get(function.name, ()), dtype=float)
        if vector.shape != (dofmap.size,):
            raise GeometryError(f"global coefficient '{function.name}' needs {dofmap.size} values, got {vector.shape}")
        coefficient_maps[function.name] = (dofmap, vector)

    result = np.zeros(tuple(m.size for m in argument_maps))
    for c in range(mesh.num_cells):
        local = {name: vector[dofmap.cell_dofs[c]] for name, (dofmap, vector) in coefficient_maps.items()}
        tensor = kernel(mesh.cell_map(c), local)
        if form.arity == 0:
            result += tensor
        elif form.arity == 1:
            result[argument_maps[0].cell_dofs[c]] += tensor
        else:
            result[np.ix_(argument_maps[0].cell_dofs[c], argument_maps[1].cell_dofs[c])] += tensor
    logger.debug("assembled '%s' over %d cells into shape %s", form.name, mesh.num_cells, result.shape)
    return result
