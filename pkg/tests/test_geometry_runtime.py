import numpy as np
import pytest

from geometry_runtime import (AffineMap, DofMap, Mesh, OracleKernel, TensorRepresentationKernel, assemble,
                              contract, eval_geometry_tensor, oracle_element_tensor, read_mesh,
                              unit_square_mesh, write_mesh)
from tfc_elements import FiniteElement
from tfc_errors import DofMapError, GeometryError

BIG_TRIANGLE = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]


def test_affine_map():
    amap = AffineMap(BIG_TRIANGLE)
    assert amap.det == pytest.approx(4.0)
    assert np.allclose(amap.inverse, 0.5 * np.eye(2))
    assert np.allclose(amap([(0.5, 0.5)]), [(1.0, 1.0)])


def test_reversed_orientation_uses_absolute_determinant():
    amap = AffineMap([(0.0, 0.0), (0.0, 2.0), (2.0, 0.0)])
    assert amap.det == pytest.approx(-4.0)
    assert amap.abs_det == pytest.approx(4.0)


def test_degenerate_cell():
    with pytest.raises(GeometryError, match="degenerate"):
        AffineMap([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(GeometryError):
        AffineMap([(0.0, 0.0), (1.0, 0.0)])


def test_poisson_p1_element_tensor_on_scaled_triangle(compiler):
    compiled = compiler.compile(compiler.corpus.load_form('poisson'))
    tensor = TensorRepresentationKernel(compiled)(AffineMap(BIG_TRIANGLE), {})
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.allclose(tensor, expected, atol=1e-12)


def test_geometry_tensor_of_poisson(compiler):
    compiled = compiler.compile(compiler.corpus.load_form('poisson'))
    member = compiled.groups[0].members[0]
    G = eval_geometry_tensor(member.geometry, AffineMap(BIG_TRIANGLE), {})
    # |det| * Jinv Jinv^T = 4 * 0.25 I
    assert np.allclose(G, np.eye(2))


def test_contract_checks_shapes(compiler):
    compiled = compiler.compile(compiler.corpus.load_form('poisson'))
    with pytest.raises(GeometryError, match="does not match"):
        contract(compiled.tensors[0], np.zeros(3))


@pytest.mark.parametrize('name, dimension, degree', [
    ('mass', 2, 1),
    ('mass', 3, 2),
    ('poisson', 2, 2),
    ('poisson', 3, 1),
    ('laplacian_2terms', 2, 3),
    ('navier_stokes', 2, 2),
    ('navier_stokes', 3, 1),
    ('elasticity', 2, 2),
    ('elasticity', 3, 1),
    ('stabilization', 2, 1),
])
def test_tensor_representation_matches_direct_quadrature(compiler, random_cells, name, dimension, degree):
    form = compiler.corpus.load_form(name, degree=degree, dimension=dimension)
    compiled = compiler.compile(form)
    kernel = TensorRepresentationKernel(compiled)
    oracle = OracleKernel(compiled.form)
    rng = np.random.default_rng(7)
    for amap in random_cells(dimension, 20):
        coeffs = {f.name: rng.standard_normal(f.element.space_dimension) for f in form.coefficients}
        expected = oracle(amap, coeffs)
        assert np.abs(kernel(amap, coeffs) - expected).max() <= 1e-10 * np.abs(expected).max()


@pytest.mark.slow
def test_stabilization_3d_matches_direct_quadrature(compiler, random_cells):
    form = compiler.corpus.load_form('stabilization')
    compiled = compiler.compile(form)
    assert compiled.tensors[0].entry_count == 1679616
    rng = np.random.default_rng(11)
    for amap in random_cells(3, 3):
        coeffs = {'w': rng.standard_normal(12)}
        expected = oracle_element_tensor(compiled.form, amap, coeffs)
        actual = TensorRepresentationKernel(compiled)(amap, coeffs)
        assert np.abs(actual - expected).max() <= 1e-10 * np.abs(expected).max()


def test_missing_coefficient(compiler):
    compiled = compiler.compile(compiler.corpus.load_form('navier_stokes'))
    amap = AffineMap([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    with pytest.raises(GeometryError, match="missing coefficient"):
        TensorRepresentationKernel(compiled)(amap, {})
    with pytest.raises(GeometryError, match="needs 12 values"):
        TensorRepresentationKernel(compiled)(amap, {'w': np.ones(4)})


def test_dof_maps(corpus):
    mesh = unit_square_mesh()
    assert DofMap(mesh, FiniteElement(1, 2)).size == 4
    assert DofMap(mesh, FiniteElement(2, 2)).size == 9
    vector = DofMap(mesh, FiniteElement(1, 2, 2))
    assert vector.size == 8
    assert vector.cell_dofs.shape == (2, 6)
    assert DofMap(corpus.load_mesh('unit_cube'), FiniteElement(2, 3)).size == 27
    with pytest.raises(DofMapError):
        DofMap(mesh, FiniteElement(3, 2))
    with pytest.raises(DofMapError):
        DofMap(mesh, FiniteElement(1, 3))


@pytest.mark.parametrize('degree', [1, 2])
def test_assembled_mass_and_stiffness_on_unit_square(compiler, degree):
    mesh = unit_square_mesh()
    mass = compiler.assemble(compiler.corpus.load_form('mass', degree=degree), mesh)
    assert mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(mass, mass.T)
    stiffness = compiler.assemble(compiler.corpus.load_form('poisson', degree=degree), mesh)
    assert np.abs(stiffness.sum(axis=1)).max() <= 1e-12


def test_assembly_with_kernels_agrees(compiler, corpus):
    mesh = corpus.load_mesh('skewed_triangles')
    compiled = compiler.compile(corpus.load_form('poisson', degree=2))
    by_tensor = assemble(mesh, compiled)
    by_oracle = assemble(mesh, compiled, kernel=OracleKernel(compiled.form))
    assert np.allclose(by_tensor, by_oracle, atol=1e-12)


def test_convection_annihilates_constants(compiler, corpus):
    mesh = corpus.load_mesh('unit_cube')
    compiled = compiler.compile(corpus.load_form('navier_stokes'))
    velocity = np.concatenate([np.ones(8), np.zeros(16)])
    matrix = assemble(mesh, compiled, {'w': velocity})
    assert matrix.shape == (24, 24)
    assert np.abs(matrix @ np.ones(24)).max() <= 1e-12
    with pytest.raises(GeometryError, match="global coefficient"):
        assemble(mesh, compiled, {'w': np.ones(3)})


def test_mesh_files_round_trip(tmp_path, corpus):
    mesh = corpus.load_mesh('skewed_triangles')
    path = tmp_path / 'copy.mesh'
    write_mesh(mesh, path)
    again = read_mesh(path)
    assert np.array_equal(again.vertices, mesh.vertices)
    assert np.array_equal(again.cells, mesh.cells)


@pytest.mark.parametrize('text', [
    "vertex 0 0\nvertex 1 0\nvertex 0 1\nface 0 1 2\n",
    "vertex 0 0\nvertex 1 0\nvertex 0 1\ncell 0 1 3\n",
    "vertex 0 0\nvertex 1 x\n",
    "vertex 0 0\nvertex 1 0\ncell 0 1\n",
])
def test_malformed_meshes(tmp_path, text):
    path = tmp_path / 'bad.mesh'
    path.write_text(text)
    with pytest.raises(GeometryError):
        read_mesh(path)


def test_mesh_cells_are_valid(corpus):
    for name in corpus.mesh_names():
        mesh = corpus.load_mesh(name)
        assert isinstance(mesh, Mesh)
        for c in range(mesh.num_cells):
            assert mesh.cell_map(c).abs_det > 0


@pytest.mark.parametrize('dimension, degree', [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_poisson_element_tensor_is_semidefinite_with_constant_nullspace(compiler, random_cells, dimension, degree):
    compiled = compiler.compile(compiler.corpus.load_form('poisson', degree=degree, dimension=dimension))
    for amap in random_cells(dimension, 10):
        tensor = compiled.element_tensor(amap)
        scale = np.abs(tensor).max()
        assert np.allclose(tensor, tensor.T, rtol=0, atol=1e-13 * scale)
        assert np.linalg.eigvalsh(tensor).min() >= -1e-10 * scale
        assert np.abs(tensor @ np.ones(len(tensor))).max() <= 1e-12 * scale
