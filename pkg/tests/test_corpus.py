import pytest

from tfc_corpus import BENCH_DEGREES, CorpusLoader
from tfc_errors import FormCompilerError, GeometryError


def test_bundled_forms(corpus):
    assert corpus.form_names() == sorted(BENCH_DEGREES)


def test_list_forms(corpus):
    frame = corpus.list_forms()
    assert list(frame.columns) == ['name', 'arity', 'dimension', 'degree', 'coefficients', 'monomials', 'element']
    row = frame.set_index('name').loc['stabilization']
    assert row['dimension'] == 3
    assert row['coefficients'] == 'w'
    assert row['element'] == "Vector Lagrange finite element of degree 1 on a tetrahedron"


def test_load_form_with_other_degree(corpus):
    form = corpus.load_form('poisson', degree=3)
    assert form.arguments[0].element.degree == 3
    assert form.output_shape == (10, 10)


def test_meshes(corpus):
    frame = corpus.list_meshes().set_index('name')
    assert frame.loc['unit_square', 'cells'] == 2
    assert frame.loc['unit_cube', 'cells'] == 6
    assert frame.loc['skewed_triangles', 'dimension'] == 2


def test_unknown_names(corpus):
    with pytest.raises(FormCompilerError, match="no corpus form"):
        corpus.load_form('heat')
    with pytest.raises(GeometryError, match="no bundled mesh"):
        corpus.load_mesh('sphere')


def test_custom_directories(tmp_path):
    (tmp_path / 'tiny.form').write_text("element = Lagrange(1, interval, 1)\narguments = v\nL = v*dx\n")
    loader = CorpusLoader(corpus_dir=tmp_path, mesh_dir=tmp_path)
    assert loader.form_names() == ['tiny']
    assert loader.mesh_names() == []
    assert loader.load_form('tiny').arity == 1
