"""
Form Corpus - bundled .form files and meshes shipped with the compiler
"""

import logging
from pathlib import Path

import pandas as pd

from geometry_runtime import read_mesh
from tfc_errors import FormCompilerError, GeometryError
from tfc_forms import parse_file

logger = logging.getLogger(__name__)

ROOT = Path(__file__).resolve().parent
CORPUS_DIR = ROOT / 'corpus'
MESH_DIR = ROOT / 'meshes'

# Highest degree swept per form in the benchmark; stabilization stays at q=1
BENCH_DEGREES = {
    'mass': 8,
    'poisson': 8,
    'navier_stokes': 3,
    'elasticity': 3,
    'stabilization': 1,
    'laplacian_2terms': 8,
}


class CorpusLoader:
    def __init__(self, corpus_dir=CORPUS_DIR, mesh_dir=MESH_DIR):
        self.corpus_dir = Path(corpus_dir)
        self.mesh_dir = Path(mesh_dir)

    def form_names(self):
        return sorted(p.stem for p in self.corpus_dir.glob('*.form'))

    def mesh_names(self):
        return sorted(p.stem for p in self.mesh_dir.glob('*.mesh'))

    def form_path(self, name):
        path = self.corpus_dir / f"{name}.form"
        if not path.is_file():
            raise FormCompilerError(f"no corpus form named '{name}' (available: {', '.join(self.form_names())})")
        return path

    def mesh_path(self, name):
        path = self.mesh_dir / f"{name}.mesh"
        if not path.is_file():
            raise GeometryError(f"no bundled mesh named '{name}' (available: {', '.join(self.mesh_names())})")
        return path

    def load_form(self, name, degree=None, dimension=None):
        """Parse a corpus form, optionally re-declaring every element at another degree or dimension"""
        rescale = (degree, dimension) if degree is not None or dimension is not None else None
        form = parse_file(self.form_path(name), rescale=rescale)
        logger.debug("loaded corpus form '%s' (arity %d, %d monomials)", name, form.arity, len(form.monomials))
        return form

    def load_mesh(self, name):
        return read_mesh(self.mesh_path(name))

    def list_forms(self):
        """One row per corpus form"""
        rows = []
        for name in self.form_names():
            form = self.load_form(name)
            elements = {f.element for f in form.arguments + form.coefficients}
            rows.append({
                'name': name,
                'arity': form.arity,
                'dimension': form.dimension,
                'degree': max(e.degree for e in elements),
                'coefficients': ', '.join(f.name for f in form.coefficients) or '-',
                'monomials': len(form.monomials),
                'element': sorted(elements, key=lambda e: e.key)[0].description(),
            })
        return pd.DataFrame(rows)

    def list_meshes(self):
        rows = []
        for name in self.mesh_names():
            mesh = self.load_mesh(name)
            rows.append({'name': name, 'dimension': mesh.dimension,
                         'vertices': len(mesh.vertices), 'cells': mesh.num_cells})
        return pd.DataFrame(rows)
