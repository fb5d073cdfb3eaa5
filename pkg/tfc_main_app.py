"""
Tensor Form Compiler - Main Application
Compiles multilinear forms into reference tensors and contraction programs
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property, partial
from pathlib import Path

import numpy as np
import pandas as pd

from codegen import generate, interpret, render_c_like, save_a0, save_program
from geometry_runtime import CoefficientData, assemble, oracle_element_tensor
from reference_tensor import ALGORITHMS, DEFAULT_MAX_ENTRIES, compute_reference_tensor
from signatures import factorize, signature
from tfc_corpus import CorpusLoader
from tfc_errors import FormCompilerError, GeometryError, ProgramError, ReferenceTensorError
from tfc_forms import Form, format_form, parse, parse_file, simplify
from tfc_lowering import format_lowered, lower_form, rank_rule_estimate
from tfc_quadrature import required_degree, simplex_rule

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10


@dataclass
class CompilerOptions:
    algorithm: str = 'assembled'
    quad_degree: int = None
    max_entries: int = DEFAULT_MAX_ENTRIES
    epsilon_zero: float = 1e-12
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ReferenceTensorError(f"unknown algorithm '{self.algorithm}' (use one of {', '.join(ALGORITHMS)})")
        if self.quad_degree is not None and self.quad_degree < 0:
            raise FormCompilerError(f"quadrature degree must be non-negative, got {self.quad_degree}")
        if self.workers < 1:
            raise FormCompilerError(f"workers must be at least 1, got {self.workers}")
        if self.epsilon_zero < 0:
            raise FormCompilerError(f"epsilon_zero must be non-negative, got {self.epsilon_zero}")

    @classmethod
    def from_json(cls, path):
        """Options saved as a JSON object; unknown keys are rejected"""
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise FormCompilerError(f"could not read compiler options from {path}: {e}")
        if not isinstance(data, dict):
            raise FormCompilerError(f"{path}: compiler options must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise FormCompilerError(f"{path}: unknown option(s) {', '.join(unknown)}")
        return cls(**data)

    def save(self, path):
        with open(path, 'w') as f:
            json.dump(asdict(self), f, indent=2)

    def updated(self, **overrides):
        """Copy with every override that is not None applied"""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


@dataclass(eq=False)
class CompiledForm:
    form: Form
    lowered: list
    groups: list
    tensors: list
    rules: list
    options: CompilerOptions
    stem: str = None
    seconds: float = 0.0

    @property
    def name(self):
        return self.stem or self.form.name

    @property
    def output_shape(self):
        return self.form.output_shape

    @property
    def multiplies(self):
        return sum(t.multiplies for t in self.tensors)

    @property
    def entries(self):
        return sum(t.entry_count for t in self.tensors)

    @property
    def work_monomials(self):
        """Lowered monomials as grouped (component sums lifted where factorize lifted them)"""
        members = sorted((m for g in self.groups for m in g.members), key=lambda m: m.monomial)
        return [m.lowered for m in members]

    @cached_property
    def program(self):
        return generate(self)

    def element_tensor(self, amap, coeffs=None):
        return interpret(self.program, amap, coeffs)


@dataclass
class VerificationReport:
    form: str
    cells: int
    max_error: float
    tolerance: float
    errors: list = field(default_factory=list)

    @property
    def passed(self):
        return self.max_error <= self.tolerance


class FormCompiler:
    def __init__(self, options=None, corpus=None):
        self.options = options or CompilerOptions()
        self.corpus = corpus or CorpusLoader()

    def initialize(self):
        """Show what the bundled corpus holds"""
        print("="*80)
        print("🧮 TENSOR FORM COMPILER - INITIALIZING")
        print("="*80)
        forms = self.corpus.form_names()
        meshes = self.corpus.mesh_names()
        print(f"\n✓ {len(forms)} corpus forms: {', '.join(forms)}")
        print(f"✓ {len(meshes)} meshes: {', '.join(meshes)}")
        print(f"\n⚙️  algorithm={self.options.algorithm}  max_entries={self.options.max_entries:,}  "
              f"workers={self.options.workers}")

    def load(self, name_or_path, degree=None, dimension=None):
        """Form from a .form path, or from the corpus by name"""
        path = Path(name_or_path)
        if path.suffix == '.form' or path.is_file():
            rescale = (degree, dimension) if degree is not None or dimension is not None else None
            return parse_file(path, rescale=rescale)
        return self.corpus.load_form(str(name_or_path), degree, dimension)

    def compile(self, form, options=None, stem=None):
        """Simplify, lower, factor and integrate one form"""
        options = options or self.options
        if isinstance(form, str):
            form = parse(form)
        start = time.perf_counter()
        form = simplify(form)
        lowered = lower_form(form)
        groups = factorize(lowered)

        tensors = []
        rules = []
        for group in groups:
            ref = group.representative.reference
            degree = options.quad_degree if options.quad_degree is not None else required_degree(ref)
            rule = simplex_rule(form.dimension, degree)
            tensors.append(compute_reference_tensor(ref, rule, options.algorithm,
                                                    options.max_entries, options.workers))
            rules.append(rule)

        seconds = time.perf_counter() - start
        logger.debug("compiled '%s' with %s in %.3fs: %d groups, %d A0 entries",
                     form.name, options.algorithm, seconds, len(groups), sum(t.entry_count for t in tensors))
        return CompiledForm(form, lowered, groups, tensors, rules, options, stem, seconds)

    def compile_file(self, path, options=None, degree=None, dimension=None):
        return self.compile(self.load(path, degree, dimension), options, stem=Path(path).stem)

    def write_artifacts(self, compiled, output_dir='.', dump_a0=False):
        """Write <name>.prog and <name>.c.txt (and <name>.a0); returns the paths"""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        program = compiled.program
        prog_path = output_dir / f"{compiled.name}.prog"
        c_path = output_dir / f"{compiled.name}.c.txt"
        save_program(program, prog_path)
        c_path.write_text(render_c_like(program), encoding='utf-8')
        paths = [prog_path, c_path]
        if dump_a0:
            a0_path = output_dir / f"{compiled.name}.a0"
            save_a0(compiled, a0_path)
            paths.append(a0_path)
        return paths

    def signature_table(self, compiled):
        """One row per (lifted) monomial: rank, group, permutation and both signatures"""
        rows = []
        for g, group in enumerate(compiled.groups):
            for member in group.members:
                ref = member.lowered.reference
                sig = signature(member.lowered)
                rows.append({
                    'monomial': member.monomial,
                    'group': g,
                    'rank': ref.rank,
                    'rank_rule': rank_rule_estimate(member.lowered),
                    'permutation': ' '.join(str(p) for p in member.permutation) or '-',
                    'hard': sig.hard,
                    'soft': sig.soft,
                })
        return pd.DataFrame(rows).sort_values('monomial').reset_index(drop=True)

    def signature_report(self, compiled):
        """Text dump of the simplified form, each lowered monomial and its signatures"""
        lines = [format_form(compiled.form).rstrip()]
        table = self.signature_table(compiled)
        for lowered, (_, row) in zip(compiled.work_monomials, table.iterrows()):
            lines.append('')
            lines.append(format_lowered(lowered))
            lines.append(f"hard: {row['hard']}")
            lines.append(f"soft: {row['soft']}")
            lines.append(f"group {row['group']}, permutation ({row['permutation']})")
        lines.append('')
        lines.append(f"{len(compiled.groups)} reference tensor(s) for {len(compiled.form.monomials)} monomial(s)")
        return '\n'.join(lines) + '\n'

    def show_compilation(self, compiled):
        print(f"\n{'='*80}")
        print(f"COMPILED FORM: {compiled.name}")
        print(f"{'='*80}")
        print(format_form(compiled.form))
        rows = []
        for g, (group, tensor, rule) in enumerate(zip(compiled.groups, compiled.tensors, compiled.rules)):
            rows.append({
                'group': g,
                'members': len(group.members),
                'shape': 'x'.join(str(n) for n in tensor.shape),
                'entries': tensor.entry_count,
                'points': rule.size,
                'multiplies': tensor.multiplies,
            })
        print(pd.DataFrame(rows).to_string(index=False))
        print(f"\n✓ {compiled.options.algorithm} reference tensors in {compiled.seconds:.3f}s, "
              f"{compiled.program.scheduled_multiplies:,} scheduled multiply-adds")

    def show_signatures(self, compiled):
        print(f"\n{'='*80}")
        print(f"SIGNATURES: {compiled.name}")
        print(f"{'='*80}")
        print(self.signature_report(compiled))

    def verify(self, form, mesh, seed=0, program=None, tolerance=DEFAULT_TOLERANCE):
        """
        Compare the contraction program against direct physical quadrature on
        every cell of `mesh`, with seeded random coefficient values.
        """
        compiled = form if isinstance(form, CompiledForm) else self.compile(form)
        form = compiled.form
        if program is None:
            program, evaluate = compiled.program, compiled.element_tensor
        else:
            evaluate = partial(interpret, program)
        if mesh.dimension != form.dimension:
            raise GeometryError(f"{form.dimension}-D form on a {mesh.dimension}-D mesh")
        if tuple(program.output_shape) != form.output_shape:
            raise ProgramError(f"program output shape {tuple(program.output_shape)} does not match "
                               f"the form's {form.output_shape}")
        expected_coefficients = [(f.name, f.element.space_dimension) for f in form.coefficients]
        if list(program.coefficients) != expected_coefficients:
            raise ProgramError(f"program coefficients {program.coefficients} do not match the form's "
                               f"{expected_coefficients}")

        rng = np.random.default_rng(seed)
        errors = []
        for c in range(mesh.num_cells):
            amap = mesh.cell_map(c)
            coeffs = CoefficientData({f.name: rng.standard_normal(f.element.space_dimension)
                                      for f in form.coefficients})
            actual = evaluate(amap, coeffs)
            expected = oracle_element_tensor(form, amap, coeffs)
            scale = max(float(np.abs(expected).max()), np.finfo(float).tiny)
            errors.append(float(np.abs(actual - expected).max()) / scale)

        report = VerificationReport(compiled.name, mesh.num_cells, max(errors), tolerance, errors)
        logger.debug("verified '%s' on %d cells: max relative error %.3e", report.form, report.cells,
                     report.max_error)
        return report

    def show_verification(self, report):
        print(f"\n{'='*80}")
        print(f"VERIFICATION: {report.form}")
        print(f"{'='*80}")
        print(f"Cells checked: {report.cells}")
        print(f"Max relative error: {report.max_error:.3e} (tolerance {report.tolerance:.0e})")
        if report.passed:
            print("\n✓ Contraction program matches direct quadrature")
        else:
            worst = int(np.argmax(report.errors))
            print(f"\n✗ Mismatch, worst on cell {worst}")

    def assemble(self, form, mesh, coeffs=None):
        """Dense global tensor of a form (or compiled form) over a mesh"""
        compiled = form if isinstance(form, CompiledForm) else self.compile(form)
        return assemble(mesh, compiled, coeffs)
