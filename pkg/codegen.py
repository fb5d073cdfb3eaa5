"""
Code Generation - contraction programs, their interpreter and C-like rendering

A ContractionProgram is the executable artifact of a compiled form. Per
reference-tensor group it stores A0 flattened to an |I| x |A| matrix, a
recipe giving every geometry-tensor entry G[alpha] as a sum of token
products, and a schedule of the (i, alpha) pairs whose A0 entry is not
negligible. Evaluating an element tensor means computing G from the cell and
running the schedule.

Tokens:
    ("CONST", value)        monomial constant
    ("DETF",)               |det F'|
    ("JINV", r, c)          dX_r / dx_c
    ("COEFF", name, dof)    expansion coefficient of a coefficient function
"""

import itertools
import json
import logging
import re
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np

from geometry_runtime import CoefficientData
from tfc_errors import ProgramError

logger = logging.getLogger(__name__)

PROGRAM_FORMAT = 'tfc-program'
A0_FORMAT = 'tfc-a0'
FORMAT_VERSION = 1


def _real(x):
    return format(float(x), '.17g')


@dataclass(eq=False)
class ProgramGroup:
    a0: np.ndarray
    secondary_shape: tuple
    recipe: list
    schedule_rows: np.ndarray
    schedule_cols: np.ndarray

    @property
    def rows(self):
        return self.a0.shape[0]

    @property
    def cols(self):
        return self.a0.shape[1]

    @property
    def schedule_values(self):
        return self.a0[self.schedule_rows, self.schedule_cols]

    @property
    def scheduled(self):
        return len(self.schedule_rows)


@dataclass(eq=False)
class ContractionProgram:
    name: str
    arity: int
    dimension: int
    output_shape: tuple
    coefficients: list
    epsilon_zero: float
    groups: list

    @property
    def output_size(self):
        return prod(self.output_shape)

    @property
    def scheduled_multiplies(self):
        return sum(g.scheduled for g in self.groups)


def _recipe(group, secondary_shape):
    """Token products for every flattened alpha, summed over members and beta'"""
    recipe = []
    for alpha in itertools.product(*(range(n) for n in secondary_shape)):
        terms = []
        for member in group.members:
            geometry = member.geometry
            position = {a.id: n for n, a in enumerate(geometry.secondary)}
            auxiliary = geometry.auxiliary
            for beta in itertools.product(*(range(b.range) for b in auxiliary)):
                free = dict(zip((b.id for b in auxiliary), beta))

                def value(index):
                    if index.is_fixed:
                        return index.fixed_value
                    if index.id in position:
                        return alpha[position[index.id]]
                    return free[index.id]

                if any(value(a) != value(b) for a, b in geometry.kronecker_pairs):
                    continue
                tokens = [('CONST', float(geometry.constant)), ('DETF',)]
                tokens += [('COEFF', function.name, value(index)) for function, index in geometry.coefficient_refs]
                tokens += [('JINV', value(j.reference), value(j.physical)) for j in geometry.jacobian_factors]
                terms.append(tuple(tokens))
        recipe.append(terms)
    return recipe


def generate(compiled, epsilon_zero=None):
    """ContractionProgram for a compiled form"""
    form = compiled.form
    eps = compiled.options.epsilon_zero if epsilon_zero is None else epsilon_zero
    groups = []
    for group, tensor in zip(compiled.groups, compiled.tensors):
        a0 = np.array(tensor.flattened(), dtype=float)
        largest = np.abs(a0).max() if a0.size else 0.0
        rows, cols = np.nonzero(np.abs(a0) > eps * largest)
        secondary_shape = tuple(a.range for a in tensor.secondary)
        groups.append(ProgramGroup(a0, secondary_shape, _recipe(group, secondary_shape), rows, cols))
    program = ContractionProgram(
        name=compiled.name,
        arity=form.arity,
        dimension=form.dimension,
        output_shape=form.output_shape,
        coefficients=[(f.name, f.element.space_dimension) for f in form.coefficients],
        epsilon_zero=eps,
        groups=groups,
    )
    logger.debug("program '%s': %d groups, %d scheduled multiply-adds",
                 program.name, len(groups), program.scheduled_multiplies)
    return program


def _token_value(token, amap, coeffs):
    kind = token[0]
    if kind == 'CONST':
        return token[1]
    if kind == 'DETF':
        return amap.abs_det
    if kind == 'JINV':
        return amap.inverse[token[1], token[2]]
    if kind == 'COEFF':
        name, dof = token[1], token[2]
        if name not in coeffs:
            raise ProgramError(f"program references missing coefficient '{name}'")
        vector = coeffs[name]
        if not 0 <= dof < len(vector):
            raise ProgramError(f"coefficient '{name}' has no dof {dof}")
        return vector[dof]
    raise ProgramError(f"unknown token {token[0]!r}")


def interpret(program, amap, coeffs=None):
    """Evaluate the element tensor the program describes on one cell"""
    if isinstance(coeffs, CoefficientData):
        coeffs = coeffs.values
    coeffs = {name: np.asarray(v, dtype=float) for name, v in (coeffs or {}).items()}
    output = np.zeros(program.output_size)
    for group in program.groups:
        G = np.array([
            sum(float(np.prod([_token_value(t, amap, coeffs) for t in term])) for term in terms)
            for terms in group.recipe
        ])
        contributions = group.schedule_values * G[group.schedule_cols]
        output += np.bincount(group.schedule_rows, weights=contributions, minlength=program.output_size)
    return output.reshape(program.output_shape)


def _render_token(token, coefficient_numbers):
    kind = token[0]
    if kind == 'CONST':
        return _real(token[1])
    if kind == 'DETF':
        return 'detF'
    if kind == 'JINV':
        return f"Jinv[{token[1]}][{token[2]}]"
    return f"w[{coefficient_numbers[token[1]]}][{token[2]}]"


def render_c_like(program):
    """Deterministic C-like source: geometry tensor first, then unrolled multiply-adds"""
    numbers = {name: k for k, (name, _) in enumerate(program.coefficients)}
    d = program.dimension
    shape = 'x'.join(str(n) for n in program.output_shape) or 'scalar'
    function = re.sub(r'\W', '_', program.name)
    lines = [
        f"// {program.name}: element tensor {shape}, {len(program.groups)} reference tensor(s)",
        "// detF is |det F'|, Jinv[r][c] = dX_r/dx_c",
        f"void tabulate_tensor_{function}(double* A, const double* const* w, "
        f"const double Jinv[{d}][{d}], double detF)",
        "{",
    ]
    for g, group in enumerate(program.groups):
        lines.append(f"  // geometry tensor {g}")
        for a, terms in enumerate(group.recipe):
            expression = ' + '.join(' * '.join(_render_token(t, numbers) for t in term) for term in terms)
            lines.append(f"  const double G{g}_{a} = {expression or '0.0'};")

    products = [[] for _ in range(program.output_size)]
    for g, group in enumerate(program.groups):
        for row, col, value in zip(group.schedule_rows, group.schedule_cols, group.schedule_values):
            products[row].append(f"{_real(value)} * G{g}_{col}")
    lines.append("  // element tensor")
    for i, terms in enumerate(products):
        lines.append(f"  A[{i}] = {' + '.join(terms) or '0.0'};")
    lines.append("}")
    return '\n'.join(lines) + '\n'


def _token_to_json(token):
    if token[0] == 'CONST':
        return ['CONST', _real(token[1])]
    return [token[0], *token[1:]]


def _token_from_json(data):
    if data[0] == 'CONST':
        return ('CONST', float(data[1]))
    if data[0] == 'DETF':
        return ('DETF',)
    if data[0] == 'JINV':
        return ('JINV', int(data[1]), int(data[2]))
    if data[0] == 'COEFF':
        return ('COEFF', str(data[1]), int(data[2]))
    raise ProgramError(f"unknown token {data[0]!r}")


def program_to_dict(program):
    groups = []
    for group in program.groups:
        schedule = [[] for _ in range(group.rows)]
        for row, col in zip(group.schedule_rows, group.schedule_cols):
            schedule[int(row)].append(int(col))
        groups.append({
            'rows': group.rows,
            'cols': group.cols,
            'secondary_shape': list(group.secondary_shape),
            'a0': [_real(x) for x in group.a0.ravel()],
            'recipe': [[[_token_to_json(t) for t in term] for term in terms] for terms in group.recipe],
            'schedule': schedule,
        })
    return {
        'format': PROGRAM_FORMAT,
        'version': FORMAT_VERSION,
        'name': program.name,
        'arity': program.arity,
        'dimension': program.dimension,
        'output_shape': list(program.output_shape),
        'coefficients': [[name, size] for name, size in program.coefficients],
        'epsilon_zero': _real(program.epsilon_zero),
        'groups': groups,
    }


def program_from_dict(data):
    if data.get('format') != PROGRAM_FORMAT:
        raise ProgramError(f"not a contraction program (format {data.get('format')!r})")
    output_shape = tuple(int(n) for n in data['output_shape'])
    groups = []
    for entry in data['groups']:
        rows, cols = int(entry['rows']), int(entry['cols'])
        a0 = np.array([float(x) for x in entry['a0']]).reshape(rows, cols)
        if rows != prod(output_shape):
            raise ProgramError(f"group has {rows} rows for an output of {prod(output_shape)} entries")
        recipe = [[tuple(_token_from_json(t) for t in term) for term in terms] for terms in entry['recipe']]
        if len(recipe) != cols:
            raise ProgramError(f"recipe covers {len(recipe)} of {cols} geometry entries")
        pairs = [(r, int(c)) for r, row_cols in enumerate(entry['schedule']) for c in row_cols]
        if len(entry['schedule']) != rows or any(not 0 <= c < cols for _, c in pairs):
            raise ProgramError("schedule does not match the A0 shape")
        schedule_rows = np.array([r for r, _ in pairs], dtype=int)
        schedule_cols = np.array([c for _, c in pairs], dtype=int)
        groups.append(ProgramGroup(a0, tuple(entry['secondary_shape']), recipe, schedule_rows, schedule_cols))
    return ContractionProgram(
        name=data['name'],
        arity=int(data['arity']),
        dimension=int(data['dimension']),
        output_shape=output_shape,
        coefficients=[(str(name), int(size)) for name, size in data['coefficients']],
        epsilon_zero=float(data['epsilon_zero']),
        groups=groups,
    )


def dumps_program(program):
    return json.dumps(program_to_dict(program), sort_keys=True, separators=(',', ':')) + '\n'


def save_program(program, path):
    Path(path).write_text(dumps_program(program), encoding='utf-8')


def load_program(path):
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
        return program_from_dict(data)
    except ProgramError:
        raise
    except (KeyError, ValueError, TypeError, IndexError, AttributeError) as e:
        raise ProgramError(f"malformed program file {path}: {e}")


def save_a0(compiled, path):
    """Reference tensors with axis metadata, in the program container format"""
    groups = []
    for tensor in compiled.tensors:
        groups.append({
            'primary': [[i.id, i.range] for i in tensor.primary],
            'secondary': [[a.id, a.range] for a in tensor.secondary],
            'shape': list(tensor.shape),
            'provenance': tensor.provenance,
            'values': [_real(x) for x in tensor.values.ravel()],
        })
    data = {'format': A0_FORMAT, 'version': FORMAT_VERSION, 'name': compiled.form.name, 'groups': groups}
    Path(path).write_text(json.dumps(data, sort_keys=True, separators=(',', ':')) + '\n', encoding='utf-8')
