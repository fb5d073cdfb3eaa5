"""
Tensor Form Compiler Web Application - JSON API over the compiler
"""

from flask import Flask, request, jsonify
from flask_cors import CORS

from codegen import render_c_like
from tfc_errors import FormCompilerError
from tfc_forms import format_form, parse
from tfc_main_app import DEFAULT_TOLERANCE, FormCompiler

app = Flask(__name__)
CORS(app)

# Global compiler instance
compiler = None


def get_compiler():
    """Get or create the compiler instance"""
    global compiler
    if compiler is None:
        compiler = FormCompiler()
        compiler.initialize()
    return compiler


def _form_from_request(data):
    """A form given inline as 'source' or by corpus 'form' name"""
    comp = get_compiler()
    degree = data.get('degree')
    dimension = data.get('dimension')
    if data.get('source'):
        rescale = (degree, dimension) if degree is not None or dimension is not None else None
        return parse(data['source'], rescale=rescale)
    if not data.get('form'):
        raise FormCompilerError("request needs a corpus 'form' name or inline 'source'")
    return comp.corpus.load_form(data['form'], degree, dimension)


def _compile_from_request(data):
    comp = get_compiler()
    options = comp.options.updated(algorithm=data.get('algorithm'), quad_degree=data.get('quad_degree'))
    return comp.compile(_form_from_request(data), options, stem=data.get('form'))


def _failure(e):
    status = 400 if isinstance(e, FormCompilerError) else 500
    return jsonify({'success': False, 'error': str(e)}), status


@app.route('/')
def home():
    """Service summary"""
    try:
        comp = get_compiler()
        return jsonify({
            'success': True,
            'data': {
                'forms': comp.corpus.form_names(),
                'meshes': comp.corpus.mesh_names(),
                'algorithm': comp.options.algorithm,
            }
        })
    except Exception as e:
        return _failure(e)


@app.route('/api/corpus', methods=['GET'])
def corpus():
    """Bundled forms and meshes"""
    try:
        comp = get_compiler()
        return jsonify({
            'success': True,
            'data': {
                'forms': comp.corpus.list_forms().to_dict('records'),
                'meshes': comp.corpus.list_meshes().to_dict('records'),
            }
        })
    except Exception as e:
        return _failure(e)


@app.route('/api/compile', methods=['POST'])
def compile_form():
    """Compile a form and return its reference tensors and generated code"""
    try:
        data = request.json or {}
        compiled = _compile_from_request(data)
        program = compiled.program
        groups = [{
            'members': len(group.members),
            'shape': list(tensor.shape),
            'entries': tensor.entry_count,
            'multiplies': tensor.multiplies,
            'scheduled': program_group.scheduled,
        } for group, tensor, program_group in zip(compiled.groups, compiled.tensors, program.groups)]

        return jsonify({
            'success': True,
            'data': {
                'name': compiled.name,
                'form': format_form(compiled.form),
                'algorithm': compiled.options.algorithm,
                'seconds': compiled.seconds,
                'groups': groups,
                'scheduled_multiplies': program.scheduled_multiplies,
                'code': render_c_like(program),
            }
        })
    except Exception as e:
        return _failure(e)


@app.route('/api/signatures', methods=['POST'])
def signatures():
    """Hard and soft signatures of every monomial, with its reference tensor group"""
    try:
        data = request.json or {}
        compiled = _compile_from_request(data)
        table = get_compiler().signature_table(compiled)
        return jsonify({
            'success': True,
            'data': {
                'groups': len(compiled.groups),
                'monomials': table.to_dict('records'),
            }
        })
    except Exception as e:
        return _failure(e)


@app.route('/api/verify', methods=['POST'])
def verify():
    """Check the contraction program against direct quadrature on a bundled mesh"""
    try:
        data = request.json or {}
        mesh_name = data.get('mesh')
        if not mesh_name:
            return jsonify({'success': False, 'error': 'Mesh name required'}), 400

        comp = get_compiler()
        compiled = _compile_from_request(data)
        mesh = comp.corpus.load_mesh(mesh_name)
        report = comp.verify(compiled, mesh, seed=int(data.get('seed', 0)),
                             tolerance=float(data.get('tolerance', DEFAULT_TOLERANCE)))
        return jsonify({
            'success': True,
            'data': {
                'form': report.form,
                'cells': report.cells,
                'max_error': report.max_error,
                'tolerance': report.tolerance,
                'passed': report.passed,
            }
        })
    except Exception as e:
        return _failure(e)


if __name__ == '__main__':
    print("\n" + "="*80)
    print("🚀 TENSOR FORM COMPILER WEB SERVER STARTING...")
    print("="*80)
    print("\n📍 API available at:")
    print("   http://localhost:5000/api/corpus")
    print("\n⏹  Press Ctrl+C to stop the server")
    print("="*80 + "\n")

    app.run(debug=True, host='0.0.0.0', port=5000)
