"""
Tensor Form Compiler - command line

    form_compiler_cli.py compile FORM [--algorithm naive|assembled] [-o DIR] ...
    form_compiler_cli.py verify FORM MESH [--seed N] [--program PATH] ...
    form_compiler_cli.py bench [CASE ...] [--full] [--csv PATH]

FORM is a .form path or a corpus name, MESH a .mesh path or a bundled mesh
name. Exit codes: 0 ok, 1 usage, 2 parse, 3 verification, 4 memory guard.
"""

import argparse
import logging
import sys
from pathlib import Path

from benchmark import BenchmarkRunner, DEFAULT_CASES, full_cases, write_csv
from codegen import load_program
from geometry_runtime import read_mesh
from reference_tensor import ALGORITHMS
from tfc_errors import FormCompilerError, UsageError, VerificationError
from tfc_main_app import DEFAULT_TOLERANCE, CompilerOptions, FormCompiler

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_compiler_options(parser):
    parser.add_argument('--algorithm', choices=ALGORITHMS, default=None,
                        help="reference tensor algorithm (default assembled)")
    parser.add_argument('--quad-degree', type=int, default=None,
                        help="override the exact quadrature degree")
    parser.add_argument('--max-entries', type=int, default=None,
                        help="refuse reference tensors with more entries than this")
    parser.add_argument('--workers', type=int, default=None,
                        help="threads for the assembled algorithm")
    parser.add_argument('--config', default=None, help="JSON file with compiler options")
    parser.add_argument('-v', '--verbose', action='store_true')


def build_parser():
    parser = _ArgumentParser(prog='form_compiler_cli.py', description="Tensor representation form compiler")
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True

    compile_parser = commands.add_parser('compile', help="compile a form to a contraction program")
    compile_parser.add_argument('form')
    compile_parser.add_argument('-o', '--output-dir', default='.')
    compile_parser.add_argument('--dump-signatures', action='store_true')
    compile_parser.add_argument('--dump-a0', action='store_true')
    _add_compiler_options(compile_parser)
    compile_parser.set_defaults(handler=cmd_compile)

    verify_parser = commands.add_parser('verify', help="check a compiled form against direct quadrature")
    verify_parser.add_argument('form')
    verify_parser.add_argument('mesh')
    verify_parser.add_argument('--seed', type=int, default=0)
    verify_parser.add_argument('--program', default=None, help="verify this .prog instead of recompiling")
    verify_parser.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE)
    _add_compiler_options(verify_parser)
    verify_parser.set_defaults(handler=cmd_verify)

    bench_parser = commands.add_parser('bench', help="time naive vs assembled reference tensors")
    bench_parser.add_argument('cases', nargs='*', help="form:dim:q or form:dim:qlo-qhi")
    bench_parser.add_argument('--full', action='store_true', help="every corpus form up to its degree cap")
    bench_parser.add_argument('--csv', default=None, help="write the records to this CSV file")
    bench_parser.add_argument('--repeats', type=int, default=3)
    _add_compiler_options(bench_parser)
    bench_parser.set_defaults(handler=cmd_bench)
    return parser


def _compiler(args):
    options = CompilerOptions.from_json(args.config) if args.config else CompilerOptions()
    options = options.updated(algorithm=args.algorithm, quad_degree=args.quad_degree,
                              max_entries=args.max_entries, workers=args.workers)
    return FormCompiler(options)


def _mesh(compiler, name_or_path):
    path = Path(name_or_path)
    if path.suffix == '.mesh' or path.is_file():
        return read_mesh(path)
    return compiler.corpus.load_mesh(name_or_path)


def cmd_compile(args):
    compiler = _compiler(args)
    compiled = compiler.compile(compiler.load(args.form), stem=Path(args.form).stem)
    compiler.show_compilation(compiled)
    if args.dump_signatures:
        compiler.show_signatures(compiled)
    for path in compiler.write_artifacts(compiled, args.output_dir, dump_a0=args.dump_a0):
        print(f"✓ wrote {path}")
    return 0


def cmd_verify(args):
    compiler = _compiler(args)
    compiled = compiler.compile(compiler.load(args.form), stem=Path(args.form).stem)
    program = load_program(args.program) if args.program else None
    report = compiler.verify(compiled, _mesh(compiler, args.mesh), seed=args.seed,
                             program=program, tolerance=args.tolerance)
    compiler.show_verification(report)
    if not report.passed:
        raise VerificationError(
            f"max relative error {report.max_error:.3e} exceeds {report.tolerance:.0e}"
        )
    return 0


def cmd_bench(args):
    if args.repeats < 1:
        raise UsageError(f"--repeats must be at least 1, got {args.repeats}")
    runner = BenchmarkRunner(_compiler(args), repeats=args.repeats)
    cases = list(args.cases)
    if args.full:
        cases += full_cases()
    records = runner.run(cases or DEFAULT_CASES)
    runner.show_results(records)
    if args.csv:
        write_csv(records, args.csv)
        print(f"\n✓ wrote {args.csv}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format='%(levelname)s %(name)s: %(message)s')
        return args.handler(args)
    except FormCompilerError as e:
        print(f"✗ {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"✗ {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
