"""
Benchmark - naive vs assembled reference tensor computation over the corpus
"""

import logging
import re
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from tfc_corpus import BENCH_DEGREES
from tfc_errors import FormCompilerError, MemoryGuardError
from tfc_main_app import FormCompiler

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['form', 'dim', 'q', 'algorithm', 'seconds', 'multiplies', 'entries', 'speedup']
DEFAULT_CASES = [
    'mass:2:1-3',
    'poisson:2:1-3',
    'navier_stokes:2:1-2',
    'elasticity:2:1-2',
    'stabilization:2:1',
]

_CASE = re.compile(r'^(?P<form>\w+):(?P<dim>[123]):(?P<low>\d+)(?:-(?P<high>\d+))?$')


@dataclass
class BenchRecord:
    form: str
    dim: int
    q: int
    algorithm: str
    seconds: float
    multiplies: int
    entries: int
    speedup: float = float('nan')

    def __post_init__(self):
        if self.seconds < 0:
            raise ValueError(f"negative time {self.seconds} for {self.form}")


def parse_case(text):
    """'poisson:2:1-3' -> ('poisson', 2, [1, 2, 3])"""
    match = _CASE.match(text.strip())
    if not match:
        raise FormCompilerError(f"bad benchmark case '{text}' (expected form:dim:q or form:dim:qlo-qhi)")
    low = int(match['low'])
    high = int(match['high'] or low)
    if low < 1 or high < low:
        raise FormCompilerError(f"bad degree range in '{text}'")
    return match['form'], int(match['dim']), list(range(low, high + 1))


def full_cases(dimensions=(2, 3)):
    """Every corpus form up to its benchmark degree cap"""
    return [f"{name}:{dim}:1-{cap}" for name, cap in BENCH_DEGREES.items() for dim in dimensions]


class BenchmarkRunner:
    def __init__(self, compiler=None, repeats=3):
        self.compiler = compiler or FormCompiler()
        self.repeats = repeats

    def time_case(self, name, dim, q, algorithm):
        form = self.compiler.corpus.load_form(name, degree=q, dimension=dim)
        options = self.compiler.options.updated(algorithm=algorithm, workers=1)
        runs = []
        compiled = None
        for _ in range(self.repeats):
            compiled = self.compiler.compile(form, options)
            runs.append(compiled.seconds)
        return BenchRecord(name, dim, q, algorithm, float(np.median(runs)), compiled.multiplies, compiled.entries)

    def run(self, cases=None):
        records = []
        for case in cases or DEFAULT_CASES:
            name, dim, degrees = parse_case(case)
            for q in degrees:
                try:
                    naive = self.time_case(name, dim, q, 'naive')
                    assembled = self.time_case(name, dim, q, 'assembled')
                except MemoryGuardError as e:
                    logger.warning("skipping %s %dD q=%d: %s", name, dim, q, e)
                    continue
                naive.speedup = 1.0
                assembled.speedup = naive.seconds / assembled.seconds if assembled.seconds > 0 else float('inf')
                records.extend([naive, assembled])
                logger.info("%s %dD q=%d: naive %.4fs, assembled %.4fs", name, dim, q,
                            naive.seconds, assembled.seconds)
        return records

    def show_results(self, records):
        print(f"\n{'='*80}")
        print("📊 REFERENCE TENSOR BENCHMARK")
        print(f"{'='*80}")
        if not records:
            print("✗ No cases ran")
            return
        print(to_frame(records).to_string(index=False))
        print(f"\n{'-'*80}")
        print("Speedup (naive / assembled seconds)")
        print(speedup_table(records).to_string())


def to_frame(records):
    return pd.DataFrame([asdict(r) for r in records], columns=CSV_COLUMNS)


def write_csv(records, path):
    to_frame(records).to_csv(path, index=False)


def speedup_table(records):
    """Rows (form, dim), one column per degree q"""
    frame = to_frame(records)
    frame = frame[frame['algorithm'] == 'assembled']
    return frame.pivot_table(index=['form', 'dim'], columns='q', values='speedup')
