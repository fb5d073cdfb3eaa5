"""
Reference Tensor - A0 by per-entry quadrature and by assembled outer products

Both algorithms integrate the same reference integrand with the same rule:

    naive      for every entry (i, alpha) and every beta, sum over points of
               w_k * prod_j Psi_j
    assembled  for every point, build w_k (x) Psi_1 (x) ... (x) Psi_m as one
               outer product (factors that ignore beta multiplied once, the
               beta-dependent chain summed over beta), accumulate it, and
               permute the accumulated axes to canonical order at the end
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import prod

import numpy as np

from tfc_errors import MemoryGuardError, ReferenceTensorError
from tfc_forms import IndexKind

logger = logging.getLogger(__name__)

DEFAULT_MAX_ENTRIES = 2 ** 27
ALGORITHMS = ('naive', 'assembled')


@dataclass(eq=False)
class ReferenceTensor:
    values: np.ndarray
    primary: tuple
    secondary: tuple
    provenance: str
    multiplies: int = 0

    @property
    def shape(self):
        return self.values.shape

    @property
    def rank(self):
        return self.values.ndim

    @property
    def entry_count(self):
        return int(self.values.size)

    @property
    def primary_size(self):
        return prod(i.range for i in self.primary)

    @property
    def secondary_size(self):
        return prod(a.range for a in self.secondary)

    def flattened(self):
        """A0 as a |I| x |A| matrix, rows and columns in row-major multiindex order"""
        return self.values.reshape(self.primary_size, self.secondary_size)


@dataclass(eq=False)
class PsiTable:
    """
    Tabulated factor: values[point, dof, component, direction_1, ..., direction_m].

    Scalar elements carry a component axis of length one.
    """
    factor: object
    values: np.ndarray

    @property
    def beta_id(self):
        component = self.factor.component
        if component is not None and component.kind is IndexKind.AUXILIARY:
            return component.id
        return None

    @property
    def labels(self):
        """Index ids of the axes left after slicing out components fixed by value or beta"""
        factor = self.factor
        labels = [factor.basis_index.id]
        if factor.component is not None and factor.component.kind is IndexKind.SECONDARY:
            labels.append(factor.component.id)
        labels.extend(d.id for d in factor.derivatives)
        return labels

    def slice(self, beta=None):
        component = self.factor.component
        if component is None:
            selector = 0
        elif component.is_fixed:
            selector = component.fixed_value
        elif component.kind is IndexKind.AUXILIARY:
            selector = beta[component.id]
        else:
            selector = slice(None)
        return self.values[:, :, selector]


def _full_table(element, order, points):
    d = element.dimension
    shape = (len(points), element.space_dimension, element.vector_size) + (d,) * order
    table = np.empty(shape)
    for directions in itertools.product(range(d), repeat=order):
        values = element.values(points, directions)
        if not element.is_vector:
            values = values[:, :, None]
        table[(slice(None), slice(None), slice(None)) + directions] = values
    return table


def tabulate_psi_tables(ref_monomial, rule):
    """One Psi table per factor; identical (element, derivative order) requests share one array"""
    cache = {}
    tables = []
    for factor in ref_monomial.factors:
        key = (factor.element, len(factor.derivatives))
        if key not in cache:
            cache[key] = _full_table(factor.element, len(factor.derivatives), rule.points)
        tables.append(PsiTable(factor, cache[key]))
    logger.debug("tabulated %d Psi tables (%d distinct) at %d points", len(tables), len(cache), rule.size)
    return tables


def check_memory(ref_monomial, max_entries=DEFAULT_MAX_ENTRIES):
    entries = ref_monomial.entry_count
    if max_entries is not None and entries > max_entries:
        raise MemoryGuardError(entries, max_entries)
    return entries


def _allocate(shape):
    try:
        return np.zeros(shape)
    except MemoryError:
        raise ReferenceTensorError(f"could not allocate a reference tensor of {prod(shape):,} entries")


def compute_naive(ref_monomial, rule, max_entries=DEFAULT_MAX_ENTRIES):
    """Per-entry quadrature, one pass over the points for every (i, alpha, beta)"""
    check_memory(ref_monomial, max_entries)
    tables = tabulate_psi_tables(ref_monomial, rule)
    shape = ref_monomial.shape
    values = _allocate(shape)
    flat_values = values.reshape(-1)

    # rows[c] holds the point values of one flattened (dof, component, directions) column
    rows = [t.values.reshape(rule.size, -1).T.copy() for t in tables]
    strides = [np.cumprod((1,) + t.values.shape[:1:-1])[::-1] for t in tables]

    def locator(factor):
        getters = [factor.basis_index]
        getters.append(factor.component)
        getters.extend(factor.derivatives)
        return getters

    locators = [locator(t.factor) for t in tables]
    entry_ids = [i.id for i in ref_monomial.primary + ref_monomial.secondary]
    aux_ids = [b.id for b in ref_monomial.auxiliary]
    betas = list(itertools.product(*(range(b.range) for b in ref_monomial.auxiliary)))
    weights = rule.weights

    def column(getters, stride, assignment):
        offset = 0
        for index, step in zip(getters, stride):
            if index is None:
                position = 0
            elif index.is_fixed:
                position = index.fixed_value
            else:
                position = assignment[index.id]
            offset += position * step
        return offset

    for flat, entry in enumerate(itertools.product(*(range(n) for n in shape))):
        assignment = dict(zip(entry_ids, entry))
        total = 0.0
        for beta in betas:
            assignment.update(zip(aux_ids, beta))
            integrand = weights
            for table_rows, getters, stride in zip(rows, locators, strides):
                integrand = integrand * table_rows[column(getters, stride, assignment)]
            total += integrand.sum()
        flat_values[flat] = total

    multiplies = flat_values.size * len(betas) * len(tables) * rule.size
    return ReferenceTensor(values, ref_monomial.primary, ref_monomial.secondary, 'naive', multiplies)


def _einsum_letters(ids):
    alphabet = 'abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'
    letters = {}
    for index_id in ids:
        if index_id not in letters:
            if len(letters) == len(alphabet):
                raise ReferenceTensorError("too many distinct indices for one contraction")
            letters[index_id] = alphabet[len(letters)]
    return letters


def compute_assembled(ref_monomial, rule, max_entries=DEFAULT_MAX_ENTRIES, workers=1):
    """Point-driven accumulation of hoisted outer products"""
    check_memory(ref_monomial, max_entries)
    tables = tabulate_psi_tables(ref_monomial, rule)
    aux_ids = [b.id for b in ref_monomial.auxiliary]
    betas = [dict(zip(aux_ids, beta))
             for beta in itertools.product(*(range(b.range) for b in ref_monomial.auxiliary))]

    invariant = [t for t in tables if t.beta_id is None]
    dependent = [t for t in tables if t.beta_id is not None]
    labels = [label for t in invariant + dependent for label in t.labels]
    invariant_slices = [t.slice() for t in invariant]
    dependent_slices = [[t.slice(beta) for beta in betas] for t in dependent]
    weights = rule.weights

    def accumulate(points):
        accumulated = None
        count = 0
        for k in points:
            w = weights[k]
            block = None
            for table in invariant_slices:
                if block is None:
                    block = w * table[k]
                else:
                    block = np.multiply.outer(block, table[k])
                count += block.size
            if dependent_slices:
                summed = None
                for b in range(len(betas)):
                    chain = None
                    for per_beta in dependent_slices:
                        piece = per_beta[b][k]
                        if chain is None:
                            chain = piece if block is not None else w * piece
                            if block is None:
                                count += chain.size
                        else:
                            chain = np.multiply.outer(chain, piece)
                            count += chain.size
                    summed = chain if summed is None else summed + chain
                if block is None:
                    block = summed
                else:
                    block = np.multiply.outer(block, summed)
                    count += block.size
            if block is None:
                block = np.asarray(w)
            if accumulated is None:
                accumulated = np.array(block, dtype=float)
            else:
                accumulated += block
        return accumulated, count

    if workers > 1 and rule.size > 1:
        chunks = [c for c in np.array_split(np.arange(rule.size), workers) if len(c)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(accumulate, chunks))
        accumulated = partials[0][0]
        for partial, _ in partials[1:]:
            accumulated = accumulated + partial
        multiplies = sum(count for _, count in partials)
    else:
        accumulated, multiplies = accumulate(range(rule.size))

    canonical = [i.id for i in ref_monomial.primary + ref_monomial.secondary]
    letters = _einsum_letters(labels + canonical)
    subscripts = ''.join(letters[x] for x in labels) + '->' + ''.join(letters[x] for x in canonical)
    try:
        values = np.ascontiguousarray(np.einsum(subscripts, accumulated))
    except MemoryError:
        raise ReferenceTensorError(f"could not allocate a reference tensor of {ref_monomial.entry_count:,} entries")
    if values.shape != ref_monomial.shape:
        raise ReferenceTensorError(f"assembled tensor has shape {values.shape}, expected {ref_monomial.shape}")
    logger.debug("assembled A0 %s over %d points, %d multiplies", values.shape, rule.size, multiplies)
    return ReferenceTensor(values, ref_monomial.primary, ref_monomial.secondary, 'assembled', multiplies)


def compute_reference_tensor(ref_monomial, rule, algorithm='assembled', max_entries=DEFAULT_MAX_ENTRIES, workers=1):
    if algorithm == 'naive':
        return compute_naive(ref_monomial, rule, max_entries)
    if algorithm == 'assembled':
        return compute_assembled(ref_monomial, rule, max_entries, workers)
    raise ReferenceTensorError(f"unknown algorithm '{algorithm}' (use one of {', '.join(ALGORITHMS)})")


def permute_axes(values, rank_primary, permutation):
    """
    Reorder secondary axes: result axis (primary + q) is source axis
    (primary + p) where permutation[p] == q.
    """
    inverse = [0] * len(permutation)
    for p, q in enumerate(permutation):
        inverse[q] = p
    axes = list(range(rank_primary)) + [rank_primary + inverse[q] for q in range(len(permutation))]
    return np.transpose(values, axes)
