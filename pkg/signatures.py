"""
Signatures - identify monomials that share a reference tensor

The hard signature spells out a lowered integrand factor by factor (element,
basis index, component, reference derivatives), numbering secondary and
auxiliary indices by their canonical position. Two monomials with equal hard
signatures integrate to the same A0. The soft signature drops the numbers and
the factor order; monomials that agree there may still share A0 after a
relabeling of their secondary indices, which factorize() searches for.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

from tfc_forms import Index, IndexKind
from tfc_lowering import LoweredMonomial, ReferenceMonomial, order_secondary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signature:
    hard: str
    soft: str


def _reference(monomial):
    return monomial.reference if isinstance(monomial, LoweredMonomial) else monomial


def _factor_tags(ref, soft):
    secondary = {a.id: n for n, a in enumerate(ref.secondary)}
    auxiliary = {b.id: n for n, b in enumerate(ref.auxiliary)}

    def tag(index):
        if index.is_fixed:
            return str(index.fixed_value)
        if index.kind is IndexKind.PRIMARY:
            return index.id
        if index.id in secondary:
            return 'a' if soft else f"a{secondary[index.id]}"
        if index.id in auxiliary:
            return 'b' if soft else f"b{auxiliary[index.id]}"
        return '?'

    tags = []
    for factor in ref.factors:
        component = f"[{tag(factor.component)}]" if factor.component is not None else "[]"
        derivatives = "[" + ", ".join(f"(d/dX{tag(d)})" for d in factor.derivatives) + "]"
        tags.append(f"{{{factor.element.description()};{tag(factor.basis_index)};{component};{derivatives}}}")
    return tags


def hard_signature(monomial):
    return '*'.join(_factor_tags(_reference(monomial), soft=False) + ['dX'])


def soft_signature(monomial):
    return '*'.join(sorted(_factor_tags(_reference(monomial), soft=True)) + ['dX'])


def signature(monomial):
    return Signature(hard_signature(monomial), soft_signature(monomial))


def lift_component_sums(lowered):
    """
    Split every integrand-only component sum into one secondary index per
    occurrence, tied together by Kronecker deltas in the geometry tensor.
    """
    ref = lowered.reference
    occurrences = {}
    for factor in ref.factors:
        component = factor.component
        if component is not None and component.kind is IndexKind.AUXILIARY:
            occurrences.setdefault(component.id, []).append(factor)
    liftable = {i for i, found in occurrences.items() if len(found) > 1}
    if not liftable:
        return lowered

    lifted = {i: [] for i in liftable}
    factors = []
    for factor in ref.factors:
        component = factor.component
        if component is not None and component.id in liftable:
            fresh = Index(f"{component.id}'{len(lifted[component.id])}", IndexKind.SECONDARY, component.range)
            lifted[component.id].append(fresh)
            factor = replace(factor, component=fresh)
        factors.append(factor)

    pairs = tuple((copies[0], other) for copies in lifted.values() for other in copies[1:])
    by_id = {}
    for factor in factors:
        for index in [factor.basis_index, factor.component, *factor.derivatives]:
            if index is not None:
                by_id.setdefault(index.id, index)
    secondary_ids = {a.id for a in ref.secondary} | {c.id for copies in lifted.values() for c in copies}
    secondary = tuple(by_id[i] for i in order_secondary(factors, secondary_ids))
    auxiliary = tuple(b for b in ref.auxiliary if b.id not in liftable)

    reference = ReferenceMonomial(tuple(factors), ref.primary, secondary, auxiliary)
    geometry = replace(lowered.geometry, secondary=secondary,
                       kronecker_pairs=lowered.geometry.kronecker_pairs + pairs)
    return LoweredMonomial(reference, geometry, lowered.source)


@dataclass
class GroupMember:
    monomial: int
    permutation: tuple
    lowered: LoweredMonomial
    geometry: object

    @property
    def is_identity(self):
        return self.permutation == tuple(range(len(self.permutation)))


@dataclass
class FactorGroup:
    representative: LoweredMonomial
    signature: Signature
    members: list = field(default_factory=list)


class _Matcher:
    """Bijections between member and representative indices, built slot by slot"""

    def __init__(self, rep_ref):
        self.secondary = {a.id: n for n, a in enumerate(rep_ref.secondary)}
        self.auxiliary = {b.id: n for n, b in enumerate(rep_ref.auxiliary)}
        self.forward = {}
        self.backward = {}

    def _bind(self, member_id, position):
        if self.forward.setdefault(member_id, position) != position:
            return False
        return self.backward.setdefault(position, member_id) == member_id

    def match(self, rep_index, member_index):
        if rep_index is None or member_index is None:
            return rep_index is None and member_index is None
        if rep_index.kind is not member_index.kind or rep_index.range != member_index.range:
            return False
        if rep_index.is_fixed:
            return rep_index.fixed_value == member_index.fixed_value
        if rep_index.kind is IndexKind.PRIMARY:
            return rep_index.id == member_index.id
        if rep_index.kind is IndexKind.SECONDARY:
            return self._bind(member_index.id, ('a', self.secondary[rep_index.id]))
        return self._bind(member_index.id, ('b', self.auxiliary[rep_index.id]))


def _orderings(rep_factors, member_factors):
    """Member factor orders aligning factors of identical element and role"""
    def key(factor):
        return (factor.element, factor.is_coefficient)

    slots = {}
    for t, factor in enumerate(rep_factors):
        slots.setdefault(key(factor), []).append(t)
    pools = {}
    for s, factor in enumerate(member_factors):
        pools.setdefault(key(factor), []).append(s)
    if {k: len(v) for k, v in slots.items()} != {k: len(v) for k, v in pools.items()}:
        return
    keys = list(slots)
    for choice in itertools.product(*(itertools.permutations(pools[k]) for k in keys)):
        ordering = [None] * len(rep_factors)
        for k, assigned in zip(keys, choice):
            for t, s in zip(slots[k], assigned):
                ordering[t] = s
        yield ordering


def unify(representative, member):
    """
    Relabel `member` onto `representative`. Returns (permutation, geometry)
    with permutation[p] = member secondary position landing on position p,
    and the member's geometry re-indexed to the representative's axis order;
    None when no relabeling makes the hard signatures equal.
    """
    rep = representative.reference
    mem = member.reference
    if len(rep.factors) != len(mem.factors) or len(rep.secondary) != len(mem.secondary):
        return None
    target = hard_signature(rep)
    member_positions = {a.id: n for n, a in enumerate(mem.secondary)}
    member_by_id = {a.id: a for a in mem.secondary + mem.auxiliary}

    for ordering in _orderings(rep.factors, mem.factors):
        matcher = _Matcher(rep)
        consistent = True
        for t, s in enumerate(ordering):
            rf, mf = rep.factors[t], mem.factors[s]
            if len(rf.derivatives) != len(mf.derivatives):
                consistent = False
                break
            pairs = [(rf.basis_index, mf.basis_index), (rf.component, mf.component)]
            pairs += list(zip(rf.derivatives, mf.derivatives))
            if not all(matcher.match(r, m) for r, m in pairs):
                consistent = False
                break
        if not consistent:
            continue

        secondary = tuple(member_by_id[matcher.backward[('a', p)]] for p in range(len(rep.secondary)))
        auxiliary = tuple(member_by_id[matcher.backward[('b', p)]] for p in range(len(rep.auxiliary)))
        reordered = ReferenceMonomial(tuple(mem.factors[s] for s in ordering), mem.primary, secondary, auxiliary)
        if hard_signature(reordered) != target:
            continue
        permutation = tuple(member_positions[a.id] for a in secondary)
        return permutation, replace(member.geometry, secondary=secondary)
    return None


def factorize(lowered):
    """Group lowered monomials by shared reference tensor"""
    softs = [soft_signature(lm) for lm in lowered]
    work = list(lowered)
    for n, lm in enumerate(lowered):
        lifted = lift_component_sums(lm)
        if lifted is lm:
            continue
        lifted_soft = soft_signature(lifted)
        if lifted_soft != softs[n] and any(lifted_soft == s for o, s in enumerate(softs) if o != n):
            work[n] = lifted

    groups = []
    for n, lm in enumerate(work):
        sig = signature(lm)
        identity = tuple(range(len(lm.reference.secondary)))
        for group in groups:
            if group.signature.hard == sig.hard:
                group.members.append(GroupMember(n, identity, lm, lm.geometry))
                break
            if group.signature.soft == sig.soft:
                found = unify(group.representative, lm)
                if found is not None:
                    permutation, geometry = found
                    group.members.append(GroupMember(n, permutation, lm, geometry))
                    break
        else:
            groups.append(FactorGroup(lm, sig, [GroupMember(n, identity, lm, lm.geometry)]))

    logger.debug("factorized %d monomials into %d reference tensors", len(lowered), len(groups))
    return groups
