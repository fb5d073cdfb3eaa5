"""
Lowering - split each monomial into a reference integrand and a geometry expression

Physical derivatives are pulled back to the reference cell through the
affine map (one Jacobian-inverse entry per derivative), then every summation
index is classified by where it occurs:

    integrand and geometry  -> secondary (contracted between A0 and G)
    integrand only          -> auxiliary, summed inside A0
    geometry only           -> auxiliary, summed inside G
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

from tfc_errors import LoweringError
from tfc_forms import Index, IndexKind, format_factor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JacobianFactor:
    """One entry dX_reference / dx_physical of the inverse Jacobian"""
    reference: object
    physical: object


@dataclass(frozen=True)
class ReferenceFactor:
    function: object
    basis_index: object
    component: object = None
    derivatives: tuple = ()

    @property
    def element(self):
        return self.function.element

    @property
    def is_coefficient(self):
        return self.function.is_coefficient


@dataclass(frozen=True)
class ChainRuleMonomial:
    constant: Fraction
    factors: tuple
    jacobian_factors: tuple
    source: object


@dataclass(frozen=True)
class ReferenceMonomial:
    factors: tuple
    primary: tuple
    secondary: tuple
    auxiliary: tuple

    @property
    def rank(self):
        return len(self.primary) + len(self.secondary)

    @property
    def primary_shape(self):
        return tuple(i.range for i in self.primary)

    @property
    def secondary_shape(self):
        return tuple(a.range for a in self.secondary)

    @property
    def shape(self):
        return self.primary_shape + self.secondary_shape

    @property
    def entry_count(self):
        return prod(self.shape)

    @property
    def dimension(self):
        return self.factors[0].element.dimension if self.factors else None


@dataclass(frozen=True)
class GeometryTensorExpr:
    constant: Fraction
    coefficient_refs: tuple
    jacobian_factors: tuple
    auxiliary: tuple
    secondary: tuple
    kronecker_pairs: tuple = ()

    includes_detF = True

    @property
    def shape(self):
        return tuple(a.range for a in self.secondary)


@dataclass(frozen=True)
class LoweredMonomial:
    reference: ReferenceMonomial
    geometry: GeometryTensorExpr
    source: object = field(compare=False)


def apply_chain_rule(monomial, first_fresh=0):
    """Replace every physical derivative by a fresh reference direction plus a Jacobian entry"""
    counter = first_fresh
    factors = []
    jacobian = []
    for factor in monomial.factors:
        references = []
        for physical in factor.derivatives:
            fresh = Index(f"dX:{counter}", IndexKind.FREE, factor.element.dimension)
            counter += 1
            references.append(fresh)
            jacobian.append(JacobianFactor(fresh, physical))
        factors.append(ReferenceFactor(factor.function, factor.basis_index, factor.component, tuple(references)))
    return ChainRuleMonomial(monomial.constant, tuple(factors), tuple(jacobian), monomial)


def _integrand_indices(factor):
    found = []
    if factor.is_coefficient:
        found.append(factor.basis_index)
    if factor.component is not None and not factor.component.is_fixed:
        found.append(factor.component)
    found.extend(factor.derivatives)
    return found


def order_secondary(factors, secondary_ids):
    """
    Canonical secondary order: coefficient basis slots in coefficient
    declaration order (repeated uses of one coefficient in factor order), then
    component slots, then reference-derivative slots.
    """
    ordered = []

    def take(index):
        if index is not None and index.id in secondary_ids and index.id not in ordered:
            ordered.append(index.id)

    for factor in sorted((f for f in factors if f.is_coefficient), key=lambda f: f.function.number):
        take(factor.basis_index)
    for factor in factors:
        take(factor.component)
    for factor in factors:
        for d in factor.derivatives:
            take(d)
    return ordered


def classify_indices(intermediate):
    integrand = {}
    for factor in intermediate.factors:
        for index in _integrand_indices(factor):
            integrand.setdefault(index.id, index)
    geometry = {}
    for factor in intermediate.factors:
        if factor.is_coefficient:
            geometry.setdefault(factor.basis_index.id, factor.basis_index)
    for jac in intermediate.jacobian_factors:
        geometry.setdefault(jac.reference.id, jac.reference)
        if not jac.physical.is_fixed:
            geometry.setdefault(jac.physical.id, jac.physical)

    for index in intermediate.source.free_indices():
        if index.id not in integrand and index.id not in geometry:
            raise LoweringError(f"index '{index.id}' does not occur in the lowered monomial")

    kinds = {}
    for index_id in list(integrand) + list(geometry):
        in_integrand = index_id in integrand
        in_geometry = index_id in geometry
        if in_integrand and in_geometry:
            kinds[index_id] = IndexKind.SECONDARY
        elif in_integrand:
            kinds[index_id] = IndexKind.AUXILIARY
        else:
            kinds[index_id] = IndexKind.AUXILIARY_GEOMETRY

    def relabel(index):
        if index is None or index.is_fixed or index.kind is IndexKind.PRIMARY:
            return index
        if index.id not in kinds:
            raise LoweringError(f"index '{index.id}' was never classified")
        return index.with_kind(kinds[index.id])

    factors = tuple(
        ReferenceFactor(f.function, relabel(f.basis_index), relabel(f.component),
                        tuple(relabel(d) for d in f.derivatives))
        for f in intermediate.factors
    )
    jacobian = tuple(JacobianFactor(relabel(j.reference), relabel(j.physical))
                     for j in intermediate.jacobian_factors)

    by_id = {}
    for factor in factors:
        for index in [factor.basis_index, factor.component, *factor.derivatives]:
            if index is not None:
                by_id.setdefault(index.id, index)
    for jac in jacobian:
        by_id.setdefault(jac.physical.id, jac.physical)

    secondary_ids = {i for i, k in kinds.items() if k is IndexKind.SECONDARY}
    secondary = tuple(by_id[i] for i in order_secondary(factors, secondary_ids))
    if len(secondary) != len(secondary_ids):
        raise LoweringError("secondary index missing from the reference integrand")
    auxiliary = tuple(by_id[i] for i in integrand if kinds[i] is IndexKind.AUXILIARY)
    geometry_auxiliary = tuple(by_id[i] for i in geometry if kinds[i] is IndexKind.AUXILIARY_GEOMETRY)

    primary = tuple(sorted((f.basis_index for f in factors if not f.is_coefficient), key=lambda i: int(i.id[1:])))
    coefficient_refs = tuple((f.function, f.basis_index) for f in factors if f.is_coefficient)

    reference = ReferenceMonomial(factors, primary, secondary, auxiliary)
    expr = GeometryTensorExpr(intermediate.constant, coefficient_refs, jacobian, geometry_auxiliary, secondary)
    return LoweredMonomial(reference, expr, intermediate.source)


def lower_monomial(monomial):
    return classify_indices(apply_chain_rule(monomial))


def lower_form(form):
    lowered = [lower_monomial(m) for m in form.monomials]
    logger.debug("lowered '%s': ranks %s", form.name, [lm.reference.rank for lm in lowered])
    return lowered


def rank_rule_estimate(lowered, arity=None):
    """r + n_C + n_D: arguments, coefficient dofs (+ geometry-paired components), derivatives"""
    factors = lowered.reference.factors
    r = len(lowered.reference.primary) if arity is None else arity
    n_c = 0
    n_d = 0
    for factor in factors:
        if factor.is_coefficient:
            n_c += 1
            if factor.component is not None and factor.component.kind is IndexKind.SECONDARY:
                n_c += 1
        n_d += len(factor.derivatives)
    return r + n_c + n_d


def _names(indices):
    return ','.join(str(i) for i in indices)


def format_lowered(lowered):
    """Two-line text rendering of a lowered monomial"""
    ref = lowered.reference
    geo = lowered.geometry
    parts = []
    for factor in ref.factors:
        text = f"{factor.function.name}_{factor.basis_index}"
        if factor.component is not None:
            text += f"[{factor.component}]"
        text += ''.join(f".dX({d})" for d in factor.derivatives)
        parts.append(text)
    integrand = ' * '.join(parts) if parts else '1'
    head = f"A0[{_names(ref.primary)} | {_names(ref.secondary)}]"
    reference_line = f"{head} = sum[{_names(ref.auxiliary)}] int {integrand} dX"

    terms = [str(geo.constant), '|detF|']
    terms += [f"{function.name}[{index}]" for function, index in geo.coefficient_refs]
    terms += [f"delta[{a},{b}]" for a, b in geo.kronecker_pairs]
    jacobians = [f"Jinv[{j.reference},{j.physical}]" for j in geo.jacobian_factors]
    if jacobians:
        terms.append(f"sum[{_names(geo.auxiliary)}] " + ' * '.join(jacobians))
    geometry_line = f"G[{_names(geo.secondary)}] = " + ' * '.join(terms)
    source = " * ".join(format_factor(f) for f in lowered.source.factors)
    return f"# {lowered.source.constant} * {source}\n{reference_line}\n{geometry_line}"
