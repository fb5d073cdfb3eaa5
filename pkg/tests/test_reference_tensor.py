import numpy as np
import pytest

from reference_tensor import (compute_assembled, compute_naive, compute_reference_tensor, permute_axes,
                              tabulate_psi_tables)
from signatures import factorize
from tfc_errors import MemoryGuardError, ReferenceTensorError
from tfc_forms import parse, simplify
from tfc_lowering import lower_form
from tfc_main_app import CompilerOptions
from tfc_quadrature import required_degree, simplex_rule


def _first_reference(form):
    ref = lower_form(simplify(form))[0].reference
    return ref, simplex_rule(form.dimension, required_degree(ref))


@pytest.mark.parametrize('algorithm', ['naive', 'assembled'])
def test_mass_p1_triangle_golden_values(corpus, algorithm):
    ref, rule = _first_reference(corpus.load_form('mass'))
    tensor = compute_reference_tensor(ref, rule, algorithm)
    expected = (np.ones((3, 3)) + np.eye(3)) / 24.0
    assert np.allclose(tensor.values, expected, rtol=0, atol=1e-13)


@pytest.mark.parametrize('algorithm', ['naive', 'assembled'])
def test_poisson_p1_triangle_golden_values(corpus, algorithm):
    ref, rule = _first_reference(corpus.load_form('poisson'))
    tensor = compute_reference_tensor(ref, rule, algorithm)
    gradients = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    expected = 0.5 * np.einsum('ia,jb->ijab', gradients, gradients)
    assert tensor.shape == (3, 3, 2, 2)
    assert tensor.values[1, 1, 0, 0] == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(tensor.values, expected, atol=1e-14)
    assert tensor.flattened().shape == (9, 4)


CROSS_CASES = [
    (name, dim, q)
    for name in ('mass', 'poisson', 'navier_stokes', 'elasticity')
    for dim, degrees in ((2, (1, 2, 3)), (3, (1, 2)))
    for q in degrees
] + [('stabilization', 2, 1)]


def _cross_params():
    params = []
    for case in CROSS_CASES:
        marks = [pytest.mark.slow] if case in {('navier_stokes', 3, 2), ('elasticity', 3, 2)} else []
        params.append(pytest.param(*case, marks=marks, id='-'.join(str(c) for c in case)))
    return params


@pytest.mark.parametrize('name, dim, q', _cross_params())
def test_naive_and_assembled_agree(corpus, name, dim, q):
    form = simplify(corpus.load_form(name, degree=q, dimension=dim))
    for group in factorize(lower_form(form)):
        ref = group.representative.reference
        rule = simplex_rule(dim, required_degree(ref))
        naive = compute_naive(ref, rule)
        assembled = compute_assembled(ref, rule)
        scale = np.abs(naive.values).max()
        assert np.abs(naive.values - assembled.values).max() <= 1e-12 * scale
        assert assembled.multiplies <= naive.multiplies


def test_assembled_saves_most_multiplies_on_stabilization(corpus):
    ref, rule = _first_reference(corpus.load_form('stabilization', dimension=2))
    naive = compute_naive(ref, rule)
    assembled = compute_assembled(ref, rule)
    assert assembled.multiplies / naive.multiplies <= 0.2


def test_parallel_accumulation_matches_serial(corpus):
    ref, rule = _first_reference(corpus.load_form('navier_stokes'))
    serial = compute_assembled(ref, rule)
    parallel = compute_assembled(ref, rule, workers=3)
    assert np.allclose(parallel.values, serial.values, rtol=0, atol=1e-15)
    assert parallel.multiplies == serial.multiplies


def test_memory_guard_refuses_before_allocating(corpus):
    ref, rule = _first_reference(corpus.load_form('navier_stokes'))
    with pytest.raises(MemoryGuardError) as info:
        compute_assembled(ref, rule, max_entries=1000)
    assert info.value.required == 15552
    assert "15,552" in str(info.value)
    assert info.value.exit_code == 4


def test_stabilization_guard_names_its_size(corpus):
    ref, rule = _first_reference(corpus.load_form('stabilization'))
    with pytest.raises(MemoryGuardError, match="1,679,616"):
        compute_naive(ref, rule, max_entries=1_000_000)


def test_unknown_algorithm(corpus):
    ref, rule = _first_reference(corpus.load_form('mass'))
    with pytest.raises(ReferenceTensorError, match="unknown algorithm"):
        compute_reference_tensor(ref, rule, 'sparse')
    with pytest.raises(ReferenceTensorError):
        CompilerOptions(algorithm='sparse')


def test_psi_tables_are_shared_between_identical_factors(corpus):
    ref, rule = _first_reference(corpus.load_form('poisson'))
    first, second = tabulate_psi_tables(ref, rule)
    assert first.values is second.values
    assert first.values.shape == (rule.size, 3, 1, 2)


def test_permuted_member_matches_its_own_tensor():
    form = parse("element = Lagrange(2, triangle, 1)\narguments = v, u\n"
                 "a = v.dx(0)*u.dx(1)*dx + u.dx(0)*v.dx(1)*dx")
    (group,) = factorize(lower_form(simplify(form)))
    member = group.members[1]
    assert member.permutation == (1, 0)
    rule = simplex_rule(2, required_degree(group.representative.reference))
    representative = compute_assembled(group.representative.reference, rule)
    own = compute_assembled(member.lowered.reference, rule)
    assert np.allclose(permute_axes(representative.values, 2, member.permutation), own.values, atol=1e-13)


@pytest.mark.parametrize('name', ['mass', 'poisson', 'laplacian_2terms', 'navier_stokes', 'elasticity',
                                  'stabilization'])
def test_extra_quadrature_degree_does_not_change_a0(corpus, name):
    form = simplify(corpus.load_form(name, dimension=2))
    for group in factorize(lower_form(form)):
        ref = group.representative.reference
        degree = required_degree(ref)
        exact = compute_assembled(ref, simplex_rule(2, degree))
        richer = compute_assembled(ref, simplex_rule(2, degree + 2))
        assert np.abs(richer.values - exact.values).max() <= 1e-12 * np.abs(exact.values).max()


@pytest.mark.parametrize('dim, q', [(2, 1), (2, 3), (3, 2)])
def test_mass_and_poisson_a0_are_symmetric(corpus, dim, q):
    mass, _ = _first_reference(corpus.load_form('mass', degree=q, dimension=dim))
    poisson, _ = _first_reference(corpus.load_form('poisson', degree=q, dimension=dim))
    mass_values = compute_assembled(mass, simplex_rule(dim, required_degree(mass))).values
    poisson_values = compute_assembled(poisson, simplex_rule(dim, required_degree(poisson))).values
    # swap (i0, dX:0) with (i1, dX:1)
    assert np.allclose(mass_values, mass_values.T, rtol=0, atol=1e-13 * np.abs(mass_values).max())
    assert np.allclose(poisson_values, poisson_values.transpose(1, 0, 3, 2),
                       rtol=0, atol=1e-13 * np.abs(poisson_values).max())


@pytest.mark.parametrize('name', ['mass', 'poisson', 'laplacian_2terms', 'navier_stokes', 'elasticity',
                                  'stabilization'])
def test_every_group_member_is_a_permutation_of_its_representative(corpus, name):
    form = simplify(corpus.load_form(name, dimension=2))
    for group in factorize(lower_form(form)):
        rep = group.representative.reference
        rule = simplex_rule(2, required_degree(rep))
        representative = compute_assembled(rep, rule).values
        for member in group.members:
            own = compute_assembled(member.lowered.reference, rule).values
            permuted = permute_axes(representative, len(rep.primary), member.permutation)
            assert np.allclose(permuted, own, rtol=0, atol=1e-13 * np.abs(own).max())


def test_lifted_elasticity_member_is_a_permutation_of_its_representative(corpus):
    (group,) = factorize(lower_form(simplify(corpus.load_form('elasticity'))))
    rep = group.representative.reference
    rule = simplex_rule(3, required_degree(rep))
    representative = compute_assembled(rep, rule).values
    lifted = group.members[0]
    assert [a.id for a in lifted.lowered.reference.secondary] == ["i'0", "i'1", 'dX:0', 'dX:1']
    for member in group.members:
        own = compute_assembled(member.lowered.reference, rule).values
        assert np.allclose(permute_axes(representative, 2, member.permutation), own, rtol=0, atol=1e-13)
