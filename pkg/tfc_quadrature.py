"""
Simplex Quadrature - collapsed-coordinate Gauss-Jacobi rules
"""

import logging
from dataclasses import dataclass
from math import ceil

import numpy as np

from tfc_elements import as_cell
from tfc_errors import QuadratureError

logger = logging.getLogger(__name__)


def gauss_jacobi(n, a):
    """
    n-point Gauss rule on [-1, 1] for the weight (1 - x)^a.

    Nodes are the eigenvalues of the symmetric Jacobi matrix of the monic
    recurrence, weights are mu0 times the squared first eigenvector components.
    """
    if n < 1:
        raise QuadratureError(f"Gauss-Jacobi rule needs at least one point, got {n}")
    if a not in (0, 1, 2):
        raise QuadratureError(f"Jacobi exponent must be 0, 1 or 2, got {a}")

    k = np.arange(n, dtype=float)
    diagonal = np.empty(n)
    diagonal[0] = -a / (a + 2.0)
    if n > 1:
        kk = k[1:]
        diagonal[1:] = -a * a / ((2 * kk + a) * (2 * kk + a + 2))
    kk = k[1:]
    off = 4 * kk * (kk + a) * kk * (kk + a) / ((2 * kk + a) ** 2 * (2 * kk + a + 1) * (2 * kk + a - 1))
    jacobi_matrix = np.diag(diagonal) + np.diag(np.sqrt(off), -1) + np.diag(np.sqrt(off), 1)

    try:
        nodes, vectors = np.linalg.eigh(jacobi_matrix)
    except np.linalg.LinAlgError as e:
        raise QuadratureError(f"eigen-solve for the {n}-point Gauss-Jacobi rule (a={a}) failed: {e}")

    mu0 = 2.0 ** (a + 1) / (a + 1)
    weights = mu0 * vectors[0, :] ** 2
    if not np.isfinite(nodes).all() or abs(weights.sum() - mu0) > 1e-12 * mu0:
        raise QuadratureError(f"{n}-point Gauss-Jacobi rule (a={a}) lost accuracy")
    return nodes, weights


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and weights on a reference cell, exact up to total degree `degree`"""
    points: np.ndarray
    weights: np.ndarray
    degree: int
    cell: object

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def simplex_rule(cell, p):
    """Tensor Gauss-Jacobi rule collapsed onto the unit simplex"""
    cell = as_cell(cell)
    if p < 0:
        raise QuadratureError(f"quadrature degree must be non-negative, got {p}")
    n = max(1, ceil((p + 1) / 2))
    d = cell.dimension

    if d == 1:
        x, w = gauss_jacobi(n, 0)
        points = ((1.0 + x) / 2.0)[:, None]
        weights = w / 2.0

    elif d == 2:
        x1, w1 = gauss_jacobi(n, 0)
        x2, w2 = gauss_jacobi(n, 1)
        e1, e2 = np.meshgrid(x1, x2, indexing='ij')
        g1, g2 = np.meshgrid(w1, w2, indexing='ij')
        X = (1.0 + e1) * (1.0 - e2) / 4.0
        Y = (1.0 + e2) / 2.0
        points = np.column_stack([X.ravel(), Y.ravel()])
        weights = (g1 * g2).ravel() / 8.0

    else:
        x1, w1 = gauss_jacobi(n, 0)
        x2, w2 = gauss_jacobi(n, 1)
        x3, w3 = gauss_jacobi(n, 2)
        e1, e2, e3 = np.meshgrid(x1, x2, x3, indexing='ij')
        g1, g2, g3 = np.meshgrid(w1, w2, w3, indexing='ij')
        X = (1.0 + e1) * (1.0 - e2) * (1.0 - e3) / 8.0
        Y = (1.0 + e2) * (1.0 - e3) / 4.0
        Z = (1.0 + e3) / 2.0
        points = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        weights = (g1 * g2 * g3).ravel() / 64.0

    logger.debug("degree-%d rule on %s: %d points", p, cell.name, len(weights))
    return QuadratureRule(points, weights, p, cell)


def required_degree(monomial, elements=None):
    """Total polynomial degree of the reference integrand: sum of max(q_j - |derivatives_j|, 0)"""
    factors = monomial.factors
    if elements is None:
        elements = [f.element for f in factors]
    return sum(max(e.degree - len(f.derivatives), 0) for f, e in zip(factors, elements))
