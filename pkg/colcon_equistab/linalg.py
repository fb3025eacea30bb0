# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Subspace helpers built on the SVD.

Subspaces are carried as column matrices. Ranks use the relative cutoff
``sigma_max * rtol`` with an absolute floor ``atol``.
"""

import numpy as np
import scipy.linalg


def svd_rank(singular_values, rtol=1e-10, atol=1e-14):
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return 0
    cutoff = max(s[0] * rtol, atol)
    return int(np.sum(s > cutoff))


def rank_gap(singular_values, rtol=1e-10, atol=1e-14, ambiguity=100.0):
    """
    Return the singular values lying within ``ambiguity`` of the cutoff.

    An empty result means the numerical rank is well separated.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return s
    cutoff = max(s[0] * rtol, atol)
    near = (s > cutoff / ambiguity) & (s < cutoff * ambiguity)
    return s[near]


def range_basis(a, rtol=1e-10, atol=1e-14):
    """Orthonormal basis of the column space of ``a``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a matrix, got shape {}".format(a.shape))
    if a.shape[0] == 0 or a.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = scipy.linalg.svd(a, full_matrices=False)
    return u[:, :svd_rank(s, rtol, atol)]


def kernel_basis(a, rtol=1e-10, atol=1e-14):
    """Orthonormal basis of the null space of ``a``."""
    a = np.asarray(a, dtype=float)
    rows, cols = a.shape
    if cols == 0:
        return np.zeros((0, 0))
    if rows == 0:
        return np.eye(cols)
    _, s, vh = scipy.linalg.svd(a, full_matrices=True)
    return vh[svd_rank(s, rtol, atol):].T.copy()


def orthogonal_complement(basis, ambient_dim, rtol=1e-10):
    basis = np.asarray(basis, dtype=float).reshape(ambient_dim, -1)
    if basis.shape[1] == 0:
        return np.eye(ambient_dim)
    return kernel_basis(basis.T, rtol)


def intersect_subspaces(a, b, rtol=1e-10):
    """Orthonormal basis of span(a) intersected with span(b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((n, 0))
    coefficients = kernel_basis(np.hstack([a, -b]), rtol)
    if coefficients.shape[1] == 0:
        return np.zeros((n, 0))
    return range_basis(a @ coefficients[:a.shape[1]], rtol)


def canonical_signs(basis):
    """Flip columns so that the entry of largest modulus is positive."""
    basis = np.array(basis, dtype=float)
    for j in range(basis.shape[1]):
        k = int(np.argmax(np.abs(basis[:, j])))
        if basis[k, j] < 0:
            basis[:, j] = -basis[:, j]
    return basis


def symmetry_defect(matrix):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.T)))
