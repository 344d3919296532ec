"""Symmetric-matrix helpers built on the eigendecomposition.

Every rank decision in the package goes through ``positive_mask``: an
eigenvalue counts as zero when it is below ``rtol * lambda_max``. All
functions accept stacks of matrices (leading batch axes) so the exact
design enumeration can score many designs at once.
"""
import numpy as np


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def eigh_sym(a):
    "Ascending eigenvalues and orthonormal eigenvectors of the symmetric part of ``a``."
    a = symmetrize(a)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1]), np.zeros(a.shape)
    return np.linalg.eigh(a)


def positive_mask(vals, rtol=1e-10):
    vals = np.asarray(vals, dtype=float)
    if vals.shape[-1] == 0:
        return np.zeros(vals.shape, dtype=bool)
    top = np.max(vals, axis=-1, keepdims=True)
    return (vals > rtol * top) & (top > 0)


def pinv_sym(a, rtol=1e-10):
    "Moore-Penrose inverse of a symmetric positive semidefinite matrix (or stack)."
    vals, vecs = eigh_sym(a)
    keep = positive_mask(vals, rtol)
    inv = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
    return (vecs * inv[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def sym_power(a, power, rtol=1e-10):
    "Power of the positive part of ``a``; zero eigenvalues stay zero."
    vals, vecs = eigh_sym(a)
    keep = positive_mask(vals, rtol)
    powered = np.where(keep, np.where(keep, vals, 1.0) ** power, 0.0)
    return (vecs * powered[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def range_projector(a, rtol=1e-10):
    "Orthogonal projector onto the column space of a symmetric matrix."
    vals, vecs = eigh_sym(a)
    keep = positive_mask(vals, rtol).astype(float)
    return (vecs * keep[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def pseudo_rank(a, rtol=1e-10):
    vals, _ = eigh_sym(a)
    return np.sum(positive_mask(vals, rtol), axis=-1)


def matrix_rank(a, rtol=1e-10):
    "Rank of a general (rectangular) matrix by singular values."
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > rtol * max(s[0], 1.0)))


def positive_eigenvalues(a, rtol=1e-10):
    "Positive eigenvalues of a symmetric matrix, descending."
    vals, _ = eigh_sym(a)
    return np.sort(vals[positive_mask(vals, rtol)])[::-1]


def is_psd(a, rtol=1e-10):
    vals, _ = eigh_sym(a)
    if vals.size == 0:
        return True
    return bool(vals[0] >= -rtol * max(vals[-1], 0.0))


def loewner_leq(a, b, rtol=1e-9):
    "True if ``a`` is below ``b`` in the Loewner order, relative to the scale of ``b``."
    vals, _ = eigh_sym(np.asarray(b) - np.asarray(a))
    if vals.size == 0:
        return True
    scale = max(np.max(np.abs(eigh_sym(b)[0])), 1e-300)
    return bool(vals[0] >= -rtol * scale)
