"""Frame algebra at the junction, material laws and edge trace quantities.

Symmetric tensors are plain (..., 2, 2) arrays; 3D frames are triples of
3-vectors (n, t, l).
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class MaterialLaw:
    E: float
    nu: float
    e: float

    def __post_init__(self):
        if not (self.E > 0 and self.e > 0 and 0 <= self.nu < 0.5):
            raise ValueError(f"invalid material {self}")

    @property
    def membrane_scale(self):
        return self.E * self.e

    @property
    def bending_scale(self):
        return self.E * self.e**3 / 12.0


def _law(scale, nu, x):
    x = np.asarray(x, dtype=float)
    tr = np.trace(x, axis1=-2, axis2=-1)[..., None, None]
    return scale / (1.0 - nu**2) * ((1.0 - nu) * x + nu * tr * np.eye(2))


def _law_inv(scale, nu, x):
    x = np.asarray(x, dtype=float)
    tr = np.trace(x, axis1=-2, axis2=-1)[..., None, None]
    return ((1.0 + nu) * x - nu * tr * np.eye(2)) / scale


def c1_apply(mat, e_tensor):
    return _law(mat.membrane_scale, mat.nu, e_tensor)


def c1_inverse(mat, n_tensor):
    return _law_inv(mat.membrane_scale, mat.nu, n_tensor)


def c2_apply(mat, k_tensor):
    return _law(mat.bending_scale, mat.nu, k_tensor)


def c2_inverse(mat, m_tensor):
    return _law_inv(mat.bending_scale, mat.nu, m_tensor)


def compliance_components(scale, nu):
    """Matrix Q with (C^-1 sigma):tau = s^T Q t for component vectors (11, 12, 22)."""
    W = np.diag([1.0, 2.0, 1.0])
    tr = np.array([1.0, 0.0, 1.0])
    return ((1.0 + nu) * W - nu * np.outer(tr, tr)) / scale


def tilde_frame(frame, theta):
    """Frame of the second plate on the junction from the first plate's frame."""
    if not 0.0 < theta < np.pi + 1e-15:
        raise GeometryError(f"junction angle {theta} outside (0, pi]")
    n, t, l = (np.asarray(v, dtype=float) for v in frame)
    c, s = np.cos(theta), np.sin(theta)
    return n * c - l * s, -t, -n * s - l * c


def trace_quantities(A, n, t):
    """(n^T A n, t^T A n) pointwise."""
    A = np.asarray(A, dtype=float)
    An = np.einsum("...ij,...j->...i", A, n)
    return np.einsum("...i,...i->...", An, n), np.einsum("...i,...i->...", An, t)


def kirchhoff_shear(div_m, grad_m, n, t):
    """T = (Div M).n + d/dt (t^T M n).

    ``grad_m[..., i, j, k]`` holds d_k M_ij.
    """
    d_t = np.einsum("...ijk,...k->...ij", grad_m, t)
    return np.einsum("...i,...i->...", div_m, n) + np.einsum("...i,...ij,...j->...", t, d_t, n)


def vertex_jump(m1, n1, t1, m2, n2, t2):
    """Twisting-moment jump (M1 n1).t1 - (M2 n2).t2 at a vertex.

    Edge 1 is the edge arriving at the vertex in the counterclockwise
    traversal of the boundary, edge 2 the one leaving it.
    """
    return trace_quantities(m1, n1, t1)[1] - trace_quantities(m2, n2, t2)[1]


def sym_components(A):
    A = np.asarray(A, dtype=float)
    return np.stack([A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]], axis=-1)


def sym_from_components(c):
    c = np.asarray(c, dtype=float)
    return np.stack([np.stack([c[..., 0], c[..., 1]], -1), np.stack([c[..., 1], c[..., 2]], -1)], -2)


def nn_weights(n):
    """Component weights w with n^T A n = w . (a11, a12, a22)."""
    n = np.asarray(n, dtype=float)
    return np.stack([n[..., 0] ** 2, 2.0 * n[..., 0] * n[..., 1], n[..., 1] ** 2], axis=-1)


def nt_weights(n, t):
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., 0] * n[..., 0], t[..., 0] * n[..., 1] + t[..., 1] * n[..., 0], t[..., 1] * n[..., 1]], axis=-1)
