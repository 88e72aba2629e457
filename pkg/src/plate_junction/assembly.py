"""Assembly and solution of the coupled mixed system.

Unknowns are ordered X = [N, M, N~, M~] (stress/moment DOFs) followed by
phi = [u, u3, u~, u3~] (discontinuous displacements).  The discrete problem
is

    (C^-1 X, Y) + (B* Y, phi) = 0          for all admissible Y,
    (B* X, psi)               = -(F, psi)  for all psi,

with B* = (Div, divDiv) on each plate.  Essential conditions are imposed by
the reduction X = Z y + x0 from :mod:`constraints`.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import abs_det
from .errors import QuadratureError, SolveError
from .frames import compliance_components
from .quadrature import triangle_rule

log = logging.getLogger(__name__)

MIN_ASSEMBLY_ORDER = 8


@dataclass
class SaddleSystem:
    spaces: object
    A: sp.csr_matrix
    B: sp.csr_matrix  # (n_v, n_sigma): entries (B* Psi_j, psi_i)
    f: np.ndarray  # entries -(F, psi_i)
    constraints: object = None
    info: dict = field(default_factory=dict)

    @property
    def n_sigma(self):
        return self.A.shape[0]

    @property
    def n_v(self):
        return self.B.shape[0]


@dataclass
class FieldSolution:
    spaces: object
    sigma: np.ndarray
    v: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def coefficients(self, plate, key):
        sp_ = self.spaces
        if key in sp_.SIGMA_KEYS:
            return self.sigma[sp_.sigma_slice(plate, key)]
        return self.v[sp_.v_slice(plate, key)]


def _scatter(l2g, sign, local, shape_id, n_rows, l2g_cols=None, sign_cols=None, n_cols=None):
    """Sparse matrix from per-shape local matrices ``local[shape]`` (nr, nc)."""
    if l2g_cols is None:
        l2g_cols, sign_cols, n_cols = l2g, sign, n_rows
    vals = local[shape_id] * sign[:, :, None] * sign_cols[:, None, :]
    rows = np.broadcast_to(l2g[:, :, None], vals.shape)
    cols = np.broadcast_to(l2g_cols[:, None, :], vals.shape)
    M = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n_rows, n_cols))
    return M.tocsr()


def _shape_evals(ps, order):
    q, w = triangle_rule(order)
    out = {}
    for key, el in ps.elements.items():
        out[key] = el.evaluate(ps.coeffs[key], ps.shape_X, q)
    det = abs_det(ps.shape_X)
    return q, w, det, out


def local_blocks(ps, materials_scale, order=MIN_ASSEMBLY_ORDER):
    """Per-shape compliance and coupling blocks of one plate.

    ``materials_scale`` = (Q_membrane, Q_bending) component compliance matrices.
    """
    q, w, det, ev = _shape_evals(ps, order)
    wd = w[None, :] * det[:, None]
    QN, QM = materials_scale
    vN = ev["N"]["values"]
    vM = ev["M"]["values"]
    AN = np.einsum("sq,sqic,cd,sqjd->sij", wd, vN, QN, vN)
    AM = np.einsum("sq,sqic,cd,sqjd->sij", wd, vM, QM, vM)
    vu = ev["u"]["values"]
    vu3 = ev["u3"]["values"][..., 0]
    BN = np.einsum("sq,sqac,sqjc->saj", wd, vu, ev["N"]["div"])
    BM = np.einsum("sq,sqa,sqj->saj", wd, vu3, ev["M"]["divdiv"])
    return AN, AM, BN, BM


def assemble(spaces, materials, load=None, constraints=None, order=MIN_ASSEMBLY_ORDER, load_order=12):
    """Assemble the coupled saddle-point system.

    ``materials`` holds one MaterialLaw per plate.  ``load(plate, points)``
    returns the in-plane body force (k, 2) and transverse load (k,) at chart
    points; None means no body load.
    """
    if order < MIN_ASSEMBLY_ORDER:
        raise QuadratureError(f"assembly needs quadrature order >= {MIN_ASSEMBLY_ORDER}, got {order}")
    t0 = time.perf_counter()
    n_s, n_v = spaces.n_sigma, spaces.n_v
    A_blocks, B_blocks = [], []
    f = np.zeros(n_v)
    for p, ps in enumerate(spaces.plates):
        mat = materials[p]
        Q = (compliance_components(mat.membrane_scale, mat.nu), compliance_components(mat.bending_scale, mat.nu))
        AN, AM, BN, BM = local_blocks(ps, Q, order)
        sid = ps.shape_id
        mN, mM, mu, mu3 = (ps.maps[k] for k in ("N", "M", "u", "u3"))
        A_blocks.append(_scatter(mN.local_to_global, mN.sign, AN, sid, mN.n_global))
        A_blocks.append(_scatter(mM.local_to_global, mM.sign, AM, sid, mM.n_global))
        BNg = _scatter(mu.local_to_global, mu.sign, BN, sid, mu.n_global, mN.local_to_global, mN.sign, mN.n_global)
        BMg = _scatter(mu3.local_to_global, mu3.sign, BM, sid, mu3.n_global, mM.local_to_global, mM.sign, mM.n_global)
        B_blocks.append((BNg, BMg))
        if load is not None:
            fu, fu3 = load_vectors(ps, lambda x, p=p: load(p, x), load_order)
            f[spaces.v_slice(p, "u")] = -fu
            f[spaces.v_slice(p, "u3")] = -fu3
    A = sp.block_diag(A_blocks, format="csr")
    # rows ordered [u, u3, u~, u3~], columns [N, M, N~, M~]
    B = sp.block_diag([B_blocks[0][0], B_blocks[0][1], B_blocks[1][0], B_blocks[1][1]], format="csr")
    info = {"assembly_seconds": time.perf_counter() - t0, "n_sigma": n_s, "n_v": n_v}
    return SaddleSystem(spaces, A, B, f, constraints, info)


def physical_points(X, q):
    """Chart coordinates of reference points q on triangles X: (nt, nq, 2)."""
    return X[:, None, 0, :] + q[None, :, 0, None] * (X[:, None, 1, :] - X[:, None, 0, :]) + q[None, :, 1, None] * (
        X[:, None, 2, :] - X[:, None, 0, :]
    )


def load_vectors(ps, load, order=12):
    """Integrals of the load against the DG basis on one plate."""
    q, w = triangle_rule(order)
    X = ps.X
    det = abs_det(X)
    pts = physical_points(X, q)
    F, F3 = load(pts.reshape(-1, 2))
    F = np.asarray(F).reshape(len(X), len(q), 2)
    F3 = np.asarray(F3).reshape(len(X), len(q))
    vu = ps.elements["u"].evaluate(ps.coeffs["u"][:1], ps.shape_X[:1], q, derivatives=False)["values"][0]
    vu3 = ps.elements["u3"].evaluate(ps.coeffs["u3"][:1], ps.shape_X[:1], q, derivatives=False)["values"][0][..., 0]
    wd = w[None, :] * det[:, None]
    loc_u = np.einsum("eq,qac,eqc->ea", wd, vu, F)
    loc_u3 = np.einsum("eq,qa,eq->ea", wd, vu3, F3)
    mu, mu3 = ps.maps["u"], ps.maps["u3"]
    fu = np.zeros(mu.n_global)
    fu3 = np.zeros(mu3.n_global)
    np.add.at(fu, mu.local_to_global, loc_u)
    np.add.at(fu3, mu3.local_to_global, loc_u3)
    return fu, fu3


def l2_project(func, ps, key, order=12):
    """Element-wise L2 projection onto the discontinuous P2 space ``key`` ('u' or 'u3').

    ``func(points)`` returns (k, 2) values for 'u' and (k,) for 'u3'.
    """
    q, w = triangle_rule(order)
    el = ps.elements[key]
    vals = el.evaluate(ps.coeffs[key][:1], ps.shape_X[:1], q, derivatives=False)["values"][0]  # (q, nb, c)
    mass = np.einsum("q,qic,qjc->ij", w, vals, vals)
    pts = physical_points(ps.X, q)
    F = np.asarray(func(pts.reshape(-1, 2))).reshape(len(ps.X), len(q), -1)
    rhs = np.einsum("q,qic,eqc->ei", w, vals, F)
    loc = np.linalg.solve(mass, rhs.T).T
    out = np.zeros(ps.maps[key].n_global)
    out[ps.maps[key].local_to_global] = loc
    return out


def _ruiz_scaling(K, iters=6):
    n = K.shape[0]
    d = np.ones(n)
    Kc = K.tocsr()
    for _ in range(iters):
        r = np.sqrt(abs(Kc).max(axis=1).toarray().ravel())
        r[r == 0] = 1.0
        Dr = sp.diags(1.0 / r)
        Kc = (Dr @ Kc @ Dr).tocsr()
        d /= r
    return d, Kc


def _pardiso_upper(K):
    """Upper triangle with an explicit (possibly zero) diagonal, as the symmetric solver expects."""
    n = K.shape[0]
    U = sp.triu(K).tocoo()
    idx = np.arange(n)
    U = sp.coo_matrix(
        (np.concatenate([U.data, np.zeros(n)]), (np.concatenate([U.row, idx]), np.concatenate([U.col, idx]))),
        shape=(n, n),
    ).tocsr()
    U.sum_duplicates()
    U.sort_indices()
    return U


def _factorize(K, solver):
    """Return (solve, handle) for the scaled symmetric matrix K."""
    if solver == "pardiso":
        import pypardiso

        U = _pardiso_upper(K)
        ps = pypardiso.PyPardisoSolver(mtype=-2)
        # user iparms: nested dissection, 2 refinement steps, 1e-8 pivot
        # perturbation, symmetric scaling and weighted matching
        for i, v in ((1, 1), (2, 2), (8, 2), (10, 8), (11, 1), (13, 1)):
            ps.set_iparm(i, v)
        ps.factorize(U)

        def solve(b):
            return ps.solve(U, b)

        return solve, ps
    if solver == "iterative":
        ilu = spla.spilu(sp.csc_matrix(K), drop_tol=1e-6, fill_factor=30)
        P = spla.LinearOperator(K.shape, ilu.solve)

        def solve(b):
            x, info = spla.gmres(K, b, M=P, rtol=1e-13, atol=0.0, restart=200, maxiter=50)
            return x

        return solve, ilu
    lu = spla.splu(sp.csc_matrix(K), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1)
    return lu.solve, lu


def _locate_mkl():
    """Point pypardiso at an MKL runtime outside its default search path."""
    import ctypes.util
    import glob
    import os
    import sys

    if os.environ.get("PYPARDISO_MKL_RT") or ctypes.util.find_library("mkl_rt"):
        return
    for root in (sys.prefix, os.path.join(sys.prefix, "local"), "/usr/local", sys.exec_prefix):
        hits = sorted(glob.glob(os.path.join(root, "lib*", "libmkl_rt.so*")), key=len)
        if hits:
            os.environ["PYPARDISO_MKL_RT"] = hits[0]
            return


def available_solver(preferred="auto"):
    if preferred in ("auto", "pardiso"):
        try:
            _locate_mkl()
            import pypardiso  # noqa: F401

            pypardiso.PyPardisoSolver()
            return "pardiso"
        except Exception:  # pragma: no cover - depends on the environment
            if preferred == "pardiso":
                raise
    return "splu"


def reduced_operator(system):
    red = system.constraints.reduction
    Z, x0 = red.Z, red.x0
    A, B = system.A, system.B
    Ar = (Z.T @ A @ Z).tocsr()
    Br = (B @ Z).tocsr()
    K = sp.bmat([[Ar, Br.T], [Br, None]], format="csr")
    b = np.concatenate([-(Z.T @ (A @ x0)), system.f - B @ x0])
    return K, b


def solve_reduced(K, b, solver="auto", tol=1e-10, max_refine=5):
    """Solve K z = b (symmetric indefinite) with Ruiz scaling and refinement.

    Returns (z, solver name, residual history).
    """
    d, Ks = _ruiz_scaling(K)
    if solver != "iterative":
        solver = available_solver(solver if solver != "direct" else "auto")
    try:
        sol, handle = _factorize(Ks, solver)
    except RuntimeError as exc:
        raise SolveError(f"factorization failed: {exc}", _null_vector(K)) from exc
    bnorm = max(np.linalg.norm(b), 1e-300)
    z = np.zeros_like(b)
    r = b.copy()
    hist = []
    for _ in range(max_refine + 1):
        z += d * sol(d * r)
        r = b - K @ z
        hist.append(np.linalg.norm(r) / bnorm)
        if hist[-1] <= 0.01 * tol:
            break
    if solver == "pardiso":
        handle.free_memory(everything=True)
    if not np.all(np.isfinite(z)) or hist[-1] > tol:
        raise SolveError(f"reduced system residual {hist[-1]:.3e} above {tol:.1e}", _null_vector(K))
    return z, solver, hist


def solve(system, solver="auto", tol=1e-10, max_refine=5):
    """Solve the reduced system by a sparse direct method with iterative refinement."""
    t0 = time.perf_counter()
    red = system.constraints.reduction
    K, b = reduced_operator(system)
    n_y = red.Z.shape[1]
    z, solver, hist = solve_reduced(K, b, solver, tol, max_refine)
    X = red.expand(z[:n_y])
    phi = z[n_y:]
    cres = system.constraints.residual(X)
    diagnostics = {
        "solver": solver,
        "n_reduced": int(K.shape[0]),
        "n_masters": int(n_y),
        "relative_residual": float(hist[-1]),
        "refinement_history": [float(h) for h in hist],
        "constraint_residual": float(cres),
        "solve_seconds": time.perf_counter() - t0,
    }
    log.info("solved %d unknowns with %s, residual %.2e", K.shape[0], solver, hist[-1])
    return FieldSolution(system.spaces, X, phi, diagnostics)


def _null_vector(K, max_dense=4000):
    if K.shape[0] > max_dense:
        return None
    u, s, vt = np.linalg.svd(K.toarray())
    return vt[-1]


def full_residual(system, solution):
    """Relative residual of the unreduced equations tested with admissible directions."""
    red = system.constraints.reduction
    r1 = red.Z.T @ (system.A @ solution.sigma + system.B.T @ solution.v)
    r2 = system.B @ solution.sigma - system.f
    num = np.sqrt(np.linalg.norm(r1) ** 2 + np.linalg.norm(r2) ** 2)
    den = max(np.linalg.norm(system.f), np.linalg.norm(red.Z.T @ (system.A @ red.x0)), 1e-300)
    return float(num / den)


def gram_matrices(spaces, order=MIN_ASSEMBLY_ORDER):
    """L2 Gram matrices of the Sigma and V bases (identity compliance)."""
    I = np.diag([1.0, 2.0, 1.0])
    Ms, Mv = [], []
    q, w = triangle_rule(order)
    for ps in spaces.plates:
        AN, AM, _, _ = local_blocks(ps, (I, I), order)
        sid = ps.shape_id
        mN, mM = ps.maps["N"], ps.maps["M"]
        Ms.append(_scatter(mN.local_to_global, mN.sign, AN, sid, mN.n_global))
        Ms.append(_scatter(mM.local_to_global, mM.sign, AM, sid, mM.n_global))
        for key in ("u", "u3"):
            el = ps.elements[key]
            ev = el.evaluate(ps.coeffs[key], ps.shape_X, q, derivatives=False)["values"]
            det = abs_det(ps.shape_X)
            loc = np.einsum("s,q,sqic,sqjc->sij", det, w, ev, ev)
            m = ps.maps[key]
            Mv.append(_scatter(m.local_to_global, m.sign, loc, sid, m.n_global))
    return sp.block_diag(Ms, format="csr"), sp.block_diag(Mv, format="csr")


MAX_INFSUP_DOFS = 12000


def measure_infsup(system, drop_bubbles=False):
    """Smallest generalized singular value of B on the constrained stress space.

    The stress/moment space carries its graph norm, the displacement space
    its L2 norm.  Dense, so limited to small meshes.  With ``drop_bubbles``
    the interior DOFs of both tensor elements are removed (negative control).
    """
    spaces = system.spaces
    Z = system.constraints.reduction.Z
    if Z.shape[1] + system.n_v > MAX_INFSUP_DOFS:
        raise ValueError(f"inf-sup probe limited to {MAX_INFSUP_DOFS} unknowns")
    if drop_bubbles:
        keep = np.ones(system.n_sigma, dtype=bool)
        for p, ps in enumerate(spaces.plates):
            for key in spaces.SIGMA_KEYS:
                m = ps.maps[key]
                keep[spaces.sigma_offsets[(p, key)] + m.interior_base : spaces.sigma_offsets[(p, key)] + m.n_global] = False
        Zd = Z.tocsc()
        used = np.asarray(abs(Zd[~keep]).sum(axis=0)).ravel() == 0
        # columns that do not touch interior DOFs, and rows of interior DOFs zeroed
        Z = sp.diags(keep.astype(float)) @ Zd[:, np.flatnonzero(used)]
    Ms, Mv = gram_matrices(spaces)
    Mv = Mv.toarray()
    B = (system.B @ Z).toarray()
    Mvinv_B = np.linalg.solve(Mv, B)
    G = (Z.T @ Ms @ Z).toarray() + B.T @ Mvinv_B
    # beta^2 = min eig of B G^-1 B^T relative to Mv
    S = B @ np.linalg.solve(G, B.T)
    S = 0.5 * (S + S.T)
    ev = sla.eigh(S, Mv, eigvals_only=True)
    return float(np.sqrt(max(ev[0], 0.0)))


def dump_matrix(M, path):
    """Coordinate text dump 'row col value' (debug aid)."""
    C = sp.coo_matrix(M)
    with open(path, "w") as fh:
        for i, j, v in zip(C.row, C.col, C.data):
            fh.write(f"{i} {j} {v:.17g}\n")
