"""Staggered-grid calculus on the unit square and a matrix-free CG solver.

Layout: cell arrays have shape (nx, nz) with index [i, j] for the cell centred
at ((i + 1/2) dx, (j + 1/2) dz).  Horizontal velocities U live on vertical
faces, shape (nx + 1, nz); vertical velocities Q live on horizontal faces,
shape (nx, nz + 1).  Reductions go through numpy's pairwise summation so the
result does not depend on BLAS threading.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import frac_flow
from .errors import ContractViolation, SolverError, ValidationError


@dataclass(frozen=True)
class GridSpec:
    nx: int
    nz: int

    def __post_init__(self):
        for name in ("nx", "nz"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ValidationError(f"{name} must be ≥ 2", key=name)

    @classmethod
    def from_shape(cls, shape):
        return cls(int(shape[0]), int(shape[1]))

    @property
    def dx(self):
        return 1.0 / self.nx

    @property
    def dz(self):
        return 1.0 / self.nz

    @property
    def shape(self):
        return (self.nx, self.nz)

    @property
    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def z_centers(self):
        return (np.arange(self.nz) + 0.5) * self.dz

    @property
    def x_faces(self):
        return np.arange(self.nx + 1) * self.dx

    @property
    def z_faces(self):
        return np.arange(self.nz + 1) * self.dz

    def mesh(self):
        return np.meshgrid(self.x_centers, self.z_centers, indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)


@dataclass
class FaceField:
    u: np.ndarray  # (nx + 1, nz), vertical faces
    q: np.ndarray  # (nx, nz + 1), horizontal faces

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros((grid.nx + 1, grid.nz)), np.zeros((grid.nx, grid.nz + 1)))

    @property
    def grid(self):
        return GridSpec(self.q.shape[0], self.u.shape[1])

    def check(self, grid):
        if self.u.shape != (grid.nx + 1, grid.nz) or self.q.shape != (grid.nx, grid.nz + 1):
            raise ContractViolation(
                f"face shapes {self.u.shape}, {self.q.shape} do not match grid {grid.shape}")

    def copy(self):
        return FaceField(self.u.copy(), self.q.copy())


def dot(a, b):
    return float(np.add.reduce((a * b).ravel()))


def harmonic_mean(a, b):
    return 2.0 * a * b / (a + b)


def divergence(v, grid):
    v.check(grid)
    return np.diff(v.u, axis=0) / grid.dx + np.diff(v.q, axis=1) / grid.dz


def vertical_average(s):
    s = np.asarray(s, dtype=float)
    return np.add.reduce(s, axis=1) / s.shape[1]


def cumulative_vertical_integral(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros((s.shape[0], s.shape[1] + 1))
    np.cumsum(s, axis=1, out=out[:, 1:])
    return out / s.shape[1]


def l2_norm(s):
    s = np.asarray(s, dtype=float)
    return float(np.sqrt(np.add.reduce((s * s).ravel()) / s.size))


def l2_grad_norms(s):
    """(||d/dx s||, ||d/dz s||) from central differences, one-sided at the walls."""
    s = np.asarray(s, dtype=float)
    nx, nz = s.shape
    gx = np.gradient(s, 1.0 / nx, axis=0)
    gz = np.gradient(s, 1.0 / nz, axis=1)
    return l2_norm(gx), l2_norm(gz)


def face_to_cell(v):
    """Cell-centred velocity components (face averages)."""
    return 0.5 * (v.u[1:] + v.u[:-1]), 0.5 * (v.q[:, 1:] + v.q[:, :-1])


def upwind_face_flux(s, v, M, inflow_saturation=None):
    """Face fluxes f(S_upwind) * velocity.

    ``inflow_saturation`` (length nz) is the state entering through x = 0;
    anything entering through another boundary carries S = 0.
    """
    s = np.asarray(s, dtype=float)
    grid = GridSpec.from_shape(s.shape)
    v.check(grid)
    fs = frac_flow(s, M)
    f_in = np.zeros(grid.nz) if inflow_saturation is None else frac_flow(inflow_saturation, M)

    left = np.vstack([f_in[None, :], fs])           # state on the left of each vertical face
    right = np.vstack([fs, np.zeros((1, grid.nz))])
    fu = np.where(v.u > 0.0, left, right) * v.u

    zero_row = np.zeros((grid.nx, 1))
    below = np.hstack([zero_row, fs])
    above = np.hstack([fs, zero_row])
    fq = np.where(v.q > 0.0, below, above) * v.q
    return FaceField(fu, fq)


def net_boundary_flux(flux, grid):
    """Outward flux through the boundary (per unit depth)."""
    out = np.add.reduce(flux.u[-1]) - np.add.reduce(flux.u[0])
    out_z = np.add.reduce(flux.q[:, -1]) - np.add.reduce(flux.q[:, 0])
    return float(out * grid.dz + out_z * grid.dx)


SIDES = ("left", "right", "bottom", "top")


@dataclass
class LinearOperatorSpec:
    """shift * u - div(c grad u) on cells, with face coefficients ``cx``/``cz``.

    ``bc`` maps each side to a Dirichlet value (float) or ``None`` for
    homogeneous Neumann.  Dirichlet data sit half a cell outside the boundary
    cell.  ``apply`` is the homogeneous part; ``lift`` moves the boundary data
    to the right-hand side.
    """

    cx: np.ndarray  # (nx + 1, nz)
    cz: np.ndarray  # (nx, nz + 1)
    shift: float = 0.0
    bc: dict = field(default_factory=lambda: dict.fromkeys(SIDES))

    def __post_init__(self):
        nx, nz = self.cz.shape[0], self.cx.shape[1]
        if self.cx.shape != (nx + 1, nz) or self.cz.shape != (nx, nz + 1):
            raise ContractViolation("coefficient shapes inconsistent")
        self.grid = GridSpec(nx, nz)
        for side in SIDES:
            self.bc.setdefault(side, None)

    @property
    def singular(self):
        return self.shift == 0.0 and all(self.bc[s] is None for s in SIDES)

    def _fluxes(self, u, with_data):
        # homogeneous part when with_data is False, boundary data only otherwise
        g = self.grid
        fx = np.zeros((g.nx + 1, g.nz))
        fz = np.zeros((g.nx, g.nz + 1))
        if not with_data:
            fx[1:-1] = self.cx[1:-1] * (u[1:] - u[:-1]) / g.dx
            fz[:, 1:-1] = self.cz[:, 1:-1] * (u[:, 1:] - u[:, :-1]) / g.dz
        for side, value in self.bc.items():
            if value is None:
                continue
            outside = value if with_data else 0.0
            # flux c * (outside - inside) / (h / 2), oriented along +x / +z
            if side == "left":
                inside = 0.0 if with_data else u[0]
                fx[0] = self.cx[0] * (inside - outside) / (0.5 * g.dx)
            elif side == "right":
                inside = 0.0 if with_data else u[-1]
                fx[-1] = self.cx[-1] * (outside - inside) / (0.5 * g.dx)
            elif side == "bottom":
                inside = 0.0 if with_data else u[:, 0]
                fz[:, 0] = self.cz[:, 0] * (inside - outside) / (0.5 * g.dz)
            else:
                inside = 0.0 if with_data else u[:, -1]
                fz[:, -1] = self.cz[:, -1] * (outside - inside) / (0.5 * g.dz)
        return fx, fz

    def face_fluxes(self, u):
        """Gradient fluxes c * grad(u) on all faces, boundary data included."""
        fx, fz = self._fluxes(u, with_data=False)
        dx_, dz_ = self._fluxes(None, with_data=True)
        return fx + dx_, fz + dz_

    def apply(self, u):
        fx, fz = self._fluxes(u, with_data=False)
        return self.shift * u - (np.diff(fx, axis=0) / self.grid.dx + np.diff(fz, axis=1) / self.grid.dz)

    def lift(self):
        fx, fz = self._fluxes(None, with_data=True)
        return np.diff(fx, axis=0) / self.grid.dx + np.diff(fz, axis=1) / self.grid.dz

    def to_sparse(self):
        from scipy import sparse

        g = self.grid
        n = g.nx * g.nz
        idx = np.arange(n).reshape(g.shape)
        diag = np.full(g.shape, float(self.shift))
        rows, cols, vals = [], [], []

        wx = self.cx[1:-1] / g.dx**2
        wz = self.cz[:, 1:-1] / g.dz**2
        diag[1:] += wx
        diag[:-1] += wx
        diag[:, 1:] += wz
        diag[:, :-1] += wz
        for a, b, w in ((idx[:-1], idx[1:], wx), (idx[:, :-1], idx[:, 1:], wz)):
            rows += [a.ravel(), b.ravel()]
            cols += [b.ravel(), a.ravel()]
            vals += [-w.ravel(), -w.ravel()]
        if self.bc["left"] is not None:
            diag[0] += 2.0 * self.cx[0] / g.dx**2
        if self.bc["right"] is not None:
            diag[-1] += 2.0 * self.cx[-1] / g.dx**2
        if self.bc["bottom"] is not None:
            diag[:, 0] += 2.0 * self.cz[:, 0] / g.dz**2
        if self.bc["top"] is not None:
            diag[:, -1] += 2.0 * self.cz[:, -1] / g.dz**2
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(diag.ravel())
        return sparse.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def cg_solve(op, rhs, tol=1e-10, max_iter=None, x0=None, callback=None, full_output=False):
    """Solve ``op.apply(x) = rhs + op.lift()`` by unpreconditioned CG.

    Stops when the true relative residual is below ``tol``.  Pure-Neumann
    systems without shift need a mean-zero right-hand side; their solution is
    returned with zero mean.
    """
    g = op.grid
    b = np.asarray(rhs, dtype=float) + op.lift()
    if b.shape != g.shape:
        raise ContractViolation(f"rhs shape {b.shape} does not match {g.shape}")
    if not np.all(np.isfinite(b)):
        raise ContractViolation("rhs is not finite")
    if max_iter is None:
        max_iter = 10 * g.nx * g.nz
    singular = op.singular
    if singular:
        mean = np.add.reduce(b.ravel()) / b.size
        if abs(mean) * np.sqrt(b.size) > max(tol, 1e-12) * np.sqrt(dot(b, b)):
            raise ContractViolation("pure-Neumann system with incompatible right-hand side")
        b = b - mean

    bnorm = np.sqrt(dot(b, b))
    x = np.zeros(g.shape) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        x[...] = 0.0
        return (x, 0, 0.0) if full_output else x
    target = tol * bnorm

    r = b - op.apply(x)
    if singular:
        r -= np.add.reduce(r.ravel()) / r.size
    p = r.copy()
    rr = dot(r, r)
    it = 0
    while True:
        if np.sqrt(rr) <= target:
            # confirm with the true residual; the recursive one drifts
            r = b - op.apply(x)
            if singular:
                r -= np.add.reduce(r.ravel()) / r.size
            rr = dot(r, r)
            if np.sqrt(rr) <= target:
                break
            p = r.copy()
        if it >= max_iter:
            raise SolverError(
                f"CG did not converge in {max_iter} iterations (relative residual "
                f"{np.sqrt(rr) / bnorm:.3e})", residual=np.sqrt(rr) / bnorm, iterations=it)
        Ap = op.apply(p)
        pAp = dot(p, Ap)
        if not pAp > 0.0:
            raise ContractViolation(f"operator not positive definite (p.Ap = {pAp:.3e})")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        if singular:
            r -= np.add.reduce(r.ravel()) / r.size
        rr_new = dot(r, r)
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1
        if callback is not None:
            callback(x)
    if singular:
        x -= np.add.reduce(x.ravel()) / x.size
    return (x, it, np.sqrt(rr) / bnorm) if full_output else x
