"""Shared time-stepping formulas for the lattice and grid solvers.

All steppers advance the damped second-order system
``rho u'' + nu u' + g(u) = 0`` written first-order in (u, v), or the
``rho = 0`` gradient flow ``nu u' = -g(u)``.  States are plain arrays of
any shape; ``g`` maps state arrays to force arrays of the same shape.
"""

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg


class ImplicitSolveError(RuntimeError):
    pass


def rk4_second_order(u, v, dt, rho, nu, force):
    def acc(u_, v_):
        return -(nu * v_ + force(u_)) / rho

    k1u, k1v = v, acc(u, v)
    k2u, k2v = v + 0.5 * dt * k1v, acc(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
    k3u, k3v = v + 0.5 * dt * k2v, acc(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
    k4u, k4v = v + dt * k3v, acc(u + dt * k3u, v + dt * k3v)
    un = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    vn = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return un, vn


def semi_implicit_euler(u, v, dt, rho, nu, force):
    vn = v + dt * (-(nu * v + force(u)) / rho)
    un = u + dt * vn
    return un, vn


def viscous_explicit(u, dt, nu, force):
    return u - (dt / nu) * force(u)


def viscous_rk4(u, dt, nu, force):
    def rhs(u_):
        return -force(u_) / nu

    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def viscous_implicit(u, dt, nu, force, tol=1e-10, max_newton=30):
    """Backward Euler solved by Newton with matrix-free conjugate gradients.

    The residual is ``r(x) = x + (dt/nu) g(x) - u``; its Jacobian is the
    identity plus a scaled energy Hessian, symmetric positive definite,
    so CG applies.  Jacobian-vector products use central differences of
    the force, whose rounding noise caps the useful inner tolerance, so
    each CG solve is modest and the outer Newton loop polishes down to
    ``tol`` (measured per degree of freedom).  Linear forces contract by
    the CG tolerance per iteration.
    """
    shape = u.shape
    x = u.copy()
    sqrt_n = np.sqrt(u.size)
    scale = max(np.linalg.norm(u) / sqrt_n, 1.0)
    n = u.size
    for _ in range(max_newton):
        r = x + (dt / nu) * force(x) - u
        if np.linalg.norm(r) / sqrt_n <= tol * scale:
            return x
        eta = 1e-6 * (1.0 + np.linalg.norm(x))

        def jvec(w_flat):
            w = w_flat.reshape(shape)
            dF = (force(x + eta * w) - force(x - eta * w)) / (2.0 * eta)
            return (w + (dt / nu) * dF).ravel()

        op = LinearOperator((n, n), matvec=jvec)
        dx, _ = cg(op, r.ravel(), rtol=1e-8, atol=0.0, maxiter=4 * n)
        if not np.all(np.isfinite(dx)):
            raise ImplicitSolveError("inner CG produced non-finite update")
        x = x - dx.reshape(shape)
    raise ImplicitSolveError(
        f"implicit step did not reach residual {tol:g} in {max_newton} Newton iterations"
    )
