"""Named smooth displacement fields with compact support in the domain.

The convergence studies need initial data that are smooth, vanish near
the boundary, and come with analytic gradients (for gradient-error
tables and recovery checks).  Fields are separable products of per-axis
factors: an infinitely smooth bump supported on the middle 80% of each
axis, optionally modulated by sine modes of the domain.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import Box


class InitialDataError(ValueError):
    pass


def _bump_parts(x, lo, hi):
    """Smooth bump on (lo, hi), normalised to peak 1; returns (B, B')."""
    s = (x - lo) / (hi - lo)
    val = np.zeros_like(s)
    der = np.zeros_like(s)
    m = (s > 0.0) & (s < 1.0)
    q = s[m] * (1.0 - s[m])
    e = np.exp(4.0 - 1.0 / q)
    val[m] = e
    der[m] = e * (1.0 - 2.0 * s[m]) / (q * q) / (hi - lo)
    return val, der


@dataclass(frozen=True)
class _Axis:
    """A one-axis factor carrying its value and derivative."""

    kind: str  # "bump", "sine", "one"
    lo: float
    hi: float
    mode: int = 0

    def parts(self, x):
        if self.kind == "one":
            return np.ones_like(x), np.zeros_like(x)
        if self.kind == "bump":
            return _bump_parts(x, self.lo, self.hi)
        freq = self.mode * np.pi / (self.hi - self.lo)
        phase = freq * (x - self.lo)
        return np.sin(phase), freq * np.cos(phase)


@dataclass(frozen=True)
class _Product(_Axis):
    """Pointwise product of two axis factors."""

    factors: tuple = ()

    def parts(self, x):
        v1, d1 = self.factors[0].parts(x)
        v2, d2 = self.factors[1].parts(x)
        return v1 * v2, v1 * d2 + d1 * v2


def _sine_bump_axis(mode, axis_lo, axis_hi, sup_lo, sup_hi):
    sine = _Axis("sine", axis_lo, axis_hi, mode)
    bump = _Axis("bump", sup_lo, sup_hi)
    return _Product("product", axis_lo, axis_hi, factors=(sine, bump))


@dataclass(frozen=True)
class SmoothField:
    """Separable vector field: component c is amp_c * prod_a f_{c,a}(x_a)."""

    name: str
    dim: int
    amplitudes: tuple
    factors: tuple  # factors[c][a] is an _Axis

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros((len(pts), self.dim))
        for c, amp in enumerate(self.amplitudes):
            acc = np.full(len(pts), amp)
            for a in range(self.dim):
                v, _ = self.factors[c][a].parts(pts[:, a])
                acc = acc * v
            out[:, c] = acc
        return out

    def grad(self, pts):
        """Gradients, shape (n, d, d) with [.., c, a] = d_a w_c."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        vals = np.empty((self.dim, self.dim, n))  # [c, a] -> factor value
        ders = np.empty_like(vals)
        for c in range(self.dim):
            for a in range(self.dim):
                vals[c, a], ders[c, a] = self.factors[c][a].parts(pts[:, a])
        out = np.zeros((n, self.dim, self.dim))
        for c, amp in enumerate(self.amplitudes):
            for a in range(self.dim):
                acc = np.full(n, amp)
                for b in range(self.dim):
                    acc = acc * (ders[c, b] if b == a else vals[c, b])
                out[:, c, a] = acc
        return out

    def __call__(self, pts):
        return self.value(pts)

    def grad_sup_norm(self, omega: Box, n: int = 4096) -> float:
        """Max Frobenius norm of the gradient, sampled on a fine grid."""
        axes = [
            np.linspace(omega.lo[a], omega.hi[a], max(8, int(n ** (1 / self.dim))))
            for a in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        g = self.grad(pts)
        return float(np.sqrt((g**2).sum(axis=(1, 2))).max())


_SUPPORT_FRACTION = (0.1, 0.9)


def initial_field(name: str, dim: int, omega: Box) -> SmoothField | None:
    """Look up a named field for the given domain; ``zero`` returns None."""
    if name == "zero":
        return None
    lo, hi = omega.lo, omega.hi
    sup = [
        (
            lo[a] + _SUPPORT_FRACTION[0] * (hi[a] - lo[a]),
            lo[a] + _SUPPORT_FRACTION[1] * (hi[a] - lo[a]),
        )
        for a in range(dim)
    ]

    def sine_bump(mode, a):
        return _sine_bump_axis(mode, lo[a], hi[a], sup[a][0], sup[a][1])

    def bump(a):
        return _Axis("bump", sup[a][0], sup[a][1])

    if dim == 1:
        table = {
            "sine_bump": ((1.0,), ((sine_bump(1, 0),),)),
            "bump": ((1.0,), ((bump(0),),)),
            "sine3_bump": ((1.0,), ((sine_bump(3, 0),),)),
        }
    elif dim == 2:
        table = {
            "sine_bump": (
                (1.0, 0.5),
                (
                    (sine_bump(1, 0), sine_bump(1, 1)),
                    (sine_bump(2, 0), sine_bump(1, 1)),
                ),
            ),
            "bump": (
                (1.0, -0.5),
                ((bump(0), bump(1)), (bump(0), bump(1))),
            ),
            "sine3_bump": (
                (1.0, 0.3),
                ((sine_bump(3, 0), bump(1)), (bump(0), sine_bump(2, 1))),
            ),
        }
    else:
        table = {
            "bump": (
                (1.0, -0.5, 0.25),
                tuple(tuple(bump(a) for a in range(3)) for _ in range(3)),
            ),
        }
    if name not in table:
        raise InitialDataError(
            f"unknown initial field '{name}' for dim {dim}; "
            f"available: zero, {', '.join(sorted(table))}"
        )
    amps, factors = table[name]
    return SmoothField(name=name, dim=dim, amplitudes=amps, factors=factors)


FIELD_NAMES = ("zero", "sine_bump", "bump", "sine3_bump")
