"""Floating-point companions to the exact kernel.

* :func:`factorize_te` diagonalizes ``A = T Q T^{-1}`` with the gauge ``T e = e``.
* :func:`fd_check_derivatives` compares closed-form derivatives of ``T`` and
  ``q`` with respect to ``A`` against central finite differences.
* :func:`simulate_rs` integrates the classical rational RS flow of
  ``H = sum_i W_ii(q) exp(p_i)`` with fixed-step RK4 and records ``tr L^n``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateSpectrum",
    "UnnormalizableT",
    "CollisionDetected",
    "factorize_te",
    "dT_dA",
    "dq_dA",
    "fd_check_derivatives",
    "Trajectory",
    "rs_hamiltonian",
    "rs_gradient",
    "rs_invariants",
    "initial_state",
    "simulate_rs",
]

GAP_TOL = 1e-8
COLLISION_TOL = 1e-6


class DegenerateSpectrum(ValueError):
    pass


class UnnormalizableT(ValueError):
    pass


class CollisionDetected(RuntimeError):
    """Two positions came within ``COLLISION_TOL``; ``trajectory`` holds the steps so far."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


# -- factorization ------------------------------------------------------------------------

def _spectral_order(w: np.ndarray) -> np.ndarray:
    """Sort by real part, then imaginary part; real parts within roundoff tie.

    Without the tolerance a complex-conjugate pair could swap places under a
    tiny perturbation.
    """
    tol = 1e-9 * max(1.0, float(np.max(np.abs(w))))
    idx = sorted(range(len(w)), key=lambda k: w[k].real)
    groups, cur = [], [idx[0]]
    for k in idx[1:]:
        if w[k].real - w[cur[-1]].real <= tol:
            cur.append(k)
        else:
            groups.append(cur)
            cur = [k]
    groups.append(cur)
    return np.array([k for g in groups for k in sorted(g, key=lambda k: w[k].imag)])


def factorize_te(A) -> tuple:
    """Return ``(T, Q)`` with ``A = T Q T^{-1}``, ``Q`` diagonal and ``T e = e``.

    Eigenvalues are ordered by real part, then imaginary part.
    """
    A = np.asarray(A, dtype=complex)
    w, V = np.linalg.eig(A)
    order = _spectral_order(w)
    w, V = w[order], V[:, order]
    n = len(w)
    if n > 1:
        gaps = np.abs(w[:, None] - w[None, :])[~np.eye(n, dtype=bool)]
        if gaps.min() <= GAP_TOL:
            raise DegenerateSpectrum(f"eigenvalue gap {gaps.min():.3g}")
    e = np.ones(n)
    # V d = e fixes the column scales of T = V diag(d)
    if np.linalg.cond(V) > 1e12:
        raise UnnormalizableT("eigenvector matrix is numerically singular")
    d = np.linalg.solve(V, e)
    if np.min(np.abs(d)) < 1e-12 * np.max(np.abs(d)):
        raise UnnormalizableT("row-sum gauge needs a vanishing column scale")
    T = V * d
    return T, np.diag(w)


def dT_dA(T, Q) -> np.ndarray:
    """``dT[i, j, m, n] = dT_ij / dA_mn`` in closed form."""
    q = np.diag(Q)
    n = len(q)
    Ti = np.linalg.inv(T)
    inv_q = np.zeros((n, n), dtype=complex)  # inv_q[j, a] = 1/q_ja, zero on the diagonal
    off = ~np.eye(n, dtype=bool)
    inv_q[off] = 1.0 / (q[:, None] - q[None, :])[off]
    # sum_{a != j} (1/q_ja) (T_ia T_nj Ti_am + T_ij T_na Ti_jm)
    first = np.einsum("ja,ia,nj,am->ijmn", inv_q, T, T, Ti)
    second = np.einsum("ja,ij,na,jm->ijmn", inv_q, T, T, Ti)
    return first + second


def dq_dA(T) -> np.ndarray:
    """``dq[i, m, n] = dq_i / dA_mn = T_ni Ti_im``."""
    Ti = np.linalg.inv(T)
    return np.einsum("ni,im->imn", T, Ti)


def fd_check_derivatives(A, h: float = 1e-6) -> dict:
    """Max normwise relative error of the closed forms against central differences.

    The error for each family is ``max |fd - cf| / max |cf|`` over all indices.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    T, Q = factorize_te(A)
    cf_T, cf_q = dT_dA(T, Q), dq_dA(T)
    fd_T = np.zeros_like(cf_T)
    fd_q = np.zeros_like(cf_q)
    for m in range(n):
        for k in range(n):
            E = np.zeros((n, n))
            E[m, k] = h
            Tp, Qp = factorize_te(A + E)
            Tm, Qm = factorize_te(A - E)
            fd_T[:, :, m, k] = (Tp - Tm) / (2 * h)
            fd_q[:, m, k] = (np.diag(Qp) - np.diag(Qm)) / (2 * h)
    return {
        "dTdA": float(np.max(np.abs(fd_T - cf_T)) / np.max(np.abs(cf_T))),
        "dQdA": float(np.max(np.abs(fd_q - cf_q)) / np.max(np.abs(cf_q))),
    }


# -- classical rational RS flow -------------------------------------------------------------

def _w_matrix(q: np.ndarray, gamma: float) -> np.ndarray:
    n = len(q)
    d = q[:, None] - q[None, :]  # d[a, j] = q_aj
    W = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            num = np.prod([d[a, j] + gamma for a in range(n) if a != i])
            den = np.prod([d[a, j] for a in range(n) if a != j])
            W[i, j] = num / den
    return W


def rs_hamiltonian(q, p, gamma: float) -> float:
    q, p = np.asarray(q, float), np.asarray(p, float)
    W = _w_matrix(q, gamma)
    return float(np.sum(np.diag(W) * np.exp(p)))


def _diag_w(q: np.ndarray, gamma: float) -> np.ndarray:
    d = q[:, None] - q[None, :]
    np.fill_diagonal(d, np.inf)
    return np.prod(1.0 + gamma / d, axis=0)  # W_jj = prod_{a != j} (1 + gamma/q_aj)


def rs_gradient(q, p, gamma: float) -> tuple:
    """``(dH/dq, dH/dp)`` coded from ``log W_jj = sum_{a!=j} log(1 + gamma/q_aj)``."""
    q, p = np.asarray(q, float), np.asarray(p, float)
    w = _diag_w(q, gamma)
    ep = np.exp(p)
    d = q[:, None] - q[None, :]  # d[i, j] = q_ij
    np.fill_diagonal(d, np.inf)
    g = gamma / (d * (d + gamma))  # g[i, j] = gamma / (q_ij (q_ij + gamma)), zero for i == j
    # d log W_jj / d q_i = -g[i, j] (i != j), d log W_jj / d q_j = sum_a g[a, j]
    hj = w * ep
    dHdq = -(g @ hj) + np.sum(g, axis=0) * hj
    return dHdq, hj


def rs_invariants(q, p, gamma: float, kmax: int = 3) -> np.ndarray:
    """``tr L^k`` for ``k = 1..kmax`` with ``L = W diag(exp p)``."""
    L = _w_matrix(np.asarray(q, float), gamma) * np.exp(np.asarray(p, float))[None, :]
    out = []
    Lk = np.eye(len(q))
    for _ in range(kmax):
        Lk = Lk @ L
        out.append(np.trace(Lk))
    return np.array(out)


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    invariants: np.ndarray
    gamma: float
    dt: float
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def drift(self) -> np.ndarray:
        """Relative drift ``|I_k(t) - I_k(0)| / |I_k(0)|`` per step and k."""
        i0 = self.invariants[0]
        return np.abs(self.invariants - i0) / np.abs(i0)

    def max_drift(self) -> np.ndarray:
        return self.drift().max(axis=0)

    def to_csv(self) -> str:
        n = self.n
        k = self.invariants.shape[1]
        header = (["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
                  + [f"I{i + 1}" for i in range(k)] + [f"drift{i + 1}" for i in range(k)])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        drift = self.drift()
        for s in range(len(self.t)):
            row = [self.t[s], *self.q[s], *self.p[s], *self.invariants[s], *drift[s]]
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def initial_state(n: int, seed: int = 0, gamma: float = 1.0) -> tuple:
    """Ordered positions and momenta from a fixed seed.

    With ``gamma > 0`` neighbours attract, and two particles at distance ``d``
    separate only if ``p_{i+1} - p_i > log((d + gamma) / (d - gamma))``.  Gaps
    are ``1.5 gamma .. 1.7 gamma`` and momentum steps exceed that threshold by
    1.6 .. 1.9, so the flow stays collision-free but strongly interacting for
    the first few time units.
    """
    rng = np.random.default_rng(seed)
    scale = abs(gamma) if gamma else 1.0
    gaps = scale * (1.5 + 0.2 * rng.uniform(0.0, 1.0, n - 1))
    steps = np.log((gaps + scale) / (gaps - scale)) + 1.6 + 0.3 * rng.uniform(0.0, 1.0, n - 1)
    q = np.concatenate([[0.0], np.cumsum(gaps)])
    p = np.concatenate([[0.0], np.cumsum(steps)])
    return q - q.mean(), p - p.mean()


def _rk4_step(q, p, dt, gamma):
    def f(q, p):
        dq, dp = rs_gradient(q, p, gamma)
        return dp, -dq

    k1q, k1p = f(q, p)
    k2q, k2p = f(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p)
    k3q, k3p = f(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p)
    k4q, k4p = f(q + dt * k3q, p + dt * k3p)
    return (q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q),
            p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))


def simulate_rs(n: int, gamma: float, q0=None, p0=None, dt: float = 1e-3, horizon: float = 10.0,
                seed: int | None = 0, record_every: int = 1,
                collision_tol: float = COLLISION_TOL) -> Trajectory:
    """RK4 integration of the RS flow; a negative ``dt`` integrates backwards.

    Raises :class:`CollisionDetected` (carrying the partial trajectory) when
    neighbouring positions come closer than ``collision_tol``.
    """
    if dt == 0 or horizon < 0:
        raise ValueError("need dt != 0 and horizon >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if q0 is None or p0 is None:
        sq, sp = initial_state(n, 0 if seed is None else seed, gamma)
        q0 = sq if q0 is None else q0
        p0 = sp if p0 is None else p0
    q = np.array(q0, dtype=float)
    p = np.array(p0, dtype=float)
    if q.shape != (n,) or p.shape != (n,):
        raise ValueError(f"initial data must have length {n}")
    steps = int(round(horizon / abs(dt)))
    ts, qs, ps, inv = [], [], [], []

    def record(s):
        ts.append(s * dt)
        qs.append(q.copy())
        ps.append(p.copy())
        inv.append(rs_invariants(q, p, gamma))

    def build():
        return Trajectory(np.array(ts), np.array(qs), np.array(ps), np.array(inv), gamma, dt, seed)

    def collided():
        return n > 1 and np.min(np.diff(q)) < collision_tol

    if np.any(np.diff(q) <= 0):
        raise ValueError("positions must be strictly increasing")
    if collided():
        record(0)
        raise CollisionDetected("initial positions collide", build())
    record(0)
    for s in range(1, steps + 1):
        q, p = _rk4_step(q, p, dt, gamma)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))) or collided():
            record(s)
            raise CollisionDetected(f"collision at t={s * dt:.6g}", build())
        if s % record_every == 0 or s == steps:
            record(s)
    return build()
