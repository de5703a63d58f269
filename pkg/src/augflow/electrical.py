"""Electrical flows: Laplacian assembly, grounded solves, Ohm's law, energies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import lapack
from scipy.sparse.linalg import cg, splu

from .errors import ContractViolation, SingularResistance, UnroutableDemand
from .graph import Graph, ResidualView, residual_capacities

DENSE_LIMIT = 400
REFINE_STEPS = 2


def coupling_resistances(g: Graph, f) -> np.ndarray:
    """Per-arc resistance ``1/res_plus^2 + 1/res_minus^2``; needs strict interiority."""
    res = residual_capacities(g, f)
    if (res.plus <= 0).any() or (res.minus <= 0).any():
        raise SingularResistance(int(np.flatnonzero((res.plus <= 0) | (res.minus <= 0))[0]))
    return 1.0 / res.plus**2 + 1.0 / res.minus**2


def energy(r, f) -> float:
    r, f = np.asarray(r, dtype=float), np.asarray(f, dtype=float)
    return float(np.dot(r, f * f))


def congestion(flow, resid: ResidualView) -> np.ndarray:
    u = resid.sym
    if (u <= 0).any():
        bad = int(np.flatnonzero(u <= 0)[0])
        raise SingularResistance(bad, f"zero symmetric residual on arc {bad}")
    return np.asarray(flow, dtype=float) / u


@dataclass(frozen=True)
class RhoNorms:
    norm2: float
    norm3: float
    norm4: float
    norminf: float


def rho_norms(rho: np.ndarray) -> RhoNorms:
    a = np.abs(rho)
    if a.size == 0:
        return RhoNorms(0.0, 0.0, 0.0, 0.0)
    a2 = a * a
    return RhoNorms(float(np.sqrt(a2.sum())), float(np.dot(a2, a)) ** (1 / 3),
                    float(np.dot(a2, a2)) ** 0.25, float(a.max()))


class LaplacianSystem:
    """Grounded Laplacian of a fixed topology; conductances change per solve.

    One vertex per connected component is pinned to potential zero (the
    source for its own component), which makes the reduced system positive
    definite whenever all conductances are positive.
    """

    def __init__(self, g: Graph, method: str = "auto"):
        if method not in ("auto", "dense", "sparse", "cg"):
            raise ContractViolation(f"unknown linear solver {method!r}")
        ncomp, labels = g.components
        roots = np.full(ncomp, -1, dtype=np.intp)
        for v in range(g.n - 1, -1, -1):
            roots[labels[v]] = v
        roots[labels[g.s]] = g.s
        self.n, self.ncomp, self.labels = g.n, ncomp, labels
        self.tail, self.head = g.tail, g.head
        grounded = np.zeros(g.n, dtype=bool)
        grounded[roots] = True
        self.keep = np.flatnonzero(~grounded)
        nr = self.nr = self.keep.size
        if method == "auto":
            method = "dense" if nr <= DENSE_LIMIT else "sparse"
        self.method = method

        pos = np.full(g.n, -1, dtype=np.intp)
        pos[self.keep] = np.arange(nr)
        pt, ph = pos[g.tail], pos[g.head]
        both = np.flatnonzero((pt >= 0) & (ph >= 0))
        dt, dh = np.flatnonzero(pt >= 0), np.flatnonzero(ph >= 0)
        self._arc_sel = np.concatenate([both, both, dt, dh])
        self._sign = np.concatenate([-np.ones(2 * both.size), np.ones(dt.size + dh.size)])
        self._rows = np.concatenate([pt[both], ph[both], pt[dt], ph[dh]])
        self._cols = np.concatenate([ph[both], pt[both], pt[dt], ph[dh]])
        self._flat = self._rows * nr + self._cols

    def matrix(self, w: np.ndarray):
        vals = w[self._arc_sel] * self._sign
        if self.method == "dense":
            return np.bincount(self._flat, vals, self.nr * self.nr).reshape(self.nr, self.nr)
        return sparse.csc_matrix((vals, (self._rows, self._cols)), shape=(self.nr, self.nr))

    def check_balance(self, sigma: np.ndarray) -> None:
        scale = max(float(np.abs(sigma).max(initial=0.0)), 1e-300)
        if abs(sigma.sum()) > 1e-9 * scale:
            raise ContractViolation("demand vector does not sum to zero")
        if self.ncomp > 1:
            per = np.bincount(self.labels, sigma, self.ncomp)
            if (np.abs(per) > 1e-9 * scale).any():
                raise UnroutableDemand("demand has net mass inside a component")

    def solve(self, w: np.ndarray, sigma: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
        """Potentials for demand ``sigma`` under conductances ``w``, and the relative residual."""
        self.check_balance(sigma)
        phi = np.zeros(self.n)
        b = sigma[self.keep]
        bnorm = math.sqrt(float(np.dot(sigma, sigma)))
        if self.nr == 0 or bnorm == 0.0:
            return phi, 0.0
        L = self.matrix(w)
        if self.method == "dense":
            c, info = lapack.dpotrf(L)
            if info != 0:
                raise ContractViolation("grounded Laplacian is not positive definite")
            x, _ = lapack.dpotrs(c, b)
            for _ in range(REFINE_STEPS):
                r = b - L @ x
                rel = math.sqrt(float(np.dot(r, r))) / bnorm
                if rel <= tol:
                    break
                x = x + lapack.dpotrs(c, r)[0]
            else:
                r = b - L @ x
                rel = math.sqrt(float(np.dot(r, r))) / bnorm
        elif self.method == "sparse":
            lu = splu(L)
            x = lu.solve(b)
            for _ in range(REFINE_STEPS):
                r = b - L @ x
                rel = float(np.linalg.norm(r)) / bnorm
                if rel <= tol:
                    break
                x = x + lu.solve(r)
            else:
                rel = float(np.linalg.norm(b - L @ x)) / bnorm
        else:
            d = L.diagonal()
            pre = sparse.diags(1.0 / d)
            x, _ = cg(L, b, rtol=tol * bnorm / max(float(np.linalg.norm(b)), 1e-300),
                      atol=0.0, M=pre, maxiter=10 * self.nr + 100)
            rel = float(np.linalg.norm(b - L @ x)) / bnorm
        phi[self.keep] = x
        return phi, rel


def laplacian_system(g: Graph, method: str = "auto") -> LaplacianSystem:
    cache = g.__dict__.setdefault("_laplacian_cache", {})
    if method not in cache:
        cache[method] = LaplacianSystem(g, method)
    return cache[method]


@dataclass(frozen=True)
class ElectricalFlowResult:
    flow: np.ndarray
    potentials: np.ndarray
    energy: float
    dual_energy: float
    solve_residual: float
    congestion: np.ndarray | None = None
    norms: RhoNorms | None = None


def solve_electrical_flow(g: Graph, r, sigma, tol: float = 1e-10,
                          resid: ResidualView | None = None,
                          method: str = "auto") -> ElectricalFlowResult:
    """Minimum-energy flow meeting ``sigma`` under resistances ``r``.

    Potentials are pinned at zero on the source. When ``resid`` is given the
    congestion vector and its norms are filled in as well.
    """
    r = np.asarray(r, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if r.shape != (g.m,) or sigma.shape != (g.n,):
        raise ContractViolation("resistance or demand vector does not match the graph")
    if not (np.all(r > 0) and np.all(np.isfinite(r))):
        raise ContractViolation("resistances must be positive and finite")
    return electrical_flow_unchecked(g, 1.0 / r, sigma, tol, resid, method)


def electrical_flow_unchecked(g: Graph, w: np.ndarray, sigma: np.ndarray, tol: float,
                              resid: ResidualView | None = None,
                              method: str = "auto") -> ElectricalFlowResult:
    """Same as :func:`solve_electrical_flow` but takes conductances and skips input checks."""
    phi, rel = laplacian_system(g, method).solve(w, sigma, tol)
    drop = phi[g.head] - phi[g.tail]
    flow = drop * w
    e = float(np.dot(drop, flow))
    rho = norms = None
    if resid is not None:
        rho = congestion(flow, resid)
        norms = rho_norms(rho)
    return ElectricalFlowResult(flow, phi, e, float(np.dot(sigma, phi)), rel, rho, norms)


def dual_energy_bound(g: Graph, r, sigma, phi) -> float:
    """Normalized potential energy ``sum (phi_v - phi_u)^2 / r`` with ``sigma . phi = 1``.

    Its reciprocal never exceeds the electrical energy of ``sigma``.
    """
    phi = np.asarray(phi, dtype=float)
    scale = float(np.dot(sigma, phi))
    if scale == 0.0:
        raise ContractViolation("potentials are orthogonal to the demand; cannot normalize")
    phi = phi / scale
    drop = phi[g.head] - phi[g.tail]
    return float(np.sum(drop * drop / np.asarray(r, dtype=float)))
