"""Compiled inner loop for the progress iterations.

The numpy functions in ``basic`` and ``improved`` are the reference
implementation; this kernel fuses one whole iteration into a single numba
loop for speed. Both are cross-checked in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .coupling import PrimalDualState
from .electrical import DENSE_LIMIT
from .errors import ContractViolation, SingularResistance, TheoryViolation

DONE, CERT, LIMIT, BOOST = 0, 1, 2, 3
V_ENERGY, V_COUPLING, V_AUGMENT, V_THETA, V_CORRECTION = 10, 11, 12, 13, 14
V_DEMAND, V_NOT_COUPLED, V_EMPTY_SET, V_FIX_INPUT = 15, 16, 17, 18
V_SINGULAR = 20

STATUS_TEXT = {
    V_ENERGY: "energy above its upper bound without a certificate",
    V_COUPLING: "coupling lost after fixing",
    V_AUGMENT: "augmentation coupling bound exceeded",
    V_THETA: "first-order correction exceeds its per-arc bound",
    V_CORRECTION: "fixing correction energy above its bound",
    V_DEMAND: "state stopped being a feasible flow for its demand",
    V_NOT_COUPLED: "state is not well-coupled",
    V_EMPTY_SET: "no high-energy arc while the l3 gate fails",
    V_FIX_INPUT: "coupling violation too large for a fixing step",
    V_SINGULAR: "a residual capacity reached zero",
}

(P_TERM, P_STEP, P_INF, P_WC, P_FIX, P_SLACK, P_CEN, P_GUARD, P_VALID, P_RULE,
 P_GATE, P_THR, P_RHOSTAR, P_KSTAR, P_BUDGET, P_UBETA) = range(16)
N_PARAMS = 16

(T_ALPHA0, T_ALPHA, T_DELTA, T_ENERGY, T_N2, T_N3, T_N4, T_NINF, T_GAMMA, T_AUG,
 T_THETA, T_CORR, T_FIX, T_DEMAND, T_EVENT) = range(15)
N_COLS = 15

EV_PROGRESS, EV_FALLBACK, EV_GATED = 0, 1, 2


@njit(cache=True)
def _solve(tail, head, w, sigma, pos, nr, phi, flow):
    """Grounded Laplacian solve by dense Cholesky; fills potentials and Ohm flow, returns energy."""
    n = pos.size
    m = tail.size
    L = np.zeros((nr, nr))
    for e in range(m):
        a = pos[tail[e]]
        b = pos[head[e]]
        we = w[e]
        if a >= 0:
            L[a, a] += we
        if b >= 0:
            L[b, b] += we
        if a >= 0 and b >= 0:
            L[a, b] -= we
            L[b, a] -= we
    z = np.empty(nr)
    if nr > 0:
        C = np.linalg.cholesky(L)
        for v in range(n):
            if pos[v] >= 0:
                z[pos[v]] = sigma[v]
        for i in range(nr):
            acc = z[i]
            for k in range(i):
                acc -= C[i, k] * z[k]
            z[i] = acc / C[i, i]
        for i in range(nr - 1, -1, -1):
            acc = z[i]
            for k in range(i + 1, nr):
                acc -= C[k, i] * z[k]
            z[i] = acc / C[i, i]
    for v in range(n):
        phi[v] = z[pos[v]] if pos[v] >= 0 else 0.0
    en = 0.0
    for e in range(m):
        d = phi[head[e]] - phi[tail[e]]
        flow[e] = d * w[e]
        en += d * flow[e]
    return en


@njit(cache=True)
def run_kernel(tail, head, up, um, s, t, F, pos, nr, eligible, f, y, alpha, params,
               trace, it_limit):
    """Iterate progress steps in place on ``(f, y)``.

    Returns ``(status, iterations, alpha)``. On CERT or BOOST the state is
    the one at the start of the returned iteration; violation codes abort
    mid-iteration.
    """
    m = tail.size
    n = pos.size
    rule = int(params[P_RULE])
    validate = params[P_VALID] > 0
    guard = params[P_GUARD] > 0
    kstar = int(params[P_KSTAR])
    w = np.empty(m)
    gb = np.empty(m)
    rho = np.empty(m)
    theta = np.empty(m)
    ft = np.empty(m)
    phi = np.empty(n)
    sig = np.empty(n)
    chi = np.zeros(n)
    chosen = np.zeros(m, dtype=np.bool_)
    chi[s] = -F
    chi[t] = F
    it = 0
    while True:
        rem = (1.0 - alpha) * F
        if rule == 1:
            if rem <= params[P_THR]:
                return DONE, it, alpha
        elif rem < params[P_TERM]:
            return DONE, it, alpha
        if it >= it_limit:
            return LIMIT, it, alpha

        g2 = 0.0
        for e in range(m):
            rp = up[e] - f[e]
            rm = um[e] + f[e]
            if rp <= 0.0 or rm <= 0.0:
                return V_SINGULAR, it, alpha
            mis = y[head[e]] - y[tail[e]] - (1.0 / rp - 1.0 / rm)
            ge = abs(mis) * min(rp, rm)
            gb[e] = ge
            g2 += ge * ge
            w[e] = 1.0 / (1.0 / (rp * rp) + 1.0 / (rm * rm))
        if math.sqrt(g2) > params[P_WC] + params[P_SLACK]:
            return V_NOT_COUPLED, it, alpha
        if F * (y[t] - y[s]) > 2.0 * m / (1.0 - alpha):
            return CERT, it, alpha

        en = _solve(tail, head, w, chi, pos, nr, phi, ft)
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        mx = 0.0
        for e in range(m):
            rp = up[e] - f[e]
            rm = um[e] + f[e]
            r = ft[e] / min(rp, rm)
            rho[e] = r
            a = abs(r)
            a2 = a * a
            s2 += a2
            s3 += a2 * a
            s4 += a2 * a2
            if a > mx:
                mx = a
        n2 = math.sqrt(s2)
        n3 = s3 ** (1.0 / 3.0)
        n4 = s4 ** 0.25
        if guard and en > params[P_CEN] * m / (1.0 - alpha) ** 2 * (1.0 + 1e-6):
            return V_ENERGY, it, alpha

        event = EV_PROGRESS
        delta = min(1.0 / (params[P_STEP] * n4), 1.0 / (params[P_INF] * mx), 1.0 - alpha)
        if rule == 1:
            if n3 <= params[P_GATE] / (1.0 - alpha):
                event = EV_GATED
                delta = min(1.0 / (params[P_STEP] * n3), 1.0 / (params[P_INF] * mx), 1.0 - alpha)
            else:
                event = EV_FALLBACK
                rstar = params[P_RHOSTAR] / (1.0 - alpha)
                chosen[:] = False
                count = 0
                for _ in range(kstar):
                    best = -1
                    bv = -1.0
                    for e in range(m):
                        if eligible[e] and not chosen[e] and abs(rho[e]) >= rstar and abs(rho[e]) > bv:
                            best = e
                            bv = abs(rho[e])
                    if best < 0:
                        break
                    chosen[best] = True
                    count += 1
                if count == 0:
                    return V_EMPTY_SET, it, alpha
                for e in range(m):
                    if chosen[e]:
                        rp = up[e] - f[e]
                        rm = um[e] + f[e]
                        if 1.0 / rp - 1.0 / rm != 0.0:
                            beta = 2.0 + math.ceil(2.0 * params[P_UBETA] / min(rp, rm))
                            if beta - 1.0 <= params[P_BUDGET]:
                                return BOOST, it, alpha

        alpha0 = alpha
        for e in range(m):
            f[e] += delta * ft[e]
        for v in range(n):
            y[v] += delta * phi[v]
        alpha = alpha0 + delta

        fix2 = 0.0
        aug = -np.inf
        thx = -np.inf
        for v in range(n):
            sig[v] = 0.0
        for e in range(m):
            rp = up[e] - f[e]
            rm = um[e] + f[e]
            if rp <= 0.0 or rm <= 0.0:
                return V_SINGULAR, it, alpha
            mis = y[head[e]] - y[tail[e]] - (1.0 / rp - 1.0 / rm)
            u = min(rp, rm)
            vs = abs(mis) * u
            fix2 += vs * vs
            th = mis / (1.0 / (rp * rp) + 1.0 / (rm * rm))
            theta[e] = th
            if validate:
                dr = delta * rho[e]
                sl = vs - (4.0 / 3.0 * gb[e] + 7.0 * dr * dr)
                if sl > aug:
                    aug = sl
                ex = abs(th) - vs * u * (1.0 + 1e-9)
                if ex > thx:
                    thx = ex
        fixn = math.sqrt(fix2)
        if fixn > params[P_FIX] + params[P_SLACK]:
            return V_FIX_INPUT, it, alpha
        for e in range(m):
            f[e] += theta[e]
            sig[head[e]] -= theta[e]
            sig[tail[e]] += theta[e]
        for e in range(m):
            rp = up[e] - f[e]
            rm = um[e] + f[e]
            if rp <= 0.0 or rm <= 0.0:
                return V_SINGULAR, it, alpha
            w[e] = 1.0 / (1.0 / (rp * rp) + 1.0 / (rm * rm))
        corr = _solve(tail, head, w, sig, pos, nr, phi, ft)
        for e in range(m):
            f[e] += ft[e]
        for v in range(n):
            y[v] += phi[v]

        g2 = 0.0
        for e in range(m):
            rp = up[e] - f[e]
            rm = um[e] + f[e]
            if rp <= 0.0 or rm <= 0.0:
                return V_SINGULAR, it, alpha
            ge = abs(y[head[e]] - y[tail[e]] - (1.0 / rp - 1.0 / rm)) * min(rp, rm)
            g2 += ge * ge
        gam = math.sqrt(g2)
        if gam > params[P_WC] + params[P_SLACK]:
            return V_COUPLING, it, alpha

        dem = 0.0
        if validate:
            for v in range(n):
                sig[v] = 0.0
            for e in range(m):
                sig[head[e]] += f[e]
                sig[tail[e]] -= f[e]
            sig[t] -= alpha * F
            sig[s] += alpha * F
            for v in range(n):
                if abs(sig[v]) > dem:
                    dem = abs(sig[v])
            if aug > 1e-7:
                return V_AUGMENT, it, alpha
            if thx > 1e-15:
                return V_THETA, it, alpha
            if fixn <= params[P_FIX] and corr > 1.0 / 2000.0 + 1e-6:
                return V_CORRECTION, it, alpha
            if dem > 1e-7 * max(F, 1.0):
                return V_DEMAND, it, alpha

        row = trace[it]
        row[T_ALPHA0] = alpha0
        row[T_ALPHA] = alpha
        row[T_DELTA] = delta
        row[T_ENERGY] = en
        row[T_N2] = n2
        row[T_N3] = n3
        row[T_N4] = n4
        row[T_NINF] = mx
        row[T_GAMMA] = gam
        row[T_AUG] = aug
        row[T_THETA] = thx
        row[T_CORR] = corr
        row[T_FIX] = fixn
        row[T_DEMAND] = dem
        row[T_EVENT] = event
        it += 1


def grounding(g) -> tuple[np.ndarray, int]:
    """Position of every vertex in the grounded system, ``-1`` for grounded vertices."""
    ncomp, labels = g.components
    roots = np.full(ncomp, -1, dtype=np.intp)
    for v in range(g.n - 1, -1, -1):
        roots[labels[v]] = v
    roots[labels[g.s]] = g.s
    grounded = np.zeros(g.n, dtype=bool)
    grounded[roots] = True
    pos = np.full(g.n, -1, dtype=np.int64)
    keep = np.flatnonzero(~grounded)
    pos[keep] = np.arange(keep.size)
    return pos, int(keep.size)


def use_kernel(g, cfg) -> bool:
    """Whether ``cfg`` lets the compiled loop stand in for the reference one on ``g``."""
    if cfg.engine == "numpy":
        return False
    fits = (not cfg.check_throughput and cfg.linear_solver in ("auto", "dense")
            and g.n - g.components[0] <= DENSE_LIMIT)
    if cfg.engine == "numba" and not fits:
        raise ContractViolation("compiled engine needs a dense-sized system and no throughput checks")
    return fits


@dataclass
class KernelRun:
    status: int
    state: PrimalDualState
    records: list


@dataclass(frozen=True)
class ImprovedRule:
    """Step-rule inputs the compiled loop needs in improved mode."""

    gate: float
    threshold: float
    rho_star: float
    kstar: int
    budget_left: int
    U: float
    eligible: np.ndarray


def _params(cfg, guard: bool, rule: ImprovedRule | None) -> np.ndarray:
    c = cfg.constants
    p = np.zeros(N_PARAMS)
    p[P_TERM] = cfg.termination
    p[P_STEP] = c.step_denominator
    p[P_INF] = c.infty_safety_denominator
    p[P_WC] = c.well_coupled_bound
    p[P_FIX] = c.fixing_input_bound
    p[P_SLACK] = c.coupling_slack
    p[P_CEN] = c.c_energy
    p[P_GUARD] = float(guard)
    p[P_VALID] = float(cfg.validate)
    if rule is not None:
        p[P_RULE] = 1.0
        p[P_GATE] = rule.gate
        p[P_THR] = rule.threshold
        p[P_RHOSTAR] = rule.rho_star
        p[P_KSTAR] = rule.kstar
        p[P_BUDGET] = rule.budget_left
        p[P_UBETA] = rule.U
    return p


def _record(row: np.ndarray, it: int, m: int, validate: bool, improved: bool):
    from .basic import IterationTrace

    ev = int(row[T_EVENT])
    extra = {"rule": "l3" if ev == EV_GATED else "l4"} if improved else {}
    if validate:
        extra.update(augmentation_slack=float(row[T_AUG]), theta_excess=float(row[T_THETA]),
                     correction_energy=float(row[T_CORR]), fix_input=float(row[T_FIX]),
                     demand_error=float(row[T_DEMAND]))
    return IterationTrace(it, "progress", float(row[T_ALPHA0]), float(row[T_ALPHA]),
                          float(row[T_DELTA]), float(row[T_ENERGY]), float(row[T_N2]),
                          float(row[T_N3]), float(row[T_N4]), float(row[T_NINF]),
                          float(row[T_GAMMA]), m, extra)


def run_progress(state: PrimalDualState, cfg, *, guard: bool, first_iter: int, limit: int,
                 rule: ImprovedRule | None = None) -> KernelRun:
    """Run compiled progress iterations from ``state`` until a status other than progress.

    Violation statuses are raised as the same exceptions the reference loop raises.
    """
    g = state.graph
    pos, nr = grounding(g)
    f = state.flow.astype(float, copy=True)
    y = state.y.astype(float, copy=True)
    eligible = rule.eligible if rule is not None else np.zeros(g.m, dtype=bool)
    trace = np.empty((max(limit, 0), N_COLS))
    status, done, alpha = run_kernel(
        g.tail.astype(np.int64), g.head.astype(np.int64),
        np.asarray(g.cap_plus, dtype=float), np.asarray(g.cap_minus, dtype=float),
        g.s, g.t, float(state.F), pos, nr, np.asarray(eligible, dtype=np.bool_), f, y,
        float(state.alpha), _params(cfg, guard, rule), trace, max(limit, 0))
    status, done = int(status), int(done)
    records = [_record(trace[i], first_iter + i, g.m, cfg.validate, rule is not None)
               for i in range(done)]
    if status >= V_ENERGY:
        text = STATUS_TEXT[status]
        if status == V_SINGULAR:
            raise SingularResistance(-1, text)
        if status in (V_NOT_COUPLED, V_FIX_INPUT):
            raise ContractViolation(text)
        raise TheoryViolation(f"{text} (iteration {first_iter + done})")
    return KernelRun(status, PrimalDualState(g, f, y, float(alpha), state.F), records)
