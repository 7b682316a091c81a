"""Compiled inner loops of the integrators. The piecewise-linear loop works in shifted coordinates."""
import math

import numpy as np
from numba import njit

# layout of rld_chaos.model.kernel_params
R, L, E, OMEGA, VI, C1, C2, G1, G2, COSINE, FORWARD_ONLY = range(11)

OK = 0
DIVERGED = 1
EVENT_FAILED = 2

MAX_CROSSINGS_PER_STEP = 64
LOG_DOMAIN_LIMIT = 700.0  # exp overflows just above 709
MAX_SOLVE_ITERATIONS = 200


@njit(cache=True, nogil=True)
def region_code(x0):
    return 2 if x0 > 0.0 else 1


@njit(cache=True, nogil=True)
def drive(t, p):
    if p[COSINE] > 0.5:
        return p[E] * math.cos(p[OMEGA] * t)
    return p[E] * math.sin(p[OMEGA] * t)


@njit(cache=True, nogil=True)
def derivative(t, x0, x1, region, p):
    if region == 2:
        c = p[C2]
        g = p[G2]
        theta = 1.0
    else:
        c = p[C1]
        g = p[G1]
        theta = 0.0 if p[FORWARD_ONLY] > 0.5 else 1.0
    dq = -(g / c) * x0 + x1
    di = -x0 / (p[L] * c) - (p[R] / p[L]) * x1 + (drive(t, p) - p[VI] * theta) / p[L]
    return dq, di


@njit(cache=True, nogil=True)
def sliding(t, x1, h, p):
    """
    True when both regions push the current towards zero on the switching surface, so the
    state can leave q = 0 in neither direction. Only the forward-only threshold convention
    has a current-derivative jump across the surface.
    """
    _, reverse = derivative(t, 0.0, x1, 1, p)
    _, forward = derivative(t, 0.0, x1, 2, p)
    return reverse > 0.0 and forward < 0.0 and abs(x1) <= h * (reverse - forward)


@njit(cache=True, nogil=True)
def rk4(t, x0, x1, h, region, p):
    a0, a1 = derivative(t, x0, x1, region, p)
    b0, b1 = derivative(t + 0.5 * h, x0 + 0.5 * h * a0, x1 + 0.5 * h * a1, region, p)
    c0, c1 = derivative(t + 0.5 * h, x0 + 0.5 * h * b0, x1 + 0.5 * h * b1, region, p)
    d0, d1 = derivative(t + h, x0 + h * c0, x1 + h * c1, region, p)
    return (
        x0 + h / 6 * (a0 + 2 * b0 + 2 * c0 + d0),
        x1 + h / 6 * (a1 + 2 * b1 + 2 * c1 + d1),
    )


@njit(cache=True, nogil=True)
def integrate_pwl(p, x0, x1, t_start, h, n_steps, tol, max_iter):
    """
    Fixed-step RK4 with the region frozen at each (sub)step start. When a step ends in the other
    region, the crossing offset inside the step is bisected down to `tol`, the state is advanced
    to it and the step resumes from there in the new region.

    A crossing at which both regions drive the current back to zero pins the state to
    q = 0, i = 0. It stays pinned, step by step, for as long as that holds.
    Returns (states, switch_times, status, failure_time).
    """
    states = np.empty((n_steps + 1, 2))
    states[0, 0] = x0
    states[0, 1] = x1
    switches = np.empty(64)
    n_switch = 0
    for n in range(n_steps):
        t = t_start + n * h
        if x0 == 0.0 and sliding(t, x1, h, p):
            x1 = 0.0
            states[n + 1, 0] = x0
            states[n + 1, 1] = x1
            continue
        offset = 0.0
        crossings = 0
        while True:
            region = region_code(x0)
            span = h - offset
            z0, z1 = rk4(t + offset, x0, x1, span, region, p)
            if not (math.isfinite(z0) and math.isfinite(z1)):
                return states[: n + 1].copy(), switches[:n_switch].copy(), DIVERGED, t + offset
            if region_code(z0) == region:
                x0 = z0
                x1 = z1
                break

            lo = 0.0
            hi = span
            iterations = 0
            while hi - lo >= tol:
                iterations += 1
                if iterations > max_iter:
                    return states[: n + 1].copy(), switches[:n_switch].copy(), EVENT_FAILED, t + offset
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break  # offset resolution exhausted
                m0, m1 = rk4(t + offset, x0, x1, mid, region, p)
                if region_code(m0) == region:
                    lo = mid
                else:
                    hi = mid

            x0, x1 = rk4(t + offset, x0, x1, hi, region, p)
            offset += hi
            if n_switch == switches.shape[0]:
                grown = np.empty(2 * n_switch)
                grown[:n_switch] = switches
                switches = grown
            switches[n_switch] = t + offset
            n_switch += 1

            if sliding(t + offset, x1, h, p):
                x0 = 0.0
                x1 = 0.0
                break
            crossings += 1
            if crossings > MAX_CROSSINGS_PER_STEP:
                return states[: n + 1].copy(), switches[:n_switch].copy(), EVENT_FAILED, t + offset
            if offset >= h:
                break
        states[n + 1, 0] = x0
        states[n + 1, 1] = x1
    return states, switches[:n_switch].copy(), OK, 0.0


@njit(cache=True, nogil=True)
def implicit_residual(u, u_prev, forcing, h, p, i_s, v_s):
    """
    Backward-Euler residual of L di/dt = drive - R i - v_s u with i = I_s expm1(u), and its
    derivative in u. Strictly increasing and convex in u.
    """
    grow = math.exp(u)
    value = (
        p[L] * i_s * math.exp(u_prev) * math.expm1(u - u_prev)
        + h * p[R] * i_s * math.expm1(u)
        + h * v_s * u
        - h * forcing
    )
    slope = (p[L] + h * p[R]) * i_s * grow + h * v_s
    return value, slope


@njit(cache=True, nogil=True)
def implicit_step(u_prev, forcing, h, p, i_s, v_s):
    lo = u_prev - 1.0
    while implicit_residual(lo, u_prev, forcing, h, p, i_s, v_s)[0] > 0.0:
        if lo <= -LOG_DOMAIN_LIMIT:
            return math.nan
        lo = max(u_prev - 2.0 * (u_prev - lo), -LOG_DOMAIN_LIMIT)
    hi = min(u_prev + 1.0, LOG_DOMAIN_LIMIT)
    while implicit_residual(hi, u_prev, forcing, h, p, i_s, v_s)[0] < 0.0:
        if hi >= LOG_DOMAIN_LIMIT:
            return math.nan
        hi = min(u_prev + 2.0 * (hi - u_prev), LOG_DOMAIN_LIMIT)

    u = min(max(u_prev, lo), hi)
    for _ in range(MAX_SOLVE_ITERATIONS):
        value, slope = implicit_residual(u, u_prev, forcing, h, p, i_s, v_s)
        if value == 0.0:
            break
        if value > 0.0:
            hi = u
        else:
            lo = u
        candidate = u - value / slope
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)  # Newton left the bracket
        if abs(candidate - u) <= 1e-14 * max(1.0, abs(u)):
            u = candidate
            break
        u = candidate
    return u


@njit(cache=True, nogil=True)
def integrate_log_current(p, i_s, v_s, u0, t_start, h, n_steps):
    """
    Backward Euler for the exponential-diode loop in u = v_D / (n V_T).
    Returns (u samples, status, failure_time).
    """
    us = np.empty(n_steps + 1)
    us[0] = u0
    u = u0
    for n in range(n_steps):
        t = t_start + (n + 1) * h
        u = implicit_step(u, drive(t, p), h, p, i_s, v_s)
        if not math.isfinite(u):
            return us[: n + 1].copy(), DIVERGED, t
        us[n + 1] = u
    return us, OK, 0.0
