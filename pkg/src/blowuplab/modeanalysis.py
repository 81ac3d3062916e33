"""ODE-side mode analysis for the linearised similarity equation.

Separated solutions e^{lam*tau} phi(y) of the linearised similarity PDE obey a
second-order ODE with regular singular points.  After the Lorentz change of
similarity frames the equation is hypergeometric,

    z (1-z) phi'' + (c - (a+b+1) z) phi' - a b phi = 0,

with a = lam, b = lam - 1, c = lam - sqrt(1-p).  A genuinely smooth mode on
[-1, 1] must be smooth at both singular endpoints z = 0 and z = 1
simultaneously; the scanner quantifies the obstruction ("connection defect")
by continuing the locally-smooth solution from z = 1 to a collar near z = 0
and measuring its component along the non-smooth local branch there.
"""

from __future__ import annotations

import cmath
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import loggamma

_INT_TOL = 1e-9          # tolerance for detecting integer exponent gaps
DEFAULT_SERIES_N = 40    # Frobenius truncation order
COLLAR_DELTA = 1e-2      # collar [delta, 2*delta] for the branch fit
CONT_RTOL = 1e-11        # continuation tolerance


class ZeroCoefficientError(ValueError):
    """Series coefficient identically zero, ratio undefined."""


class HypergeomPoleError(ValueError):
    """Lower parameter c at a non-positive integer."""


@dataclass(frozen=True)
class EigenParams:
    p: float
    lam: complex

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not (math.isfinite(self.lam.real) and math.isfinite(self.lam.imag)):
            raise ValueError("lambda must be finite")

    @property
    def root_1mp(self) -> float:
        return math.sqrt(1.0 - self.p)


@dataclass(frozen=True)
class PartialFractionCoeffs:
    A: complex
    B: complex
    C: complex
    D: complex
    E: complex
    F: complex


@dataclass(frozen=True)
class HypergeomParams:
    a: complex
    b: complex
    c: complex


def pf_coeffs(p: float, lam: complex) -> PartialFractionCoeffs:
    """Partial-fraction coefficients of the first-order terms of the
    eigenequation about its three finite singular points."""
    ep = EigenParams(p, lam)
    g = ep.root_1mp
    return PartialFractionCoeffs(
        A=lam - g,
        B=lam + g,
        C=2.0 * g,
        D=lam * lam / 2.0 - lam / 2.0 + lam * g,
        E=-lam * lam / 2.0 + lam / 2.0 + lam * g,
        F=-2.0 * lam * (1.0 - p),
    )


def lorentz_frame_params(p: float, lam: complex) -> HypergeomParams:
    """Hypergeometric parameters of the boosted-frame eigenequation."""
    g = EigenParams(p, lam).root_1mp
    return HypergeomParams(a=lam, b=lam - 1.0, c=lam - g)


def lorentz_similarity_map(p: float, taup: float, yp: float) -> tuple[float, float]:
    """Boost expressed directly in similarity coordinates.

    Maps the similarity frame of the boosted observer (tau', y') to the rest
    frame (tau, y); defined for 1 - sqrt(1-p) y' > 0.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("boost map needs p in (0, 1)")
    g = math.sqrt(1.0 - p)
    denom = 1.0 - g * yp
    if denom <= 0.0:
        raise ValueError(f"similarity boost undefined: 1 - sqrt(1-p)*y' = {denom}")
    tau = taup - math.log(denom / p)
    y = (yp - g) / denom
    return tau, y


def log_pochhammer(x: complex, n: int) -> complex:
    """log (x)_n, via loggamma for large n."""
    if n == 0:
        return 0.0
    if n <= 50:
        total = 0.0 + 0.0j
        for k in range(n):
            total += cmath.log(x + k)
        return total
    return loggamma(x + n) - loggamma(x)


def hypergeom_2F1(a: complex, b: complex, c: complex, z: complex,
                  N: int = 200) -> complex:
    """Truncated Gauss series sum_{n<N} (a)_n (b)_n / ((c)_n n!) z^n.

    Term-recurrence evaluation; raises if c sits at a non-positive integer
    (unless a or b terminates the series first), warns outside |z| < 1.
    """
    c_int = round(c.real) if abs(c.imag) < _INT_TOL else None
    if c_int is not None and c_int <= 0 and abs(c - c_int) < _INT_TOL:
        # a or b hitting a non-positive integer above c truncates the series
        # before the pole is reached
        def _trunc(x):
            xi = round(x.real) if abs(complex(x).imag) < _INT_TOL else None
            if xi is not None and xi <= 0 and abs(x - xi) < _INT_TOL:
                return -xi
            return None

        na, nb = _trunc(complex(a)), _trunc(complex(b))
        stop = min(n for n in (na, nb) if n is not None) if (na is not None or nb is not None) else None
        if stop is None or stop > -c_int:
            raise HypergeomPoleError(f"c = {c} is a non-positive integer")
    if abs(z) >= 1.0:
        warnings.warn(f"|z| = {abs(z)} >= 1: series does not converge", stacklevel=2)
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for n in range(N - 1):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1.0):
            break
    return total


def series_coeff_ratio(p: float, lam: complex, n: int) -> complex:
    """Ratio alpha_{n+1}/alpha_n of the smooth-branch coefficients.

    r_n = (lam+n)(lam+n-1) / ((n+1)(lam+sqrt(1-p)+n)); tends to 1, so the
    radius of convergence of the smooth branch is exactly 1.
    """
    lam = complex(lam)
    if lam in (0.0 + 0.0j, 1.0 + 0.0j):
        raise ZeroCoefficientError("series terminates: coefficients vanish for n >= 1")
    g = math.sqrt(1.0 - p)
    return (lam + n) * (lam + n - 1.0) / ((n + 1.0) * (lam + g + n))


# ---------------------------------------------------------------------------
# Frobenius machinery at a regular singular point
# ---------------------------------------------------------------------------

def indicial_roots(p0_coeff: complex, q0_coeff: complex) -> tuple[complex, complex]:
    """Roots of s(s-1) + p0 s + q0, ordered Re(s1) >= Re(s2)."""
    disc = cmath.sqrt((p0_coeff - 1.0) ** 2 - 4.0 * q0_coeff)
    s_a = (1.0 - p0_coeff + disc) / 2.0
    s_b = (1.0 - p0_coeff - disc) / 2.0
    if s_a.real >= s_b.real:
        return s_a, s_b
    return s_b, s_a


@dataclass
class FrobeniusExpansion:
    """One local solution z^s sum a_n z^n (+ optional c_log * base * log z)."""
    s: complex
    coeffs: np.ndarray
    log_branch: bool
    radius_lower_bound: float
    c_log: complex = 0.0
    base: "FrobeniusExpansion | None" = field(default=None, repr=False)

    def eval(self, z: complex) -> tuple[complex, complex]:
        """(phi, phi') at z (principal branch of z^s and log z)."""
        n = np.arange(len(self.coeffs))
        zs = z ** self.s
        poly = np.sum(self.coeffs * z ** n)
        dpoly = np.sum(self.coeffs[1:] * n[1:] * z ** (n[1:] - 1))
        val = zs * poly
        dval = self.s * z ** (self.s - 1.0) * poly + zs * dpoly
        if self.log_branch and self.c_log != 0.0:
            bval, bdval = self.base.eval(z)
            lz = cmath.log(z)
            val += self.c_log * bval * lz
            dval += self.c_log * (bdval * lz + bval / z)
        return val, dval

    @property
    def smooth(self) -> bool:
        """Whether this branch is analytic at the singular point."""
        s_int = round(self.s.real)
        if abs(self.s - s_int) > _INT_TOL or s_int < 0:
            return False
        return not (self.log_branch and abs(self.c_log) > _INT_TOL)


def frobenius_coeffs(p_taylor: np.ndarray, q_taylor: np.ndarray, s: complex,
                     N: int, radius_lower_bound: float = 1.0) -> FrobeniusExpansion:
    """Plain Frobenius series a_n for exponent s, a_0 = 1.

    p_taylor, q_taylor are the Taylor coefficients of z*p(z) and z^2*q(z).
    Raises if the indicial polynomial vanishes at s+n for some n >= 1 (that
    resonance belongs to the log-branch construction, not here).
    """
    p_t = np.zeros(N + 1, dtype=complex)
    q_t = np.zeros(N + 1, dtype=complex)
    p_t[:min(len(p_taylor), N + 1)] = p_taylor[:N + 1]
    q_t[:min(len(q_taylor), N + 1)] = q_taylor[:N + 1]

    def P(x):
        return x * (x - 1.0) + p_t[0] * x + q_t[0]

    a = np.zeros(N + 1, dtype=complex)
    a[0] = 1.0
    for n in range(1, N + 1):
        Pn = P(s + n)
        if abs(Pn) < _INT_TOL:
            raise ValueError(f"indicial resonance at n={n}; use the log branch")
        rhs = 0.0 + 0.0j
        for k in range(n):
            rhs += a[k] * ((s + k) * p_t[n - k] + q_t[n - k])
        a[n] = -rhs / Pn
    return FrobeniusExpansion(s=s, coeffs=a, log_branch=False,
                              radius_lower_bound=radius_lower_bound)


def fundamental_system(p_taylor: np.ndarray, q_taylor: np.ndarray, N: int,
                       radius_lower_bound: float = 1.0
                       ) -> tuple[FrobeniusExpansion, FrobeniusExpansion]:
    """Both local solutions at the regular singular point z = 0.

    Non-resonant exponent gap: two plain series.  Integer gap m0 >= 0: the
    second solution is c_log * phi1 * log z + z^{s2} sum b_n z^n, with c_log
    fixed by the n = m0 compatibility equation (c_log = 1 by convention when
    the roots coincide, and c_log may turn out to be 0 — an apparent
    resonance, giving two analytic solutions).
    """
    p_t = np.zeros(N + 1, dtype=complex)
    q_t = np.zeros(N + 1, dtype=complex)
    p_t[:min(len(p_taylor), N + 1)] = p_taylor[:N + 1]
    q_t[:min(len(q_taylor), N + 1)] = q_taylor[:N + 1]
    s1, s2 = indicial_roots(p_t[0], q_t[0])
    gap = s1 - s2
    m0 = round(gap.real)
    resonant = abs(gap - m0) < _INT_TOL and m0 >= 0

    phi1 = frobenius_coeffs(p_t, q_t, s1, N, radius_lower_bound)
    if not resonant:
        phi2 = frobenius_coeffs(p_t, q_t, s2, N, radius_lower_bound)
        return phi1, phi2

    def P(x):
        return x * (x - 1.0) + p_t[0] * x + q_t[0]

    a = phi1.coeffs

    def R(m):
        # coefficient of z^{s1+m} in 2 z phi1' - phi1 + (z p) phi1
        out = (2.0 * (s1 + m) - 1.0) * a[m]
        for j in range(m + 1):
            out += p_t[j] * a[m - j]
        return out

    b = np.zeros(N + 1, dtype=complex)
    if m0 == 0:
        c_log = 1.0 + 0.0j
        b[0] = 0.0
        start = 1
    else:
        b[0] = 1.0
        for n in range(1, m0):
            rhs = 0.0 + 0.0j
            for k in range(n):
                rhs += b[k] * ((s2 + k) * p_t[n - k] + q_t[n - k])
            b[n] = -rhs / P(s2 + n)
        rhs = 0.0 + 0.0j
        for k in range(m0):
            rhs += b[k] * ((s2 + k) * p_t[m0 - k] + q_t[m0 - k])
        c_log = -rhs / R(0)
        b[m0] = 0.0  # free direction (adding phi1); fixed by this convention
        start = m0 + 1
    for n in range(start, N + 1):
        rhs = 0.0 + 0.0j
        for k in range(n):
            rhs += b[k] * ((s2 + k) * p_t[n - k] + q_t[n - k])
        if n - m0 <= N:
            rhs += c_log * R(n - m0)
        b[n] = -rhs / P(s2 + n)
    phi2 = FrobeniusExpansion(s=s2, coeffs=b, log_branch=True,
                              radius_lower_bound=radius_lower_bound,
                              c_log=c_log, base=phi1)
    return phi1, phi2


def hypergeom_taylor_data(a: complex, b: complex, c: complex, N: int
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Taylor data of z*p(z), z^2*q(z) for the hypergeometric ODE at z=0."""
    p_t = np.full(N + 1, c - a - b - 1.0, dtype=complex)
    p_t[0] = c
    q_t = np.full(N + 1, -a * b, dtype=complex)
    q_t[0] = 0.0
    return p_t, q_t


# ---------------------------------------------------------------------------
# Connection-defect scanner
# ---------------------------------------------------------------------------

def _smooth_solutions_at_one(a: complex, b: complex, c: complex, N: int
                             ) -> list[FrobeniusExpansion]:
    """Local solutions analytic at z = 1, as expansions in w = 1 - z.

    Generically one-dimensional (the exponent-0 branch); at degenerate
    parameters (p = 1, lam = 1 - n) both branches can be analytic.
    """
    cp = a + b + 1.0 - c  # lower parameter of the w-frame equation
    p_t, q_t = hypergeom_taylor_data(a, b, cp, N)
    phi1, phi2 = fundamental_system(p_t, q_t, N)
    out = [phi for phi in (phi1, phi2) if phi.smooth]
    if not out:
        raise RuntimeError("no analytic branch at z=1 found")
    return out


def connection_defect(p: float, lam: complex, N: int = DEFAULT_SERIES_N,
                      delta: float = COLLAR_DELTA, rtol: float = CONT_RTOL
                      ) -> float:
    """Singular-branch content at z=0 of the solution smooth at z=1.

    Continues each analytic-at-1 local solution to the collar [delta,
    2*delta], least-squares fits it against the two local branches at 0
    (both normalised to leading coefficient 1), and returns
    |B| / (|A| + |B|) where B multiplies the non-smooth branch.  Several
    analytic candidates at z=1 (degenerate case): the minimum is reported.
    """
    hp = lorentz_frame_params(p, lam)
    a, b, c = hp.a, hp.b, hp.c
    smooth_at_1 = _smooth_solutions_at_one(a, b, c, N)

    p0_t, q0_t = hypergeom_taylor_data(a, b, c, N)
    psi1, psi2 = fundamental_system(p0_t, q0_t, N)
    # order the pair so col 2 carries the non-smooth content
    if psi1.smooth and not psi2.smooth:
        smooth_b, sing_b = psi1, psi2
    elif psi2.smooth and not psi1.smooth:
        smooth_b, sing_b = psi2, psi1
    elif psi1.smooth and psi2.smooth:
        return 0.0  # both local branches analytic: every solution is smooth
    else:
        # no analytic branch at 0 at all: nothing smooth can come through
        return 1.0

    zs = np.linspace(2.0 * delta, delta, 9)
    M = np.zeros((2 * len(zs), 2), dtype=complex)
    for j, z in enumerate(zs):
        v1, d1 = smooth_b.eval(z)
        v2, d2 = sing_b.eval(z)
        M[j] = (v1, v2)
        M[len(zs) + j] = (delta * d1, delta * d2)

    def rhs(z, u):
        phi, dphi = u
        ddphi = (-(c - (a + b + 1.0) * z) * dphi + a * b * phi) / (z * (1.0 - z))
        return [dphi, ddphi]

    best = math.inf
    z_start = 1.0 - delta
    for cand in smooth_at_1:
        v0, d0 = cand.eval(delta)        # w = delta, i.e. z = 1 - delta
        u0 = [v0, -d0]                   # d/dz = -d/dw
        scale = max(abs(v0), abs(d0), 1e-30)
        sol = solve_ivp(rhs, (z_start, delta), [u0[0] / scale, u0[1] / scale],
                        t_eval=zs, method="DOP853", rtol=rtol, atol=1e-14)
        if not sol.success:
            continue
        rvec = np.concatenate([sol.y[0], delta * sol.y[1]])
        ab_fit, *_ = np.linalg.lstsq(M, rvec, rcond=None)
        denom = abs(ab_fit[0]) + abs(ab_fit[1])
        defect = abs(ab_fit[1]) / denom if denom > 0 else 1.0
        best = min(best, defect)
    if not math.isfinite(best):
        raise RuntimeError(f"continuation failed for p={p}, lam={lam}")
    return best


def smooth_candidate_defects(p: float, lam: complex, N: int = DEFAULT_SERIES_N
                             ) -> list[float]:
    """Defect of every analytic-at-1 candidate separately (degenerate cases)."""
    hp = lorentz_frame_params(p, lam)
    cands = _smooth_solutions_at_one(hp.a, hp.b, hp.c, N)
    out = []
    for k in range(len(cands)):
        out.append(_single_candidate_defect(p, lam, N, k))
    return out


def _single_candidate_defect(p: float, lam: complex, N: int, which: int) -> float:
    hp = lorentz_frame_params(p, lam)
    a, b, c = hp.a, hp.b, hp.c
    cands = _smooth_solutions_at_one(a, b, c, N)
    cand = cands[which]
    delta = COLLAR_DELTA
    p0_t, q0_t = hypergeom_taylor_data(a, b, c, N)
    psi1, psi2 = fundamental_system(p0_t, q0_t, N)
    if psi1.smooth and psi2.smooth:
        return 0.0
    if psi1.smooth:
        smooth_b, sing_b = psi1, psi2
    elif psi2.smooth:
        smooth_b, sing_b = psi2, psi1
    else:
        return 1.0
    zs = np.linspace(2.0 * delta, delta, 9)
    M = np.zeros((2 * len(zs), 2), dtype=complex)
    for j, z in enumerate(zs):
        v1, d1 = smooth_b.eval(z)
        v2, d2 = sing_b.eval(z)
        M[j] = (v1, v2)
        M[len(zs) + j] = (delta * d1, delta * d2)

    def rhs(z, u):
        phi, dphi = u
        ddphi = (-(c - (a + b + 1.0) * z) * dphi + a * b * phi) / (z * (1.0 - z))
        return [dphi, ddphi]

    v0, d0 = cand.eval(delta)
    scale = max(abs(v0), abs(d0), 1e-30)
    sol = solve_ivp(rhs, (1.0 - delta, delta), [v0 / scale, -d0 / scale],
                    t_eval=zs, method="DOP853", rtol=CONT_RTOL, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"continuation failed for p={p}, lam={lam}")
    rvec = np.concatenate([sol.y[0], delta * sol.y[1]])
    ab_fit, *_ = np.linalg.lstsq(M, rvec, rcond=None)
    denom = abs(ab_fit[0]) + abs(ab_fit[1])
    return abs(ab_fit[1]) / denom if denom > 0 else 1.0


def default_lambda_grid(re_min: float = 0.0, re_max: float = 3.0,
                        im_max: float = 3.0, step: float = 0.1) -> np.ndarray:
    res = np.arange(0, round((re_max - re_min) / step) + 1) * step + re_min
    ims = np.arange(-round(im_max / step), round(im_max / step) + 1) * step
    grid = (res[:, None] + 1j * ims[None, :]).ravel()
    return grid


def _scan_one(args):
    p, lam, N = args
    try:
        return lam, connection_defect(p, lam, N)
    except Exception:
        return lam, math.nan


def mode_scan(p: float, lambda_grid=None, N_colloc: int = DEFAULT_SERIES_N,
              parallel: bool = True, include_strip: bool = False
              ) -> list[tuple[complex, float]]:
    """Connection defect over a lambda grid.

    Defaults to the rectangle Re in [0,3], Im in [-3,3], step 0.1 (extended
    to Re > -1 when include_strip is set).  Trivially parallel.
    """
    if lambda_grid is None:
        re_min = -0.9 if include_strip else 0.0
        lambda_grid = default_lambda_grid(re_min=re_min)
    lambda_grid = np.asarray(lambda_grid).ravel()
    jobs = [(p, complex(lam), N_colloc) for lam in lambda_grid]
    if parallel and len(jobs) > 8:
        with ProcessPoolExecutor() as ex:
            results = list(ex.map(_scan_one, jobs, chunksize=16))
    else:
        results = [_scan_one(j) for j in jobs]
    return results


def write_mode_scan_csv(path, results, n_colloc: int):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_lambda", "im_lambda", "defect", "n_colloc"])
        for lam, d in results:
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}",
                        f"{d:.17g}", n_colloc])
