"""Executable checks of the quantitative lemmas and the two limit theorems.

Every check returns a :class:`CheckReport` or :class:`RateTable`; nothing
here raises on a failed inequality, so callers decide how to react.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .evolution import (
    SolverConfig,
    default_initial,
    evolve_1d_limit,
    evolve_2d,
    evolve_regular,
    mollified_source,
)
from .model import DEFAULT_THETA, ModelParams, UState, mollifier
from .singular import build_m_mu, build_m_zero
from .spectral import (
    SpectralField1D,
    SpectralField2D,
    average_P,
    coeffs_to_samples_1d,
    coeffs_to_samples_2d,
    eigen_grid_2d,
    eigenvalue_rect,
    extend_E,
    lp_norm,
    remove_mean_layer,
    samples_to_coeffs_1d,
    samples_to_coeffs_2d,
    semigroup_apply,
    trace_coeffs,
    xs_norm,
    xs_weights_1d,
)


class HypothesisError(ValueError):
    pass


class StudyError(RuntimeError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass
class CheckReport:
    name: str
    passed: bool
    rows: list
    seed: object = None
    tolerances: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in self.notes.items())
        return f"[{status}] {self.name} seed={self.seed} {extra}".rstrip()


@dataclass
class RateTable:
    """Rows of (parameter, error, extra columns...) with a log-log fit."""

    param: str
    columns: tuple
    rows: list
    target_ratio: float = None
    min_slope: float = None
    notes: dict = field(default_factory=dict)

    def values(self, col=None):
        k = 1 if col is None else self.columns.index(col)
        return np.array([r[k] for r in self.rows], dtype=float)

    @property
    def params(self):
        return self.values(self.param)

    @property
    def errors(self):
        return self.values()

    @property
    def monotone(self):
        e = self.errors
        return bool(np.all(np.diff(e) < 0))

    @property
    def slope(self):
        """Least-squares slope of log error vs log parameter, first row dropped."""
        if len(self.rows) < 3:
            return None
        p, e = self.params[1:], self.errors[1:]
        keep = (p > 0) & (e > 0)
        if keep.sum() < 2:
            return None
        return float(np.polyfit(np.log(p[keep]), np.log(e[keep]), 1)[0])

    @property
    def final_ratio(self):
        e = self.errors
        return float(e[-1] / e[0]) if e[0] > 0 else float("nan")

    @property
    def passed(self):
        ok = self.monotone
        if self.target_ratio is not None:
            ok = ok and self.final_ratio < self.target_ratio
        if self.min_slope is not None:
            ok = ok and self.slope is not None and self.slope >= self.min_slope
        return ok

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        s = self.slope
        return (f"[{status}] {self.param}: monotone={self.monotone} "
                f"final/first={self.final_ratio:.4g} slope={'n/a' if s is None else f'{s:.4g}'}")


@dataclass(frozen=True)
class SweepSpec:
    h_list: tuple = (1.0, 0.5, 0.25, 0.125)
    eps_list: tuple = (0.4, 0.2, 0.1, 0.05)
    T: float = 0.5
    theta: float = DEFAULT_THETA
    config: SolverConfig = SolverConfig()
    seed: int = 0

    def __post_init__(self):
        for name in ("h_list", "eps_list"):
            v = tuple(float(x) for x in getattr(self, name))
            if not v:
                raise HypothesisError(f"{name} must be nonempty")
            if any(b >= a for a, b in zip(v, v[1:])):
                raise HypothesisError(f"{name} must be strictly decreasing")
            object.__setattr__(self, name, v)
        if any(not 0 < h <= 1 for h in self.h_list):
            raise HypothesisError("h values must lie in (0, 1]")
        if any(not 0 <= e <= 1 for e in self.eps_list):
            raise HypothesisError("epsilon values must lie in [0, 1]")


def _map(fn, jobs, workers=1):
    """Order-preserving map; results never depend on scheduling."""
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------------------
# elementary inequalities

def _power(x, a):
    return 1.0 if a == 0 else x**a


def ineq1_constant(alpha):
    return max(_power(alpha, alpha), 1.0)


def ineq2_constant(alpha, beta):
    return float(special.beta(1.0 - alpha, 1.0 - beta))


def ineq3_constant(alpha, beta):
    sig = alpha + beta
    if sig == 0:
        return 1.0
    q = (1.0 + sig) / (2.0 * sig)
    p = (1.0 + sig) / (1.0 - sig)
    return p ** (-1.0 / p) * special.beta(1.0 - q * alpha, 1.0 - q * beta) ** (1.0 / q)


def _sup_power_exp(alpha, r, t0):
    # Dense grid over a window that surely contains the maximiser, then refine.
    hi = max(t0, alpha / r) + 50.0 / r
    ts = np.linspace(t0, hi, 20001)
    f = ts**alpha * np.exp(-r * ts) if alpha else np.exp(-r * ts)
    k = int(np.argmax(f))
    lo_b, hi_b = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    if hi_b > lo_b:
        res = optimize.minimize_scalar(lambda t: -(t**alpha) * math.exp(-r * t),
                                       bounds=(lo_b, hi_b), method="bounded",
                                       options={"xatol": 1e-14})
        return max(float(f[k]), -float(res.fun))
    return float(f[k])


def _alg_integral(fn, alpha, beta, t):
    val, _ = integrate.quad(fn, 0.0, t, weight="alg", wvar=(-alpha, -beta),
                            epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def elementary_rows(alpha, beta, r, t, t0):
    """Evaluate the three inequalities at one parameter point."""
    if alpha < 0 or beta < 0 or alpha + beta >= 1 or r <= 0 or t <= 0 or t0 < 0:
        return {"alpha": alpha, "beta": beta, "r": r, "t": t, "t0": t0, "skipped": True}
    sig = alpha + beta
    lhs1 = _sup_power_exp(alpha, r, t0)
    rhs1 = ineq1_constant(alpha) * (_power(r, -alpha) + _power(t0, alpha)) * math.exp(-r * t0)
    lhs2 = _alg_integral(lambda x: 1.0, alpha, beta, t)
    rhs2 = ineq2_constant(alpha, beta) * t ** (1.0 - sig)
    lhs3 = _alg_integral(lambda x: math.exp(-r * x), alpha, beta, t)
    rhs3 = ineq3_constant(alpha, beta) * (t**sig / r) ** ((1.0 - sig) / (1.0 + sig))
    return {"alpha": alpha, "beta": beta, "r": r, "t": t, "t0": t0, "skipped": False,
            "lhs1": lhs1, "rhs1": rhs1, "lhs2": lhs2, "rhs2": rhs2, "lhs3": lhs3, "rhs3": rhs3}


def default_elementary_grid():
    """100 points: 5 (alpha, beta) pairs x 4 r x 5 (t, t0)."""
    ab = [(0.0, 0.0), (0.25, 0.25), (0.1, 0.6), (0.5, 0.0), (0.0, 0.9)]
    rs = [0.1, 1.0, 2.0, 10.0]
    tt = [(0.01, 0.0), (0.5, 0.1), (1.0, 1.0), (3.0, 0.05), (10.0, 4.0)]
    return [(a, b, r, t, t0) for a, b in ab for r in rs for t, t0 in tt]


def check_elementary_inequalities(sample_grid=None, rtol=1e-10):
    grid = default_elementary_grid() if sample_grid is None else list(sample_grid)
    rows = [elementary_rows(*g) for g in grid]
    ok = True
    worst = 0.0
    for r in rows:
        if r["skipped"]:
            continue
        for k in "123":
            ratio = r["lhs" + k] / r["rhs" + k]
            worst = max(worst, ratio)
            r["ok" + k] = ratio <= 1.0 + rtol
            ok &= r["ok" + k]
    n_skip = sum(r["skipped"] for r in rows)
    return CheckReport("elementary-inequalities", bool(ok), rows, None, {"rtol": rtol},
                       {"points": len(rows), "skipped": n_skip, "worst_ratio": worst})


# ---------------------------------------------------------------------------
# singular Gronwall inequality

def _check_gronwall_args(a, b, alpha, beta, T):
    if alpha < 0 or beta < 0:
        raise HypothesisError("alpha, beta must be nonnegative")
    if alpha + beta >= 1:
        raise HypothesisError("alpha + beta must be < 1")
    if a < 0 or b <= 0 or not 0 < T < math.inf:
        raise HypothesisError("need a >= 0, b > 0, 0 < T < inf")


def gronwall_constant(alpha, beta):
    sig = alpha + beta
    if sig == 0:
        return 1.0
    q = 0.5 * (1.0 + 1.0 / sig)
    p = (1.0 + sig) / (1.0 - sig)
    c0 = special.beta(1.0 - alpha * q, 1.0 - beta * q)
    return max(2.0 ** (1.0 / q), 2.0 ** (p - 1.0) * c0**p / p)


def gronwall_bound(a, b, alpha, beta, T):
    _check_gronwall_args(a, b, alpha, beta, T)
    sig = alpha + beta
    C = gronwall_constant(alpha, beta)
    p = (1.0 + sig) / (1.0 - sig)
    try:
        return C * a * math.exp(C * b**p * T ** (1.0 + sig))
    except OverflowError:
        # The proof constant explodes as alpha + beta -> 1; the bound is then vacuous.
        return math.inf if a > 0 else 0.0


def _kernel_moments(t, lo, hi, alpha, beta):
    """Integrals of tau^-alpha (t - tau)^-beta and tau^(1-alpha) (t - tau)^-beta over [lo, hi]."""
    x_lo, x_hi = lo / t, np.minimum(hi / t, 1.0)
    a0, b0 = 1.0 - alpha, 1.0 - beta
    inc0 = special.betainc(a0, b0, x_hi) - special.betainc(a0, b0, x_lo)
    inc1 = special.betainc(a0 + 1.0, b0, x_hi) - special.betainc(a0 + 1.0, b0, x_lo)
    m0 = t ** (1.0 - alpha - beta) * special.beta(a0, b0) * inc0
    m1 = t ** (2.0 - alpha - beta) * special.beta(a0 + 1.0, b0) * inc1
    return m0, m1


def volterra_oracle(a, b, alpha, beta, T, n=2000, grading=2.0):
    """Solve f = a + b int_0^t f(tau) tau^-alpha (t - tau)^-beta dtau.

    Piecewise-linear product integration with exact kernel moments on the
    graded mesh t_k = T (k/n)^grading; implicit in the newest node.
    Returns (t, f).
    """
    _check_gronwall_args(a, b, alpha, beta, T)
    t = T * (np.arange(n + 1) / n) ** grading
    f = np.empty(n + 1)
    f[0] = a
    for k in range(1, n + 1):
        lo, hi = t[:k], t[1 : k + 1]
        m0, m1 = _kernel_moments(t[k], lo, hi, alpha, beta)
        dh = hi - lo
        w_left = (hi * m0 - m1) / dh
        w_right = (m1 - lo * m0) / dh
        known = np.dot(w_left, f[:k]) + np.dot(w_right[:-1], f[1:k])
        f[k] = (a + b * known) / (1.0 - b * w_right[-1])
    return t, f


def default_gronwall_tuples():
    return [
        (1.0, 1.0, 0.0, 0.0, 1.0), (2.0, 0.5, 0.0, 0.0, 2.0), (0.5, 3.0, 0.0, 0.0, 0.5),
        (1.0, 1.0, 0.25, 0.5, 1.0), (1.0, 1.0, 0.25, 0.25, 1.0), (1.0, 0.5, 0.5, 0.0, 1.0),
        (1.0, 0.5, 0.0, 0.5, 1.0), (1.0, 2.0, 0.1, 0.1, 0.5), (0.3, 1.0, 0.3, 0.3, 1.0),
        (1.0, 0.1, 0.6, 0.3, 2.0), (2.0, 1.0, 0.05, 0.05, 1.5), (1.0, 1.0, 0.75, 0.0, 1.0),
        (1.0, 1.0, 0.0, 0.75, 1.0), (0.0, 1.0, 0.2, 0.2, 1.0), (1.0, 1e-3, 0.4, 0.4, 1.0),
        (1.0, 0.7, 0.125, 0.375, 3.0), (5.0, 0.2, 0.2, 0.1, 4.0), (1.0, 1.5, 1 / 32, 3 / 4, 0.5),
        (1.0, 0.25, 0.45, 0.45, 1.0), (0.1, 4.0, 0.0, 0.3, 0.25),
    ]


def check_gronwall(tuples=None, n=2000, rtol=1e-6):
    """Bound vs oracle; ``rtol`` absorbs the oracle's discretisation error."""
    rows = []
    ok = True
    for a, b, al, be, T in (default_gronwall_tuples() if tuples is None else tuples):
        _, f = volterra_oracle(a, b, al, be, T, n=n)
        sup = float(np.max(f))
        bound = gronwall_bound(a, b, al, be, T)
        good = sup <= bound * (1.0 + rtol) + 1e-300
        ok &= good
        rows.append({"a": a, "b": b, "alpha": al, "beta": be, "T": T,
                     "oracle_sup": sup, "bound": bound,
                     "margin": bound / sup if sup > 0 else math.inf, "ok": good})
    return CheckReport("gronwall", bool(ok), rows, None, {"rtol": rtol, "n": n},
                       {"tuples": len(rows), "min_margin": min(r["margin"] for r in rows)})


# ---------------------------------------------------------------------------
# trace inequality

def trace_constant(s):
    if s <= 0.25:
        raise HypothesisError(f"trace inequality needs s > 1/4, got {s}")
    return math.sqrt(3.0 ** (2 * s) * (math.pi / 2) ** (4 * s - 1) * 8 * s / (4 * s - 1))


def trace_ratio(a, s):
    w = SpectralField2D(a)
    return xs_norm(SpectralField1D(trace_coeffs(a)), s - 0.25) / xs_norm(w, s)


def _random_trace_field(rng, n1, n2, s):
    kind = rng.integers(3)
    lam = 1.0 - eigen_grid_2d(n1, n2, 1.0)
    if kind == 0:
        a = rng.normal(size=(n1, n2))
    elif kind == 1:
        a = rng.normal(size=(n1, n2)) * lam ** (-s - rng.uniform(0.0, 1.0))
    else:
        # Near-extremal: one row aligned with the trace functional.
        i = rng.integers(n1)
        a = np.zeros((n1, n2))
        j = np.arange(n2)
        a[i] = np.where(j == 0, 1.0, math.sqrt(2.0)) * lam[i] ** (-2 * s) * (1 + 0.1 * rng.normal(size=n2))
    return a


def check_trace_inequality(n_samples=500, s_list=(0.3, 0.5, 0.75), seed=0, n1=64, n2=32):
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for s in s_list:
        C = trace_constant(s)
        worst = max(trace_ratio(_random_trace_field(rng, n1, n2, s), s) for _ in range(n_samples))
        rows.append({"s": s, "constant": C, "worst_ratio": worst, "ok": worst <= C})
        ok &= worst <= C
    return CheckReport("trace", bool(ok), rows, seed, {"n_samples": n_samples},
                       {"worst_over_C": max(r["worst_ratio"] / r["constant"] for r in rows)})


# ---------------------------------------------------------------------------
# iron estimates

def iron_resolvent_rows(lam_list, h_list, ss_list, n1=128, n2=128):
    rows = []
    for h in h_list:
        lam_h = eigen_grid_2d(n1, n2, h)[:, 1:]
        lam_1 = eigen_grid_2d(n1, n2, 1.0)[:, 1:]
        l01 = eigenvalue_rect(0, 1, h)
        for lam in lam_list:
            for s, sp in ss_list:
                d = sp - s
                if not 0 <= d <= 1:
                    rows.append({"h": h, "lambda": lam, "s": s, "s_prime": sp, "flagged": True})
                    continue
                worst = float(np.max((1 - lam_1) ** d / (lam - lam_h)))
                factor = (1 + (lam - l01) ** d) / (lam - l01)
                rows.append({"h": h, "lambda": lam, "s": s, "s_prime": sp, "flagged": False,
                             "worst": worst, "factor": factor, "ok": worst <= factor * (1 + 1e-12)})
    return rows


def _iron_semigroup_worst(h, s, sp, t, n1, n2):
    d = sp - s
    lam_h = eigen_grid_2d(n1, n2, h)[:, 1:]
    lam_1 = eigen_grid_2d(n1, n2, 1.0)[:, 1:]
    l01 = eigenvalue_rect(0, 1, h)
    ratio = (1 - lam_1) ** d * np.exp(t * (lam_h - l01))
    return float(np.max(ratio) / (1 + t ** (-d)))


def fit_iron_constant(t_list, n1=128, n2=128):
    """Constant fitted once at (s, s') = (0, 1), h = 1 and then frozen."""
    return max(_iron_semigroup_worst(1.0, 0.0, 1.0, t, n1, n2) for t in t_list)


DEFAULT_IRON_T = (1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 5.0)


def check_iron_estimates(h_list=(1.0, 0.5, 0.25), ss_list=None, t_list=DEFAULT_IRON_T,
                         lam_list=(0.5, 1.0, 5.0), n1=128, n2=128, n_samples=20, seed=0,
                         theta=DEFAULT_THETA):
    if ss_list is None:
        ss_list = [(0.0, 1.0), (-0.25 - theta, 0.5 + theta), (0.0, 0.5), (0.25, 0.25)]
    res_rows = iron_resolvent_rows(lam_list, h_list, ss_list, n1, n2)
    C = fit_iron_constant(t_list, n1, n2)
    sem_rows = []
    for h in h_list:
        for s, sp in ss_list:
            if sp - s < 0:
                sem_rows.append({"h": h, "s": s, "s_prime": sp, "flagged": True})
                continue
            worst = max(_iron_semigroup_worst(h, s, sp, t, n1, n2) for t in t_list)
            sem_rows.append({"h": h, "s": s, "s_prime": sp, "flagged": False,
                             "worst": worst, "ok": worst <= C * (1 + 1e-12)})
    # Whole-field spot check: the modewise bound implies the normwise one.
    rng = np.random.default_rng(seed)
    field_ok = True
    for _ in range(n_samples):
        w = remove_mean_layer(SpectralField2D(rng.normal(size=(n1, n2))))
        h = float(rng.choice(h_list))
        t = float(rng.choice(t_list))
        s, sp = ss_list[rng.integers(len(ss_list))]
        if sp - s < 0:
            continue
        lhs = xs_norm(semigroup_apply(w, t, h), sp)
        rhs = C * (1 + t ** (-(sp - s))) * math.exp(t * eigenvalue_rect(0, 1, h)) * xs_norm(w, s)
        field_ok &= lhs <= rhs * (1 + 1e-12)
    ok = all(r.get("ok", True) for r in res_rows + sem_rows) and field_ok
    return CheckReport("iron", bool(ok), res_rows + sem_rows, seed,
                       {"fitted_then_frozen_C": C, "t_list": tuple(t_list)},
                       {"C_fitted": C, "field_spot_check": bool(field_ok)})


# ---------------------------------------------------------------------------
# mollifier limit

def delta_gap(epsilon, s, n):
    if epsilon == 0:
        return 0.0
    diff = mollifier(epsilon).spectral_1d(n) - mollifier(0.0).spectral_1d(n)
    return float(np.sqrt(np.sum(xs_weights_1d(n, -0.25 - s) * diff**2)))


def delta_gap_tail(s, n, n_far=2**22):
    """Norm^2 contribution of modes n..n_far of delta alone, the part truncation drops."""
    i = np.arange(n + (n % 2), n_far, 2, dtype=float)
    return float(np.sum((1.0 + (i * np.pi / 2) ** 2) ** (-0.5 - 2 * s) * 2.0))


def mollifier_convergence_study(s, eps_list, N=4096, refine=True, target_ratio=0.1):
    if s <= 0:
        raise HypothesisError("s must be positive")
    rows = []
    for eps in eps_list:
        v = delta_gap(eps, s, N)
        if refine:
            v2 = delta_gap(eps, s, 2 * N)
            rel = abs(v2 - v) / v if v > 0 else 0.0
            rows.append((eps, v, v2, rel))
        else:
            rows.append((eps, v))
    cols = ("epsilon", "norm", "norm_2N", "rel_change") if refine else ("epsilon", "norm")
    tab = RateTable("epsilon", cols, rows, target_ratio=target_ratio)
    tab.notes.update(s=s, N=N)
    return tab


# ---------------------------------------------------------------------------
# epsilon -> 0

def _z_distance_u(a, b, theta, p_exp, w):
    return [xs_norm(a.u1 - b.u1, 0.5 - theta), xs_norm(a.u2 - b.u2, 0.5)] + [
        lp_norm(x - y, p_exp, w) for x, y in ((a.u3, b.u3), (a.u4, b.u4), (a.u5, b.u5))]


def _sup_distance(traj, ref_u, theta, p_exp):
    w = 2.0 / traj.config.m1
    comps = np.array([_z_distance_u(a, b, theta, p_exp, w)
                      for a, b in zip(traj.u_states(), ref_u)])
    return float(np.max(comps.sum(axis=1))), comps.max(axis=0)


def _eps_job(job):
    u0, params, h, eps, config = job
    return evolve_2d(u0, params, h, eps, config)


def epsilon_limit_study(params=None, h=1.0, eps_list=(0.4, 0.2, 0.1, 0.05), T=0.5,
                        config=None, u0=None, target_ratio=0.25, workers=1):
    """Sup-in-time sum of Z_i distances to the eps = 0 M-mild run."""
    params = params or ModelParams()
    config = (config or SolverConfig(n1=128, n2=32, dt=1e-3, T=T)).replace(T=T)
    u0 = default_initial(config) if u0 is None else u0
    th, pe = config.theta, config.p_exp
    jobs = [(u0, params, h, 0.0, config)] + [(u0, params, h, e, config) for e in eps_list]
    rows = []
    try:
        runs = _map(_eps_job, jobs, workers)
    except Exception as exc:
        raise StudyError(f"epsilon study aborted: {exc}", rows) from exc
    ref_u = runs[0].u_states()
    for eps, tr in zip(eps_list, runs[1:]):
        dist, comps = _sup_distance(tr, ref_u, th, pe)
        src = delta_gap(eps, th, config.n1)
        rows.append((eps, dist, src, dist / src if src > 0 else 0.0, *comps))
    cols = ("epsilon", "distance", "source_gap", "ratio", "u1_Z1", "u2_Z2", "u3_Lp", "u4_Lp", "u5_Lp")
    tab = RateTable("epsilon", cols, rows, target_ratio=target_ratio)
    tab.notes.update(h=h, T=T, n1=config.n1, n2=config.n2, dt=config.dt)
    return tab


# ---------------------------------------------------------------------------
# h -> 0

def reduction_distance(traj2d, traj1d, theta, p_exp):
    """Sup-in-time quantity of the thin-domain limit, plus its components."""
    n2 = traj2d.config.n2
    w = 2.0 / traj2d.config.m1
    comps = []
    for t, z, u, zr, ur in zip(traj2d.times, traj2d.states, traj2d.u_states(),
                               traj1d.states, traj1d.u_states()):
        z1 = t ** (2 * theta) * xs_norm(z.z1 - extend_E(zr.z1, n2), 0.5 + theta) if t > 0 else 0.0
        comps.append([z1, xs_norm(u.u2 - ur.u2, 0.5)] + [
            lp_norm(x - y, p_exp, w) for x, y in ((u.u3, ur.u3), (u.u4, ur.u4), (u.u5, ur.u5))])
    sup = np.array(comps).max(axis=0)
    return float(sup.sum()), sup


def reduction_rate_exponents(theta):
    """Exponents of h in the two terms of the thin-domain rate."""
    return theta, 2.0 * (0.25 - 4 * theta) / (1.75 + 4 * theta)


def _h_job(job):
    u0, params, h, config = job
    return evolve_2d(u0, params, h, 0.0, config)


def dimension_reduction_study(params=None, h_list=(1.0, 0.5, 0.25, 0.125), T=0.5,
                              config=None, u0=None, slope_safety=0.8, workers=1):
    params = params or ModelParams()
    config = (config or SolverConfig(n1=128, n2=32, dt=1e-3, T=T)).replace(T=T)
    u0 = default_initial(config) if u0 is None else u0
    th = config.theta
    u0_1d = UState(average_P(u0.u1), u0.u2, u0.u3, u0.u4, u0.u5)
    rows = []
    try:
        ref = evolve_1d_limit(u0_1d, params, config)
        runs = _map(_h_job, [(u0, params, h, config) for h in h_list], workers)
    except Exception as exc:
        raise StudyError(f"reduction study aborted: {exc}", rows) from exc
    m0_ext = extend_E(build_m_zero(params, config.n1), config.n2)
    for h, tr in zip(h_list, runs):
        dist, sup = reduction_distance(tr, ref, th, config.p_exp)
        layer = xs_norm(build_m_mu(params, h, 0.0, config.n1, config.n2) - m0_ext, 0.5 - th)
        rows.append((h, dist, *sup, layer, (h / math.pi) ** th))
    cols = ("h", "distance", "z1_weighted_Z1plus", "u2_Z2", "u3_Lp", "u4_Lp", "u5_Lp",
            "layer_gap", "rate_bound")
    tab = RateTable("h", cols, rows, min_slope=slope_safety * th)
    e1, e2 = reduction_rate_exponents(th)
    tab.notes.update(theta=th, T=T, rate_exponent_a=e1, rate_exponent_b=e2)
    return tab


def layer_free_reduction_check(h_list=(1.0, 0.5, 0.25, 0.125), config=None, seed=0, tol=1e-8):
    """With c = 0, p1 = p3 = 0 and u03 = 0 the 2-d flow is E of the 1-d flow."""
    config = config or SolverConfig(n1=64, n2=16, dt=1e-3, T=0.5)
    params = ModelParams(c=(0.0,) * 5, p=(0.0,) * 5)
    rng = np.random.default_rng(seed)
    i = np.arange(config.n1)
    v = rng.normal(size=config.n1) / (1.0 + i**2)
    v[0] += 4.0 * np.max(np.abs(v)) * math.sqrt(2.0) * config.n1
    u1 = extend_E(SpectralField1D(v), config.n2)
    g = rng.normal(size=config.n1) / (1.0 + i**2)
    g[0] += 4.0 * np.sum(np.abs(g))
    zeros = np.zeros(config.m1)
    u4 = 0.5 + 0.2 * np.cos(np.pi * config.x1)
    u0 = UState(u1, SpectralField1D(g), zeros, u4, 0.5 * u4)
    u0_1d = UState(average_P(u1), u0.u2, zeros, u4, 0.5 * u4)
    ref = evolve_1d_limit(u0_1d, params, config)
    rows = []
    for h in h_list:
        dist, _ = reduction_distance(evolve_2d(u0, params, h, 0.0, config), ref,
                                     config.theta, config.p_exp)
        rows.append({"h": h, "distance": dist, "ok": dist < tol})
    return CheckReport("layer-free-reduction", all(r["ok"] for r in rows), rows, seed,
                       {"tol": tol}, {"worst": max(r["distance"] for r in rows)})


# ---------------------------------------------------------------------------
# solver studies

def solution_l2_distance(a, b, weight):
    """Coefficient l2 for the spectral components, midpoint L2 for the rest."""
    d = np.linalg.norm(a.z1.coeffs - b.z1.coeffs) ** 2 + np.linalg.norm(a.z2.coeffs - b.z2.coeffs) ** 2
    d += sum(weight * np.sum((x - y) ** 2) for x, y in ((a.z3, b.z3), (a.z4, b.z4), (a.z5, b.z5)))
    return float(math.sqrt(d))


def self_convergence_study(scheme, params=None, dt0=5e-4, halvings=3, T=0.25,
                           config=None, h=1.0, epsilon=0.0):
    """Differences of final states under successive dt halvings.

    Returns a table of (dt, difference, observed order) rows.
    """
    params = params or ModelParams()
    base = (config or SolverConfig(n1=64, n2=16, dt=dt0, T=T)).replace(scheme=scheme, T=T, dt=dt0)
    u0 = default_initial(base)
    finals = [evolve_2d(u0, params, h, epsilon, base.replace(dt=dt0 / 2**k)).states[-1]
              for k in range(halvings + 1)]
    w = 2.0 / base.m1
    diffs = [solution_l2_distance(finals[k], finals[k + 1], w) for k in range(halvings)]
    rows = []
    for k, d in enumerate(diffs):
        order = math.log2(diffs[k - 1] / d) if k > 0 else float("nan")
        rows.append((dt0 / 2**k, d, order))
    tab = RateTable("dt", ("dt", "difference", "order"), rows)
    tab.notes.update(scheme=scheme, T=T, min_order=min(r[2] for r in rows[1:]))
    return tab


def random_nonnegative_initial(config, rng):
    n1, n2 = config.n1, config.n2
    i = np.arange(n1)[:, None]
    j = np.arange(n2)[None, :]
    s1 = coeffs_to_samples_2d(rng.normal(size=(n1, n2)) / (1.0 + i**2 + j**2), (n1, n2))
    s1 -= s1.min()
    s2 = coeffs_to_samples_1d(rng.normal(size=n1) / (1.0 + np.arange(n1) ** 2), n1)
    s2 -= s2.min()
    ode = [rng.uniform(0, 1) * (1 + 0.5 * np.cos(np.pi * k * config.x1))
           for k in rng.integers(1, 4, size=3)]
    return UState(SpectralField2D(samples_to_coeffs_2d(s1)),
                  SpectralField1D(samples_to_coeffs_1d(s2, n1)), *ode)


def _invariant_job(job):
    u0, params, h, eps, config = job
    rows = evolve_2d(u0, params, h, eps, config).rows()
    return min(r["min_u_all"] for r in rows), max(r["ode_sum_max"] for r in rows)


def check_invariants(params=None, spec=None, n_random=20, config=None, workers=1,
                     neg_tol=1e-6, bound_tol=1e-6):
    """Nonnegativity and the ODE-sum bound over random data and the (h, eps) grid."""
    params = params or ModelParams()
    spec = spec or SweepSpec(eps_list=(0.4, 0.2, 0.1, 0.05, 0.0))
    config = config or SolverConfig(n1=64, n2=16, dt=1e-3, T=0.25)
    rng = np.random.default_rng(spec.seed)
    rows, ok = [], True
    for k in range(n_random):
        u0 = random_nonnegative_initial(config, rng)
        bound = max(float(np.max(u0.u3 + u0.u4 + u0.u5)), params.p3 / min(params.b[2:]))
        grid = [(h, e) for h in spec.h_list for e in spec.eps_list]
        res = _map(_invariant_job, [(u0, params, h, e, config) for h, e in grid], workers)
        mn = min(r[0] for r in res)
        excess = max(r[1] for r in res) - bound
        good = mn >= -neg_tol and excess <= bound_tol
        ok &= good
        rows.append({"sample": k, "min_u": mn, "bound": bound, "excess": excess, "ok": good})
    return CheckReport("invariants", bool(ok), rows, spec.seed,
                       {"neg_tol": neg_tol, "bound_tol": bound_tol},
                       {"worst_min": min(r["min_u"] for r in rows),
                        "worst_excess": max(r["excess"] for r in rows)})


def regular_equivalence(params=None, epsilon=0.2, h=1.0, config=None, scheme="etd1"):
    """Final-time component L2 distances between the M-mild and regular paths."""
    params = params or ModelParams()
    config = (config or SolverConfig(n1=128, n2=32, dt=1e-3, T=0.5)).replace(scheme=scheme)
    u0 = default_initial(config)
    a = evolve_2d(u0, params, h, epsilon, config).final_u()
    b = evolve_regular(u0, params, h, mollified_source(params, epsilon, config.n1), config).final_u()
    w = 2.0 / config.m1
    return [float(np.linalg.norm(a.u1.coeffs - b.u1.coeffs)),
            float(np.linalg.norm(a.u2.coeffs - b.u2.coeffs))] + [
        float(math.sqrt(w * np.sum((x - y) ** 2))) for x, y in ((a.u3, b.u3), (a.u4, b.u4), (a.u5, b.u5))]


