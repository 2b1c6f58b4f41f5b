"""Experiment drivers shared by the CLI and the acceptance tests.

Each ``run_*`` function is deterministic given its arguments and returns a
plain dict (JSON-serialisable summary) plus any trajectories it produced.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import birkhoff as B
from . import poly as P
from .dynamics import SimParams, Trajectory, evolve, flow_chi, lax_residual
from .errors import ContractError, InfeasibleWindowError, SmallDivisorError
from .oracle import oracle_coeffs, oracle_hs_norm, t_delta
from .spectral import SzegoField, load_field, sobolev_norm

STEP_BUDGET = 1e8


# ------------------------------------------------------------------ init

@dataclass(frozen=True)
class InitSpec:
    kind: str
    m: int = 0
    delta: float = 0.0
    eps: float = 0.0
    s: float = 1.0
    seed: Optional[int] = None
    path: str = ""

    def describe(self):
        return self.text

    @property
    def text(self):
        if self.kind == "plane":
            return f"plane:m={self.m}"
        if self.kind == "plane-plus":
            return f"plane-plus:m={self.m},delta={self.delta!r}"
        if self.kind == "perturbed":
            return f"perturbed:m={self.m},eps={self.eps!r},s={self.s!r},seed={self.seed}"
        return f"file:{self.path}"


_KV = re.compile(r"^\s*([a-z]+)\s*=\s*([^,]+?)\s*$")


def parse_init(text: str, default_seed: int = 0) -> InitSpec:
    """Parse ``plane:m=1`` | ``plane-plus:m=1,delta=0.3`` | ``perturbed:m=1,eps=0.1,s=1,seed=3`` | ``file:path``."""
    if ":" not in text:
        raise ContractError(f"init spec {text!r} lacks a ':'")
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "file":
        if not rest:
            raise ContractError("file: init needs a path")
        return InitSpec("file", path=rest)
    fields = {}
    for part in rest.split(","):
        mt = _KV.match(part)
        if not mt:
            raise ContractError(f"cannot parse {part!r} in init spec {text!r}")
        fields[mt.group(1)] = mt.group(2)
    required = {"plane": {"m"}, "plane-plus": {"m", "delta"}, "perturbed": {"m", "eps", "s"}}
    optional = {"perturbed": {"seed"}}
    if kind not in required:
        raise ContractError(f"unknown init kind {kind!r}")
    allowed = required[kind] | optional.get(kind, set())
    missing = required[kind] - fields.keys()
    extra = fields.keys() - allowed
    if missing or extra:
        raise ContractError(f"init {kind}: missing {sorted(missing)} / unexpected {sorted(extra)}")
    try:
        m = int(fields["m"])
        spec = InitSpec(kind, m=m,
                        delta=float(fields.get("delta", 0.0)),
                        eps=float(fields.get("eps", 0.0)),
                        s=float(fields.get("s", 1.0)),
                        seed=int(fields["seed"]) if "seed" in fields else (default_seed if kind == "perturbed" else None))
    except ValueError as exc:
        raise ContractError(f"bad number in init spec {text!r}: {exc}") from None
    if m < 0:
        raise ContractError("mode must be >= 0")
    return spec


def perturbation(N: int, s: float, seed: int) -> np.ndarray:
    """Random f with |f_k| proportional to (1+k^2)^{-(s+0.6)/2}, uniform phases, ||f||_{H^s} = 1."""
    rng = np.random.default_rng(seed)
    k = np.arange(N + 1, dtype=float)
    f = (1 + k * k) ** (-(s + 0.6) / 2) * np.exp(2j * np.pi * rng.uniform(size=N + 1))
    return f / sobolev_norm(f, s)


def build_init(spec: InitSpec, N: int) -> np.ndarray:
    if spec.kind == "file":
        f = load_field(spec.path)
        return f.resized(N).coeffs.copy() if f.N != N else f.coeffs.copy()
    if spec.m > N:
        raise ContractError(f"mode {spec.m} beyond truncation N={N}")
    u = np.zeros(N + 1, dtype=np.complex128)
    if spec.kind == "plane":
        u[spec.m] = 1.0
    elif spec.kind == "plane-plus":
        u[spec.m] = 1.0
        u[0] += spec.delta
    else:
        u = spec.eps * perturbation(N, spec.s, spec.seed if spec.seed is not None else 0)
        u[spec.m] += 1.0
    return u


def small_field(N: int, s: float, norm: float, seed: int) -> np.ndarray:
    """Random data with ||u||_{H^s} = norm, same spectral law as :func:`perturbation`."""
    return norm * perturbation(N, s, seed)


def fit_exponent(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def _map(fn, args, workers):
    if workers and workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, args))
    return [fn(a) for a in args]


# ------------------------------------------------------------- simulate

def run_simulate(u0, p: SimParams):
    traj = evolve(u0, p)
    drifts = traj.drifts()
    fin = traj.final_state
    summary = {
        "drift_Q": drifts["Q"], "drift_I": drifts["I"], "drift_E": drifts["E"],
        "final_time": traj.final_time,
        "final_H1": sobolev_norm(fin, 1.0),
        "final_Hs": sobolev_norm(fin, p.s),
        "rows": int(traj.times.size),
    }
    return summary, traj


# ----------------------------------------------------------- turbulence

def _turbulence_one(args):
    delta, nu, N, dt, stride, scheme = args
    td = t_delta(delta)
    p = SimParams(epsilon=0.5, alpha=0.0, N=N, dt=dt, T=td, scheme=scheme,
                  monitor_stride=stride, dispersion=nu * nu)
    traj = evolve(oracle_coeffs(delta, 0.0, N), p)
    U = traj.final_state
    h1_num = sobolev_norm(U, 1.0)
    h1_or = oracle_hs_norm(delta, td, 1.0)
    # H^1 size of the remainder U - V (V truncated at N) along the samples and at t^delta
    rem = [sobolev_norm(s.coeffs - oracle_coeffs(delta, t, N), 1.0) for t, s in zip(traj.times, traj.states)]
    rem_final = sobolev_norm(U.coeffs - oracle_coeffs(delta, td, N), 1.0)
    return {
        "delta": delta, "nu": nu, "t_delta": td,
        "H1_numeric": h1_num, "H1_oracle": h1_or, "ratio": h1_num / h1_or,
        "remainder_H1_max": max(rem + [rem_final]), "remainder_H1_final": rem_final,
    }, traj


def run_turbulence(deltas, nu, N=256, dt=1e-3, stride=100, scheme="strang", workers=1):
    out = _map(_turbulence_one, [(d, nu, N, dt, stride, scheme) for d in deltas], workers)
    summary = {"runs": [o[0] for o in out]}
    if len(deltas) >= 2:
        summary["H1_slope_vs_delta"] = fit_exponent(deltas, [o[0]["H1_numeric"] for o in out])
    return summary, [o[1] for o in out]


# ---------------------------------------------------- orbital stability

def _orbital_one(args):
    m, alpha, eps, s, T, N, dt, stride, seed, scheme = args
    p = SimParams(epsilon=eps, alpha=alpha, N=N, dt=dt, T=T, scheme=scheme,
                  monitor_stride=stride, s=s, orbit_m=m)
    u0 = eps * perturbation(N, s, seed)
    u0[m] += 1.0
    traj = evolve(u0, p, store_states=False)
    return {"epsilon": eps, "sup_orbit_dist": float(np.nanmax(traj.column("orbit_dist")))}, traj


def run_orbital_stability(m, alpha, eps_list, s=1.0, T=50.0, N=64, dt=1e-3, stride=50,
                          seed=0, scheme="strang", workers=1):
    if len(eps_list) < 2:
        raise ContractError("need at least two epsilon values to fit an exponent")
    args = [(m, alpha, e, s, T, N, dt, stride, seed, scheme) for e in eps_list]
    out = _map(_orbital_one, args, workers)
    rows = [o[0] for o in out]
    sups = [r["sup_orbit_dist"] for r in rows]
    summary = {"m": m, "alpha": alpha, "s": s, "T": T, "runs": rows,
               "theory_exponent": 1 - alpha / 2}
    if all(x > 0 for x in sups):
        summary["fitted_exponent"] = fit_exponent(eps_list, sups)
    else:
        summary["fitted_exponent"] = None
    return summary, [o[1] for o in out]


# ----------------------------------------------------------- small data

def window_exponent(alpha):
    return 4 - alpha if alpha <= 2 else 2.0


def _small_one(args):
    alpha, eps, s, c, N, dt, stride, seed, scheme = args
    T = c / eps ** window_exponent(alpha)
    p = SimParams(epsilon=eps, alpha=alpha, N=N, dt=dt, T=T, scheme=scheme, monitor_stride=stride, s=s)
    traj = evolve(small_field(N, s, eps, seed), p, store_states=False)
    ratio = float(np.max(traj.column("Hs")) / eps)
    return {"epsilon": eps, "window": T, "max_Hs_over_eps": ratio}, traj


def _growth_one(args):
    alpha, eps, khat, N, dt, stride = args
    delta = math.sqrt(math.pi * khat / ((alpha - 2) * abs(math.log(eps))))
    if not 0 < delta < 1:
        raise ContractError(f"delta(eps)={delta:.3f} outside (0,1); lower --khat")
    T = t_delta(delta) / eps**2
    p = SimParams(epsilon=eps, alpha=alpha, N=N, dt=dt, T=T, monitor_stride=stride)
    u0 = eps * oracle_coeffs(delta, 0.0, N)
    traj = evolve(u0, p, store_states=False)
    h1 = sobolev_norm(traj.final_state, 1.0)
    return {"epsilon": eps, "delta": delta, "window": T, "H1_over_eps": h1 / eps,
            "exceeds_1.5": bool(h1 > 1.5 * eps)}, traj


def check_budget(T, dt, budget=STEP_BUDGET):
    steps = T / dt
    if steps > budget:
        raise InfeasibleWindowError(
            f"window needs {steps:.3g} steps, budget is {budget:.3g}", required_steps=steps, budget=budget)


def run_small_data(alpha, eps_list, s=1.0, c=0.5, N=32, dt=1e-3, stride=100, seed=0,
                   scheme="strang", workers=1, bound=4.0, data="random", khat=0.1,
                   budget=STEP_BUDGET):
    if data == "random":
        for e in eps_list:
            check_budget(c / e ** window_exponent(alpha), dt, budget)
        out = _map(_small_one, [(alpha, e, s, c, N, dt, stride, seed, scheme) for e in eps_list], workers)
        rows = [o[0] for o in out]
        ratios = [r["max_Hs_over_eps"] for r in rows]
        summary = {"alpha": alpha, "s": s, "c": c, "runs": rows, "K_estimate": max(ratios),
                   "unbounded": bool(max(ratios) > bound), "bound": bound}
        return summary, [o[1] for o in out]
    if data == "growth":
        if alpha <= 2:
            raise ContractError("growth data needs alpha > 2")
        args = []
        for e in eps_list:
            delta = math.sqrt(math.pi * khat / ((alpha - 2) * abs(math.log(e))))
            if 0 < delta < 1:
                check_budget(t_delta(delta) / e**2, dt, budget)
            args.append((alpha, e, khat, N, dt, stride))
        out = _map(_growth_one, args, workers)
        return {"alpha": alpha, "khat": khat, "runs": [o[0] for o in out]}, [o[1] for o in out]
    raise ContractError(f"unknown small-data mode {data!r}")


# --------------------------------------------------------------- verify

def verify_bracket(N=8):
    F = B.build_F(N)
    res = P.poisson_bracket(F, P.h0(N)) + P.r_term(N) - P.r_tilde(N)
    return {"case": "bracket", "m": None, "N": N, "alpha_mode": "exact",
            "max_residual": float(res.max_abs_coeff()), "support_ok": True,
            "divisor_report": None, "passed": res.is_zero()}


def verify_homological(m=1, N=32, alpha_mode="exact", dispersion=None):
    if alpha_mode == "exact":
        report = B.DivisorReport()
        Fm = B.build_Fm(m, N, report=report)
        lie = P.poisson_bracket(Fm, P.l_m(m)) + P.n2_tilde(m, N)
        R = B.R_m(m, N, Fm=Fm)
        support = R.support_modes()
        support_ok = support <= set(range(3 * m + 1))
        resid = max(lie.max_abs_coeff(), B.high_resonant_part(R, m).max_abs_coeff())
        passed = lie.is_zero() and support_ok
        return {"case": "homological", "m": m, "N": N, "alpha_mode": "exact",
                "max_residual": float(resid), "support_ok": bool(support_ok),
                "support": sorted(support), "divisor_report": report.to_dict(), "passed": bool(passed)}
    D = (1 / math.sqrt(2)) if dispersion is None else float(dispersion)
    report = B.DivisorReport()
    try:
        Fm = B.build_Fm(m, N, dispersion=D, report=report)
    except SmallDivisorError as exc:
        return {"case": "homological", "m": m, "N": N, "alpha_mode": f"float:eps^alpha={D!r}",
                "max_residual": None, "support_ok": False, "error": str(exc),
                "divisor_report": report.to_dict(), "passed": False}
    R = B.R_m(m, N, dispersion=D, Fm=Fm)
    high = B.high_resonant_part(R, m)
    lie = P.poisson_bracket(Fm, P.l_m(m, exact=False)) + P.n2_tilde(m, N, exact=False)
    resid = max(high.max_abs_coeff(), lie.max_abs_coeff())
    return {"case": "homological", "m": m, "N": N, "alpha_mode": f"float:eps^alpha={D!r}",
            "max_residual": float(resid), "support_ok": bool(resid < 1e-9),
            "divisor_report": report.to_dict(), "passed": bool(resid < 1e-9)}


def verify_resonance(order=4, N=16):
    if order == 4:
        found = B.enumerate_resonances(4, N)
        pred = B.pairing_characterization(N)
        ok = found == pred
        return {"case": "resonance", "m": None, "N": N, "alpha_mode": "exact", "order": 4,
                "max_residual": float(len(set(found) ^ set(pred))), "support_ok": ok,
                "count": len(found), "divisor_report": None, "passed": ok}
    allt, nontriv = B.enumerate_resonances(6, N)
    ok = len(nontriv) > 0
    return {"case": "resonance", "m": None, "N": N, "alpha_mode": "exact", "order": 6,
            "max_residual": 0.0, "support_ok": ok, "count": len(allt),
            "nontrivial_k5_ne_k6": len(nontriv), "example": list(nontriv[0]) if nontriv else None,
            "divisor_report": None, "passed": ok}


def verify_lax(delta=0.3, N=32, probes=(0.04, 0.02, 0.01, 0.005), dt=1e-4, tol=0.3):
    p = SimParams(epsilon=0.5, alpha=0.0, N=N, dt=dt, T=1.0, dispersion=0.0)
    V = oracle_coeffs(delta, 0.0, N)
    res = [lax_residual(V, p, h) for h in probes]
    order = fit_exponent(probes, res)
    ok = abs(order - 2.0) <= tol
    return {"case": "lax", "m": None, "N": N, "alpha_mode": "dispersionless",
            "max_residual": float(max(res)), "residuals": res, "probes": list(probes),
            "order": order, "support_ok": True, "divisor_report": None, "passed": bool(ok)}


def normal_form_drift(eps, N=16, s=1.0, T=50.0, dt=1e-3, stride=250, seed=0):
    """max_t | ||w(t)||_{H^s}^2 - ||w(0)||_{H^s}^2 | with w = chi_{-1}(gauged u/eps)."""
    u0 = small_field(N, s, eps, seed)
    p = SimParams(epsilon=eps, alpha=0.0, N=N, dt=dt, T=T, monitor_stride=stride, s=s)
    traj = evolve(u0, p)
    mu = Trajectory(traj.times, [SzegoField(x.coeffs / eps) for x in traj.states],
                    traj.monitors / np.array([eps**2, eps**2, 1.0, eps, eps, 1.0]), p)
    v = B.gauge_transform(mu, eps)
    F = B.build_F(N, exact=False)
    w2 = np.array([sobolev_norm(flow_chi(x.coeffs, F, eps**2, -1.0), s) ** 2 for x in v.states])
    v2 = np.array([sobolev_norm(x, s) ** 2 for x in v.states])
    return {"epsilon": eps, "w_dev": float(np.max(np.abs(w2 - w2[0]))),
            "v_dev": float(np.max(np.abs(v2 - v2[0])))}


def verify_normal_form_drift(eps_list=(0.1, 0.05), N=16, s=1.0, T=50.0, seed=0, workers=1):
    rows = _map(_nf_one, [(e, N, s, T, seed) for e in eps_list], workers)
    ratio = rows[0]["w_dev"] / rows[1]["w_dev"]
    expect = (eps_list[0] / eps_list[1]) ** 4
    ok = expect / 2 <= ratio <= expect * 2
    return {"case": "normal-form-drift", "m": None, "N": N, "alpha_mode": "exact",
            "max_residual": float(max(r["w_dev"] for r in rows)), "runs": rows,
            "ratio": ratio, "target_ratio": expect, "support_ok": True,
            "divisor_report": None, "passed": bool(ok)}


def _nf_one(args):
    e, N, s, T, seed = args
    return normal_form_drift(e, N=N, s=s, T=T, seed=seed)
