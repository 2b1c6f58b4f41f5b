"""``szego-lab`` command line.

Exit codes: 0 ok, 2 verification failure, 3 blow-up, 4 infeasible window, 5 bad input.
"""
from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource

from . import __version__, experiments as X
from .dynamics import SimParams
from .errors import BlowUpError, ContractError, InfeasibleWindowError, SzegoLabError
from .oracle import oracle_hs_norm, t_delta

EXIT_OK, EXIT_VERIFY, EXIT_BLOWUP, EXIT_INFEASIBLE, EXIT_BADINPUT = 0, 2, 3, 4, 5


class VerificationFailed(Exception):
    pass


# ---------------------------------------------------------------- output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _plot(trajs, labels, path, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "szego-lab"
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for tr, lab in zip(trajs, labels):
        axes[0].plot(tr.times, tr.column("H1"), label=f"H1 {lab}".strip())
        axes[0].plot(tr.times, tr.column("Hs"), ls="--", label=f"Hs {lab}".strip())
        od = tr.column("orbit_dist")
        if np.any(np.isfinite(od)):
            axes[1].plot(tr.times, od, label=f"orbit dist {lab}".strip())
        else:
            E = tr.column("E")
            axes[1].plot(tr.times, np.abs(E - E[0]) / max(abs(E[0]), 1e-300), label=f"|dE|/E {lab}".strip())
    axes[0].set_ylabel("norm")
    axes[1].set_xlabel("t")
    axes[0].set_title(title)
    for ax in axes:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _emit(ctx_obj, command, params, summary, trajs, labels, title, report=None):
    out = Path(ctx_obj["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if trajs:
        trajs[0].write_csv(out / "traj.csv")
        files["traj"] = "traj.csv"
        for i, tr in enumerate(trajs[1:], 1):
            name = f"traj_{i}.csv"
            tr.write_csv(out / name)
            files[f"traj_{i}"] = name
        if ctx_obj.get("plot", True):
            _plot(trajs, labels, out / "plot.svg", title)
            files["plot"] = "plot.svg"
    _write_json(out / "report.json", report if report is not None else summary)
    files["report"] = "report.json"
    files["manifest"] = "manifest.json"
    manifest = {
        "command": command,
        "params": params,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - ctx_obj["t0"], 3),
        "outputs": files,
        "summary": summary,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------- config

def _load_config(path):
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ContractError("config must be a JSON object")
    # a manifest can be replayed directly
    if "params" in data and isinstance(data["params"], dict):
        data = data["params"]
    return data


def _merge(ctx, config_keys):
    """Defaults < config file < explicit command-line flags."""
    cfg = _load_config(ctx.params.get("config"))
    unknown = set(cfg) - set(config_keys)
    if unknown:
        raise ContractError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key in config_keys:
        val = ctx.params.get(key)
        src = ctx.get_parameter_source(key)
        if key in cfg and src != ParameterSource.COMMANDLINE:
            val = cfg[key]
        if isinstance(val, tuple):
            val = list(val)
        merged[key] = val
    return merged


def common(f):
    f = click.option("--config", type=click.Path(dir_okay=False), default=None,
                     help="JSON file of parameters (or a manifest to replay); flags override it.")(f)
    f = click.option("--out-dir", default="out", show_default=True, help="Output directory.")(f)
    f = click.option("--workers", default=1, show_default=True, type=int, help="Parallel sweep workers.")(f)
    f = click.option("--seed", default=0, show_default=True, type=int, help="Seed for random data.")(f)
    f = click.option("--plot/--no-plot", default=True, help="Write plot.svg.")(f)
    return f


def _ctx_obj(p):
    if p["workers"] < 1:
        raise ContractError("--workers must be >= 1")
    return {"out_dir": p["out_dir"], "t0": time.perf_counter(), "plot": p["plot"]}


_COMMON = ["out_dir", "workers", "seed", "plot"]


@click.group()
@click.version_option(__version__, prog_name="szego-lab")
def cli():
    """Spectral and normal-form experiments for the NLS-Szegő equation."""


# -------------------------------------------------------------- simulate

@cli.command()
@common
@click.option("--init", "init", default="plane:m=1", show_default=True,
              help="plane:m=M | plane-plus:m=M,delta=D | perturbed:m=M,eps=E,s=S[,seed=K] | file:PATH")
@click.option("--N", "N", default=64, show_default=True, type=int)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--T", "T", default="10", show_default=True, help="Horizon, or auto:t_delta.")
@click.option("--epsilon", default=0.5, show_default=True, type=float)
@click.option("--alpha", default=0.0, show_default=True, type=float)
@click.option("--dispersion", default=None, type=float, help="Override epsilon**alpha.")
@click.option("--dispersion-off", is_flag=True, help="Set the dispersion coefficient to 0.")
@click.option("--scheme", type=click.Choice(["strang", "rk4-full"]), default="strang", show_default=True)
@click.option("--monitor-stride", default=100, show_default=True, type=int)
@click.option("--s", "s", default=1.0, show_default=True, type=float, help="Index of the Hs column.")
@click.option("--orbit-m", default=None, type=int, help="Plane wave for orbit_dist (default: init mode).")
@click.option("--auto-dt", is_flag=True, help="Halve dt until the energy drift over a unit window is <= 1e-8.")
@click.pass_context
def simulate(ctx, **_):
    """Integrate one initial datum and record monitors."""
    keys = ["init", "N", "dt", "T", "epsilon", "alpha", "dispersion", "dispersion_off", "scheme",
            "monitor_stride", "s", "orbit_m", "auto_dt"] + _COMMON
    p = _merge(ctx, keys)
    obj = _ctx_obj(p)
    spec = X.parse_init(p["init"], default_seed=p["seed"])
    T = p["T"]
    oracle_delta = spec.delta if (spec.kind == "plane-plus" and spec.m == 1 and 0 < spec.delta < 1) else None
    if isinstance(T, str) and T.startswith("auto:"):
        if T != "auto:t_delta" or spec.kind != "plane-plus" or spec.m != 1:
            raise ContractError("T=auto:t_delta needs --init plane-plus:m=1,delta=...")
        T = t_delta(spec.delta)
    else:
        try:
            T = float(T)
        except ValueError:
            raise ContractError(f"bad horizon {T!r}") from None
    D = 0.0 if p["dispersion_off"] else p["dispersion"]
    orbit_m = p["orbit_m"] if p["orbit_m"] is not None else (spec.m if spec.kind != "file" else None)
    sp = SimParams(epsilon=p["epsilon"], alpha=p["alpha"], N=p["N"], dt=p["dt"], T=T,
                   scheme=p["scheme"], monitor_stride=p["monitor_stride"], s=p["s"],
                   orbit_m=orbit_m, dispersion=D)
    u0 = X.build_init(spec, sp.N)
    if p["auto_dt"]:
        from .dynamics import choose_dt
        sp = sp.with_(dt=choose_dt(u0, sp))
    try:
        summary, traj = X.run_simulate(u0, sp)
    except BlowUpError as exc:
        _record_failure(obj, "simulate", p, exc)
        raise
    summary["dt_used"] = sp.dt
    if oracle_delta is not None and sp.D == 0:
        ref = oracle_hs_norm(oracle_delta, T, 1.0)
        summary["oracle_H1"] = ref
        summary["H1_rel_error_vs_oracle"] = abs(summary["final_H1"] - ref) / ref
    _emit(obj, "simulate", p, summary, [traj], [""], f"simulate {spec.text}")


def _record_failure(obj, command, params, exc):
    out = Path(obj["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    tr = getattr(exc, "trajectory", None)
    files = {"manifest": "manifest.json"}
    if tr is not None:
        tr.write_csv(out / "traj.csv")
        files["traj"] = "traj.csv"
    _write_json(out / "manifest.json", {
        "command": command, "params": params, "version": __version__,
        "wall_time_s": round(time.perf_counter() - obj["t0"], 3), "outputs": files,
        "summary": {"error": type(exc).__name__, "message": str(exc), "t": getattr(exc, "t", None)},
    })


# ------------------------------------------------------------ turbulence

@cli.command()
@common
@click.option("--delta", multiple=True, type=float, default=[0.3], show_default=True)
@click.option("--nu", default=1e-3, show_default=True, type=float,
              help="Dispersion scale; the flow is i U_t + nu^2 U_xx = Pi(|U|^2 U).")
@click.option("--N", "N", default=256, show_default=True, type=int)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--monitor-stride", default=100, show_default=True, type=int)
@click.option("--scheme", type=click.Choice(["strang", "rk4-full"]), default="strang", show_default=True)
@click.pass_context
def turbulence(ctx, **_):
    """Track the Szegő oracle from e^{ix}+delta up to t^delta with small dispersion."""
    p = _merge(ctx, ["delta", "nu", "N", "dt", "monitor_stride", "scheme"] + _COMMON)
    obj = _ctx_obj(p)
    for d in p["delta"]:
        if not 0 < d < 1:
            raise ContractError("delta must lie in (0,1)")
    if p["nu"] < 0:
        raise ContractError("nu must be >= 0")
    try:
        summary, trajs = X.run_turbulence(p["delta"], p["nu"], N=p["N"], dt=p["dt"],
                                          stride=p["monitor_stride"], scheme=p["scheme"],
                                          workers=p["workers"])
    except BlowUpError as exc:
        _record_failure(obj, "turbulence", p, exc)
        raise
    _emit(obj, "turbulence", p, summary, trajs, [f"delta={d}" for d in p["delta"]],
          f"turbulence nu={p['nu']}")


# ----------------------------------------------------- orbital stability

@cli.command("orbital-stability")
@common
@click.option("--m", "m", default=1, show_default=True, type=int)
@click.option("--alpha", default=0.0, show_default=True, type=float)
@click.option("--eps", multiple=True, type=float, default=[0.2, 0.1, 0.05], show_default=True)
@click.option("--s", "s", default=1.0, show_default=True, type=float)
@click.option("--T", "T", default=50.0, show_default=True, type=float)
@click.option("--N", "N", default=64, show_default=True, type=int)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--monitor-stride", default=50, show_default=True, type=int)
@click.option("--scheme", type=click.Choice(["strang", "rk4-full"]), default="strang", show_default=True)
@click.pass_context
def orbital_stability(ctx, **_):
    """Fit the exponent of sup_t dist(u(t), orbit of e_m) against epsilon."""
    p = _merge(ctx, ["m", "alpha", "eps", "s", "T", "N", "dt", "monitor_stride", "scheme"] + _COMMON)
    obj = _ctx_obj(p)
    try:
        summary, trajs = X.run_orbital_stability(p["m"], p["alpha"], p["eps"], s=p["s"], T=p["T"],
                                                 N=p["N"], dt=p["dt"], stride=p["monitor_stride"],
                                                 seed=p["seed"], scheme=p["scheme"], workers=p["workers"])
    except BlowUpError as exc:
        _record_failure(obj, "orbital-stability", p, exc)
        raise
    _emit(obj, "orbital-stability", p, summary, trajs, [f"eps={e}" for e in p["eps"]],
          f"orbital stability m={p['m']} alpha={p['alpha']}")


# ------------------------------------------------------------ small data

@cli.command("small-data")
@common
@click.option("--alpha", default=0.0, show_default=True, type=float)
@click.option("--eps", multiple=True, type=float, default=[0.3, 0.25], show_default=True)
@click.option("--s", "s", default=1.0, show_default=True, type=float)
@click.option("--c", "c", default=0.5, show_default=True, type=float, help="Window constant.")
@click.option("--N", "N", default=32, show_default=True, type=int)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--monitor-stride", default=100, show_default=True, type=int)
@click.option("--scheme", type=click.Choice(["strang", "rk4-full"]), default="strang", show_default=True)
@click.option("--bound", default=4.0, show_default=True, type=float,
              help="Flag unboundedness when max ||u||_Hs / eps exceeds this.")
@click.option("--data", type=click.Choice(["random", "growth"]), default="random", show_default=True)
@click.option("--khat", default=0.1, show_default=True, type=float,
              help="Fitted constant in delta(eps) for --data growth.")
@click.option("--budget", default=X.STEP_BUDGET, show_default=True, type=float, help="Step budget.")
@click.pass_context
def small_data(ctx, **_):
    """Run ||u0||_Hs = eps data over the window c / eps^{min(4-alpha, 2)}."""
    p = _merge(ctx, ["alpha", "eps", "s", "c", "N", "dt", "monitor_stride", "scheme", "bound",
                     "data", "khat", "budget"] + _COMMON)
    obj = _ctx_obj(p)
    try:
        summary, trajs = X.run_small_data(p["alpha"], p["eps"], s=p["s"], c=p["c"], N=p["N"],
                                          dt=p["dt"], stride=p["monitor_stride"], seed=p["seed"],
                                          scheme=p["scheme"], workers=p["workers"], bound=p["bound"],
                                          data=p["data"], khat=p["khat"], budget=p["budget"])
    except (BlowUpError, InfeasibleWindowError) as exc:
        _record_failure(obj, "small-data", p, exc)
        raise
    _emit(obj, "small-data", p, summary, trajs, [f"eps={e}" for e in p["eps"]],
          f"small data alpha={p['alpha']}")


# ---------------------------------------------------------------- verify

@cli.command()
@common
@click.option("--suite", required=True,
              type=click.Choice(["bracket", "homological", "resonance", "lax", "normal-form-drift"]))
@click.option("--m", "m", default=1, show_default=True, type=int)
@click.option("--N", "N", default=None, type=int, help="Truncation (suite-specific default).")
@click.option("--order", default=4, show_default=True, type=click.Choice(["4", "6"]))
@click.option("--alpha-mode", default="exact", show_default=True, type=click.Choice(["exact", "float"]))
@click.option("--dispersion", default=None, type=float, help="epsilon**alpha for --alpha-mode float.")
@click.option("--delta", default=0.3, show_default=True, type=float)
@click.option("--eps", multiple=True, type=float, default=[0.1, 0.05], show_default=True)
@click.option("--T", "T", default=50.0, show_default=True, type=float)
@click.pass_context
def verify(ctx, **_):
    """Check a normal-form, resonance or Lax identity; exit 2 on failure."""
    p = _merge(ctx, ["suite", "m", "N", "order", "alpha_mode", "dispersion", "delta", "eps", "T"] + _COMMON)
    obj = _ctx_obj(p)
    suite = p["suite"]
    if suite == "bracket":
        rep = X.verify_bracket(N=p["N"] or 8)
    elif suite == "homological":
        rep = X.verify_homological(m=p["m"], N=p["N"] or 32, alpha_mode=p["alpha_mode"],
                                   dispersion=p["dispersion"])
    elif suite == "resonance":
        order = int(p["order"])
        rep = X.verify_resonance(order=order, N=p["N"] or (16 if order == 4 else 12))
    elif suite == "lax":
        rep = X.verify_lax(delta=p["delta"], N=p["N"] or 32)
    else:
        if len(p["eps"]) != 2:
            raise ContractError("normal-form-drift needs exactly two --eps values")
        rep = X.verify_normal_form_drift(tuple(p["eps"]), N=p["N"] or 16, T=p["T"], seed=p["seed"],
                                         workers=p["workers"])
    summary = {"passed": rep["passed"], "max_residual": rep["max_residual"]}
    _emit(obj, "verify", p, summary, [], [], f"verify {suite}", report=rep)
    if not rep["passed"]:
        detail = rep.get("error") or f"max residual {rep['max_residual']:.3e}"
        raise VerificationFailed(f"{suite} suite failed ({detail})")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="szego-lab", standalone_mode=False)
    except VerificationFailed as exc:
        click.echo(f"verification failed: {exc}", err=True)
        return _exit(EXIT_VERIFY)
    except BlowUpError as exc:
        click.echo(f"blow-up: {exc}", err=True)
        return _exit(EXIT_BLOWUP)
    except InfeasibleWindowError as exc:
        click.echo(f"infeasible window: {exc}", err=True)
        return _exit(EXIT_INFEASIBLE)
    except (ContractError, click.ClickException) as exc:
        msg = exc.format_message() if isinstance(exc, click.ClickException) else str(exc)
        click.echo(f"bad input: {msg}", err=True)
        return _exit(EXIT_BADINPUT)
    except click.exceptions.Abort:
        return _exit(EXIT_BADINPUT)
    except SzegoLabError as exc:
        click.echo(f"error: {exc}", err=True)
        return _exit(EXIT_BADINPUT)
    return _exit(EXIT_OK)


def _exit(code):
    return code


if __name__ == "__main__":
    sys.exit(main())
