"""Named experiment definitions and a runner that checks their expected outcome.

Data-set scenarios store the published catchability-effort product ``alpha*q``
as ``alpha`` with ``q = 1``, and use ``K = 1`` and ``beta = 1`` unless a figure
states otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Sequence

import numpy as np

from harvestsim import analysis
from harvestsim.integrator import IntegrationConfig, Trajectory, integrate
from harvestsim.model import (
    Constant,
    ModelParams,
    Proportional,
    ProportionalThreshold,
    RestrictedProportional,
    Rotational,
    Seasonal,
    Strategy,
)
from harvestsim.schedules import Sinusoid, SinePulse, SquareWave

__all__ = [
    "DATA_SETS",
    "Scenario",
    "ScenarioResult",
    "registry",
    "get_scenario",
    "find_by_tag",
    "apply_overrides",
    "run_scenario",
]

# r, published alpha*q values, and the effort listed for maximum sustainable yield
DATA_SETS: dict[str, dict[str, Any]] = {
    "data1": {"r": 0.3, "alpha_q": (0.24, 0.36, 0.42, 1.00), "E_msy": 1.15},
    "data2": {"r": 0.3, "alpha_q": (0.57, 1.58, 1.70, 1.81), "E_msy": 0.8},
    "data3": {"r": 0.3, "alpha_q": (0.04, 0.18, 0.49, 0.61, 0.72, 1.0), "E_msy": 0.25},
}

# rotational run with alpha*q = 1.00: smallest N over the period-3 attractor,
# measured once at dt = 1e-3 over t in (100, 200] and frozen here
ROTATIONAL_TRANSIENT = 100.0
ROTATIONAL_MIN_N = 0.524230524727865


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    strategy: Strategy
    N0: float = 0.5
    horizon: float = 100.0
    sweep: tuple[Mapping[str, Any], ...] = ()
    figure_tag: str | None = None
    note: str = ""
    dt: float = 1e-3
    expect: Mapping[str, Any] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def members(self) -> list[Mapping[str, Any]]:
        return list(self.sweep) if self.sweep else [{}]


@dataclass
class ScenarioResult:
    scenario: Scenario
    runs: list[tuple[Mapping[str, Any], Trajectory]]
    report: dict
    passed: bool
    messages: list[str]

    @property
    def trajectories(self) -> list[Trajectory]:
        return [tr for _, tr in self.runs]


_PARAM_FIELDS = {f.name for f in fields(ModelParams)}


def apply_overrides(params: ModelParams, strategy: Strategy, N0: float, overrides: Mapping[str, Any]):
    """Apply ``{field: value}`` overrides to parameters, strategy or ``N0``."""
    p_kw, s_kw = {}, {}
    for key, value in overrides.items():
        if key == "N0":
            N0 = value
        elif key in _PARAM_FIELDS:
            p_kw[key] = value
        elif key in {f.name for f in fields(strategy)}:
            s_kw[key] = value
        else:
            raise KeyError(f"override {key!r} is not a parameter of {type(strategy).__name__}")
    return replace(params, **p_kw), replace(strategy, **s_kw), N0


def _data_params(ds: str, alpha_q: float | None = None, beta: float = 1.0) -> ModelParams:
    d = DATA_SETS[ds]
    return ModelParams(r=d["r"], K=1.0, q=1.0, alpha=d["alpha_q"][0] if alpha_q is None else alpha_q, beta=beta)


def _aq_sweep(ds: str) -> tuple[dict, ...]:
    return tuple({"alpha": v} for v in DATA_SETS[ds]["alpha_q"])


def _build() -> dict[str, Scenario]:
    fig1 = ModelParams(r=0.5, K=1.0, q=0.8, alpha=1.0, beta=1.0)
    fig7 = ModelParams(r=0.1, K=0.5, q=0.4, alpha=1.0, beta=1.0)
    pulse = SinePulse(t_start=0.25, H=0.25, peak=0.5)
    square = SquareWave(H=0.25, b=0.25, level=0.5)
    sc: list[Scenario] = [
        Scenario(
            "fig1_proportional", fig1, Proportional(0.5), N0=0.5, horizon=200.0, figure_tag="fig1",
            note="phase portrait of proportional harvesting",
            expect={"final_N": 0.2, "tol": 1e-6},
        ),
        Scenario(
            "fig2_proportional_dynamics", fig1, Proportional(0.5), horizon=200.0, figure_tag="fig2",
            sweep=({"N0": 0.05}, {"N0": 0.5}, {"N0": 0.9}),
            note="time series from several N0",
            expect={"final_N": 0.2, "tol": 1e-6},
        ),
        Scenario(
            "fig3_yield", fig1, Proportional(0.5), horizon=300.0, dt=1e-2, figure_tag="fig3",
            sweep=tuple({"alpha": x / 0.4} for x in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45)),
            note="sustainable yield against lambda*q*alpha; runs measure equilibrium catch",
            expect={"yield_curve": True, "tol": 1e-6},
        ),
        Scenario(
            "fig4_beta", fig1, Proportional(0.5), N0=0.9, horizon=200.0, figure_tag="fig4",
            sweep=({"beta": 0.0}, {"beta": 0.5}, {"beta": 1.0}),
            expect={"final_N": 0.2, "tol": 1e-6, "convergence": "decreasing", "epsilon": 1e-4},
        ),
        Scenario(
            "fig5_restricted", ModelParams(r=0.5, K=1.0, q=1.0, alpha=1.0, beta=0.5),
            RestrictedProportional(lam=1.0, Y_limit=0.1), horizon=100.0, figure_tag="fig5",
            sweep=({"N0": 0.2}, {"N0": 0.4}),
            note="catch cap binding: two capped-regime equilibria, lower one separates the basins",
            expect={"final_N": [0.0, 0.5 * (1 + math.sqrt(0.2))], "tol": 1e-5},
        ),
        Scenario(
            "fig6_threshold", fig1, ProportionalThreshold(lam=0.5, N_thre=0.2), horizon=200.0, figure_tag="fig6",
            sweep=({"N0": 0.1}, {"N0": 0.5}, {"N0": 0.9}),
            expect={"final_N": 0.1 + math.sqrt(0.17), "tol": 1e-4},
        ),
        Scenario(
            "fig7_threshold_beta", fig7, ProportionalThreshold(lam=0.5, N_thre=0.3), N0=0.45, horizon=200.0,
            dt=1e-2, figure_tag="fig7",
            sweep=tuple({"beta": b, "N0": n0} for n0 in (0.45, 0.1) for b in (0.25, 0.5, 1.0, 2.0)),
            note="alpha = 1, beta in {0.25, 0.5, 1, 2} alpha",
            expect={"equilibrium": True, "tol": 1e-6},
        ),
        Scenario(
            "fig8_seasonal_pulse", ModelParams(r=1.0, K=1.0, q=1.0, alpha=0.4, beta=1.0), Seasonal(pulse),
            horizon=100.0, figure_tag="fig8",
            expect={"period": 1.0, "tol": 1e-6},
        ),
    ]
    for tag, ds in (("fig9", "data1"), ("fig10", "data2"), ("fig11", "data3")):
        sc.append(Scenario(
            f"{tag}_pulse_{ds}", _data_params(ds), Seasonal(pulse), horizon=1.0, figure_tag=tag,
            sweep=_aq_sweep(ds), note="one-year solution, summer pulse",
            metadata={"data_set": ds, "E_msy": DATA_SETS[ds]["E_msy"]},
        ))
    sc.append(Scenario(
        "fig12_pulse_data3_long", _data_params("data3"), Seasonal(pulse), horizon=100.0, figure_tag="fig12",
        sweep=_aq_sweep("data3"), expect={"period": 1.0, "tol": 1e-6},
        metadata={"data_set": "data3", "E_msy": DATA_SETS["data3"]["E_msy"]},
    ))
    sc.append(Scenario(
        "fig13_square_data1", _data_params("data1"), Seasonal(square), horizon=1.0, figure_tag="fig13",
        sweep=_aq_sweep("data1"), note="closed gap b not stated; H = b = 0.25",
        metadata={"data_set": "data1", "E_msy": DATA_SETS["data1"]["E_msy"]},
    ))
    for tag, ds in (("fig14", "data1"), ("fig15", "data2"), ("fig16", "data3")):
        sc.append(Scenario(
            f"{tag}_sinusoid_{ds}", _data_params(ds), Seasonal(Sinusoid()), horizon=1.0, figure_tag=tag,
            sweep=_aq_sweep(ds), note="one-year solution, (1 + sin 2 pi t)/4",
            metadata={"data_set": ds, "E_msy": DATA_SETS[ds]["E_msy"]},
        ))
    aq17, aq18 = 0.42, 0.49
    sc.append(Scenario(
        "fig17_beta_seasonal_data1", _data_params("data1", aq17), Seasonal(Sinusoid()), horizon=150.0,
        figure_tag="fig17", sweep=tuple({"beta": f * aq17} for f in (0.25, 0.5, 1.0, 2.0)),
        expect={"period": 1.0, "tol": 1e-6, "transient": 100.0},
        metadata={"data_set": "data1", "E_msy": DATA_SETS["data1"]["E_msy"]},
    ))
    sc.append(Scenario(
        "fig18_beta_seasonal_data3", _data_params("data3", aq18), Seasonal(Sinusoid()), horizon=20.0,
        figure_tag="fig18", sweep=tuple({"beta": f * aq18} for f in (0.25, 0.5, 1.0, 2.0)),
        note="short-time behaviour",
        metadata={"data_set": "data3", "E_msy": DATA_SETS["data3"]["E_msy"]},
    ))
    rot = Rotational(Sinusoid(), open_years=1, closed_years=2)
    sc.append(Scenario(
        "fig19_rotational_short", _data_params("data1", 1.0), rot, horizon=9.0, figure_tag="fig19",
        metadata={"data_set": "data1"},
    ))
    sc.append(Scenario(
        "fig20_rotational", _data_params("data1", 1.0), rot, horizon=200.0, figure_tag="fig20",
        expect={"period": 3.0, "tol": 1e-6, "transient": ROTATIONAL_TRANSIENT,
                "min_N": ROTATIONAL_MIN_N, "min_N_tol": 1e-9},
        metadata={"data_set": "data1"},
    ))
    for ds in DATA_SETS:
        sc.append(Scenario(
            f"{ds}_sweep", _data_params(ds), Seasonal(Sinusoid()), horizon=100.0, sweep=_aq_sweep(ds),
            metadata={"data_set": ds, "E_msy": DATA_SETS[ds]["E_msy"]},
        ))
    sc.append(Scenario(
        "constant_harvest", ModelParams(r=0.5, K=1.0, q=1.0), Constant(E_const=0.1), horizon=100.0,
        expect={"final_N": 0.5 * (1 + math.sqrt(0.2)), "tol": 1e-6},
    ))
    out = {}
    for s in sc:
        if s.name in out:
            raise RuntimeError(f"duplicate scenario {s.name}")
        out[s.name] = s
    return out


_REGISTRY = _build()


def registry() -> list[Scenario]:
    return list(_REGISTRY.values())


def get_scenario(name: str) -> Scenario:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}") from None


def find_by_tag(tag: str) -> Scenario:
    """Look up by scenario name or figure tag."""
    if tag in _REGISTRY:
        return _REGISTRY[tag]
    for s in _REGISTRY.values():
        if s.figure_tag == tag:
            return s
    raise KeyError(f"unknown scenario or figure tag {tag!r}")


def _analytic_equilibria(params, strategy):
    if isinstance(strategy, Proportional):
        return analysis.equilibria_proportional(params, strategy.lam)
    if isinstance(strategy, ProportionalThreshold) and not strategy.harvest_below:
        return analysis.equilibria_threshold(params, strategy.lam, strategy.N_thre)
    if isinstance(strategy, RestrictedProportional):
        return analysis.equilibria_restricted(params, strategy.Y_limit)
    return None


def _eq_dict(rep):
    return {"points": [[p.N, p.stability, p.derivation] for p in rep.points], "feasible": rep.feasible}


def run_scenario(
    scenario: str | Scenario,
    config: IntegrationConfig | None = None,
    sweep: Sequence[Mapping[str, Any]] | None = None,
) -> ScenarioResult:
    """Run every sweep member and evaluate the scenario's expected outcome.

    ``config`` defaults to the scenario's own step and horizon; ``sweep``
    replaces the registered sweep.
    """
    sc = get_scenario(scenario) if isinstance(scenario, str) else scenario
    if sweep is not None:
        sc = replace(sc, sweep=tuple(sweep))
    config = config or IntegrationConfig(dt=sc.dt, t_end=sc.horizon)
    exp = sc.expect
    tol = exp.get("tol", 1e-6)
    runs, members = [], []
    for ov in sc.members():
        p, s, N0 = apply_overrides(sc.params, sc.strategy, sc.N0, ov)
        traj = integrate(p, s, N0, config)
        runs.append((dict(ov), traj))
        m = {"overrides": dict(ov), "final_N": float(traj.N[-1]), "extinct": traj.extinct,
             "t_final": float(traj.t[-1]), "events": len(traj.events),
             "negative_effort_samples": traj.negative_effort_count}
        rep = _analytic_equilibria(p, s)
        if rep is not None:
            m["equilibria"] = _eq_dict(rep)
            m["analytic_stable"] = rep.positive_stable
        members.append((p, s, N0, traj, m))

    report: dict = {"scenario": sc.name, "figure_tag": sc.figure_tag, "t_end": config.t_end, "dt": config.dt,
                    "metadata": dict(sc.metadata), "runs": [m for *_, m in members]}
    messages: list[str] = []
    ok = True

    def check(cond: bool, what: str, measured, expected):
        nonlocal ok
        ok &= bool(cond)
        messages.append(f"{'PASS' if cond else 'FAIL'} {what}: measured {measured}, expected {expected}")

    if "final_N" in exp:
        targets = exp["final_N"]
        if not isinstance(targets, (list, tuple)):
            targets = [targets] * len(members)
        for (p, s, N0, traj, m), target in zip(members, targets):
            if target == 0.0:
                check(traj.extinct, f"extinction from N0={N0}", m["final_N"], "extinct")
            else:
                check(abs(m["final_N"] - target) < tol, f"final N from {m['overrides'] or 'base'}", m["final_N"], f"{target} +- {tol}")

    if exp.get("equilibrium"):
        for p, s, N0, traj, m in members:
            target = m.get("analytic_stable")
            check(target is not None and abs(m["final_N"] - target) < tol, f"final N vs analytic ({m['overrides']})", m["final_N"], target)

    if exp.get("yield_curve"):
        grid = np.round(np.arange(0, sc.params.r + 5e-4, 1e-3), 12)
        grid = grid[grid <= sc.params.r]
        curve = analysis.sustainable_yield_curve(sc.params, grid)
        report["yield_curve"] = {"argmax": curve.argmax, "max_yield": curve.max_yield}
        errs = []
        for p, s, N0, traj, m in members:
            x = s.lam * p.q * p.alpha
            analytic = x * p.K * (1 - x / p.r)
            m["lambda_q_alpha"] = x
            m["equilibrium_yield"] = float(traj.Y[-1])
            errs.append(abs(traj.Y[-1] - analytic))
        report["yield_curve"]["max_abs_error"] = max(errs)
        check(abs(curve.argmax - sc.params.r / 2) <= 5e-4, "yield argmax", curve.argmax, sc.params.r / 2)
        check(max(errs) < tol, "numerical equilibrium yield vs curve", max(errs), f"< {tol}")

    if exp.get("convergence") == "decreasing":
        eps = exp.get("epsilon", 1e-4)
        times = []
        for p, s, N0, traj, m in members:
            target = m.get("analytic_stable")
            m["convergence_time"] = analysis.convergence_time(traj, target, eps)
            times.append(m["convergence_time"])
        check(all(b < a for a, b in zip(times, times[1:])), "convergence time strictly decreasing", times, "decreasing")

    if "period" in exp:
        P = exp["period"]
        transient = exp.get("transient", analysis.DEFAULT_TRANSIENT)
        for p, s, N0, traj, m in members:
            try:
                periodic = analysis.attractor_period(traj, P, transient, tol)
            except analysis.DomainError as exc:
                periodic = False
                m["period_error"] = str(exc)
            m["period"] = P if periodic else None
            tail = traj.N[traj.t > transient]
            m["attractor_min_N"] = float(tail.min()) if len(tail) else None
            check(periodic and not traj.extinct, f"period-{P:g} attractor ({m['overrides'] or 'base'})", m["period"], P)
            if "min_N" in exp:
                check(m["attractor_min_N"] is not None and abs(m["attractor_min_N"] - exp["min_N"]) < exp["min_N_tol"],
                      "attractor minimum", m["attractor_min_N"], exp["min_N"])

    if not exp:
        for p, s, N0, traj, m in members:
            check(not traj.truncated, f"run completed ({m['overrides'] or 'base'})", m["t_final"], config.t_end)

    report["passed"] = ok
    return ScenarioResult(sc, [(ov, tr) for ov, tr in runs], report, ok, messages)
