"""Scenario runners.  Each takes a resolved Scenario and returns an Outcome with a
verdict, a JSON-ready report and CSV tables (lists of rows with a header).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import bbgky, counterexample, definetti, liouville
from .config import Scenario
from .dynamics import Nonlinearity, VectorField, classify_uniqueness_regime
from .errors import ConfigError
from .hierarchy import combinatorial_identity
from .measures import AtomicMeasure, mix
from .scenarios import DEFAULT_NORMS, DEFAULT_WEIGHTS, default_measure
from .space import ModelSpace

SCHEMA_VERSION = 1


@dataclass
class Outcome:
    verdict: str
    report: dict
    tables: dict = field(default_factory=dict)  # filename -> (header, rows)


def _space(sc: Scenario) -> ModelSpace:
    m = sc["model"]
    if m["labels"]:
        return ModelSpace(tuple(m["labels"]), m["s"], m["sigma"])
    return ModelSpace.truncated(m["K"], m["s"], m["sigma"])


def _nl(sc: Scenario) -> Nonlinearity:
    d = sc["dynamics"]
    if d["kind"] == "cubic":
        return Nonlinearity.cubic(d["lambda"])
    if d["kind"] == "hartree":
        return Nonlinearity.hartree(d["Vhat"])
    return Nonlinearity.zero()


def _measure(sc: Scenario, space: ModelSpace) -> AtomicMeasure:
    ms = sc["measure"]
    if ms["file"]:
        try:
            with open(ms["file"], encoding="utf-8") as fh:
                mu = AtomicMeasure.from_json(json.load(fh))
        except (OSError, ValueError, KeyError) as e:
            raise ConfigError(f"cannot load measure file {ms['file']}: {e}") from None
        if mu.dim_m != space.dim_m:
            raise ConfigError(f"measure has {mu.dim_m} modes, model has {space.dim_m}")
        return mu
    w = ms["weights"] or DEFAULT_WEIGHTS
    r = ms["norms"] or DEFAULT_NORMS
    if len(w) != len(r):
        raise ConfigError("measure.weights and measure.norms differ in length")
    return default_measure(space, sc.seed, w, r)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _order_ok(coarse: float, fine: float, order: int, slack: float) -> tuple[bool, float]:
    ratio = coarse / fine if fine > 0 else np.inf
    target = 2.0**order
    return bool(abs(ratio - target) <= slack * target), float(ratio)


def run_duality(sc: Scenario) -> Outcome:
    space, nl = _space(sc), _nl(sc)
    vf = VectorField.nls(space, nl)
    mu = _measure(sc, space)
    t, tol = sc["time"], sc["tolerances"]
    K_max = sc["hierarchy"]["K_max"]
    traj, _ = liouville.liouville_from_flow(mu, vf, t["t0"], t["t1"], t["dt"])
    rep = liouville.duality_check(traj, vf, K_max, space, tol["residual"], sc.seed)
    report = {"nominal": rep.to_json()}
    ok = rep.passed and rep.direction == "both_small"
    rows = []
    for k in range(1, K_max + 1):
        c = rep.curves[f"hierarchy_{k}"]
        rows += [[tt, k, r, tol["residual"]] for tt, r in zip(c.times, c.values)]
    ctimes, K = rep.curves["characteristic"]
    crow = [[tt, j, K[j, i], tol["residual"]] for i, tt in enumerate(ctimes) for j in range(K.shape[0])]
    tables = {"residuals.csv": (["t", "k", "residual", "bound"], rows),
              "characteristic.csv": (["t", "y", "residual", "bound"], crow)}
    if sc["duality"]["refine"]:
        fine_traj, _ = liouville.liouville_from_flow(mu, vf, t["t0"], t["t1"], t["dt"] / 2)
        fine = liouville.duality_check(fine_traj, vf, K_max, space, tol["residual"], sc.seed)
        h_ok, h_ratio = _order_ok(max(rep.hierarchy.values()), max(fine.hierarchy.values()), 4, tol["order_slack"])
        c_ok, c_ratio = _order_ok(rep.characteristic, fine.characteristic, 4, tol["order_slack"])
        report["refinement"] = {"hierarchy_ratio": h_ratio, "characteristic_ratio": c_ratio, "ok": h_ok and c_ok,
                                "fine": fine.to_json()}
        ok = ok and h_ok and c_ok
    if sc["duality"]["negative_control"]:
        bad = liouville.duality_check(liouville.corrupt(traj, seed=sc.seed), vf, K_max, space, tol["residual"], sc.seed)
        neg_ok = bad.passed and min(bad.hierarchy.values()) > tol["negative"] and bad.characteristic > tol["negative"]
        report["negative_control"] = {**bad.to_json(), "ok": neg_ok}
        ok = ok and neg_ok
    return Outcome("PASS" if ok else "FAIL", report, tables)


def run_uniqueness(sc: Scenario) -> Outcome:
    space, nl = _space(sc), _nl(sc)
    vf = VectorField.nls(space, nl)
    mu = _measure(sc, space)
    t, tol = sc["time"], sc["tolerances"]
    K_max = sc["hierarchy"]["K_max"]
    rng = np.random.default_rng(sc.seed)
    rotated = mu.rotated(rng.uniform(0, 2 * np.pi, mu.n_atoms))
    permuted = mu.permuted(np.arange(mu.n_atoms)[::-1])
    cases = {"rotated": rotated, "permuted": permuted}
    results = {}
    for name, other in cases.items():
        results[name] = liouville.uniqueness_experiment(mu, other, vf, t["t0"], t["t1"], t["dt"], K_max, tol["equal"], sc.seed)
    a, b = collision_pair(space.dim_m)
    results["collision"] = liouville.uniqueness_experiment(a, b, vf, t["t0"], t["t1"], t["dt"], K_max, tol["equal"], sc.seed)
    ok = all(results[n]["accepted"] and results[n]["identical"] for n in cases)
    ok = ok and not results["collision"]["accepted"] and results["collision"]["k"] == 2
    rows = []
    for name, r in results.items():
        rows.append([name, r["accepted"], r.get("max_distance"), r.get("k"), r.get("moment_gap")])
    return Outcome("PASS" if ok else "FAIL", {"cases": results},
                   {"uniqueness.csv": (["case", "accepted", "max_distance", "reject_k", "moment_gap"], rows)})


def collision_pair(m: int) -> tuple[AtomicMeasure, AtomicMeasure]:
    """Two measures with the same gamma^(1) = diag(1/2, 1/2, 0, ...) but different gamma^(2)."""
    e = np.eye(m, dtype=complex)
    a = AtomicMeasure([0.5, 0.5], np.array([e[0], e[1]]))
    b = AtomicMeasure([0.5, 0.5], np.array([(e[0] + e[1]) / np.sqrt(2), (e[0] - e[1]) / np.sqrt(2)]))
    return a, b


def run_existence(sc: Scenario) -> Outcome:
    space, nl = _space(sc), _nl(sc)
    vf = VectorField.nls(space, nl)
    mu = _measure(sc, space)
    t, tol = sc["time"], sc["tolerances"]
    res = liouville.existence_check(mu, vf, space, t["t0"], t["t1"], t["dt"], sc["hierarchy"]["K_max"],
                                    tol["residual"], tol["slack"])
    rows = [[k, r, res["R"], res["worst_ratio"]] for k, r in res["hierarchy_residual"].items()]
    report = {**res, "hierarchy_residual": {str(k): v for k, v in res["hierarchy_residual"].items()}}
    return Outcome("PASS" if res["passed"] else "FAIL", report,
                   {"existence.csv": (["k", "residual", "R", "worst_ratio"], rows)})


def run_chaos(sc: Scenario, timings: bool = False) -> Outcome:
    c = sc["chaos"]
    space = _space(sc) if sc["model"]["labels"] else ModelSpace((0, 1), sc["model"]["s"], sc["model"]["sigma"])
    nl = _nl(sc)
    phi0 = np.asarray(c["phi0"] or np.ones(space.dim_m), dtype=complex)
    if phi0.size != space.dim_m:
        raise ConfigError(f"chaos.phi0 has {phi0.size} entries, model has {space.dim_m} modes")
    phi0 = phi0 / np.linalg.norm(phi0)
    rows = bbgky.chaos_experiment(phi0, space, nl, c["n_list"], c["t1"], c["k"], timings, c["cap"])
    eps = [r["epsilon"] for r in rows]
    monotone = all(b <= a * (1 + c["slack"]) for a, b in zip(eps, eps[1:]))
    ok = monotone and (len(eps) < 2 or eps[-1] < eps[0] or max(eps) <= 1e-10)
    table = [[r["n"], r["k"], r["epsilon"], r["runtime_ms"]] for r in rows]
    report = {"rows": rows if timings else [{k: v for k, v in r.items() if k != "runtime_ms"} for r in rows],
              "nonincreasing": monotone, "mode_labels": list(space.mode_labels)}
    return Outcome("PASS" if ok else "FAIL", report, {"chaos.csv": (["n", "k", "epsilon", "runtime_ms"], table)})


def run_counterexample(sc: Scenario) -> Outcome:
    c = sc["counterexample"]
    phase = counterexample.select_phase()
    t_list = c["t_list"] or tuple(0.2 * 0.5 ** np.arange(11))
    demo = counterexample.nonuniqueness_demo(t_list, c["L"], c["h"], c["centers"], phase["accepted"] or "pseudo_conformal")
    ok = phase["accepted"] == "pseudo_conformal" and demo["verdict"] == "NONUNIQUE"
    header = ["t", "mass"] + [f"pairing_{j + 1}" for j in range(len(c["centers"]))]
    rows = [[r["t"], r["mass"], *r["pairings"]] for r in demo["rows"]]
    return Outcome("PASS" if ok else "FAIL", {"phase_selection": phase, **{k: v for k, v in demo.items() if k != "rows"}},
                   {"counterexample.csv": (header, rows)})


def run_definetti(sc: Scenario) -> Outcome:
    space = _space(sc)
    mu = _measure(sc, space)
    K_max = sc["hierarchy"]["K_max"]
    cap = max(K_max, sc["model"]["k_cap"])
    gamma = definetti.phi(mu, K_max, cap)
    sphere, sphere_rep = definetti.sphere_concentration_test(gamma)
    compat, defects = definetti.trace_compatibility_test(gamma) if K_max >= 2 else (True, [])
    on_sphere = bool(np.all(np.abs(np.linalg.norm(mu.points, axis=1) - 1) <= 1e-12))
    at_origin = np.linalg.norm(mu.points, axis=1) <= 1e-12
    lemma_ok = compat == bool(np.all(on_sphere | at_origin)) if K_max >= 2 else True
    nu = AtomicMeasure.dirac(np.eye(space.dim_m)[0])
    t_mix = 0.37
    convex = max(definetti.hierarchy_distance(definetti.phi(mix(mu, nu, t_mix), K_max, cap),
                                              _combine(gamma, definetti.phi(nu, K_max, cap), t_mix)))
    k = sc["definetti"]["k"]
    n_list = sc["definetti"]["n_list"] or tuple(range(2, space.dim_m + 1))
    lift = definetti.weak_star_lifting_demo(mu, k, n_list)
    lift_ok = all(r["weak_star"] <= 1e-10 for r in lift)
    ok = sphere_rep["consistent"] and lemma_ok and convex <= 1e-12 and lift_ok
    rows = [[r["n"], r["weak_star"], r["compact"], r["trace_gap"], r["trace_distance"]] for r in lift]
    report = {"sphere": {"verdict": sphere, **sphere_rep}, "trace_compatibility": {"verdict": compat, "defects": defects},
              "convexity_defect": convex, "lifting": lift}
    return Outcome("PASS" if ok else "FAIL", report,
                   {"lifting.csv": (["n", "weak_star", "compact", "trace_gap", "trace_distance"], rows)})


def _combine(a, b, t):
    from .symtensor import SymOperator

    return definetti.Hierarchy(tuple(SymOperator(x.k, x.m, t * x.matrix + (1 - t) * y.matrix)
                                     for x, y in zip(a.components, b.components)))


def run_regimes(sc: Scenario) -> Outcome:
    r = sc["regimes"]
    res = regimes_report(r["d"], r["s"], r["alpha"])
    rows = [[res["d"], res["s"], res["alpha"], c["case"], c["covered"], c["inequality"]] for c in res["cases"]]
    return Outcome("PASS", res, {"regimes.csv": (["d", "s", "alpha", "case", "covered", "inequality"], rows)})


def regimes_report(d, s, alpha) -> dict:
    from fractions import Fraction

    def frac(v):
        return Fraction(v) if isinstance(v, str) else v

    try:
        return classify_uniqueness_regime(int(d), frac(s), frac(alpha))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"bad regime parameters: {e}") from None


def identity_table(k_max: int = 8) -> list[tuple[int, int, int]]:
    return [(k, *combinatorial_identity(k)) for k in range(1, k_max + 1)]


RUNNERS = {
    "duality": run_duality,
    "uniqueness": run_uniqueness,
    "existence": run_existence,
    "chaos": run_chaos,
    "counterexample": run_counterexample,
    "definetti": run_definetti,
    "regimes": run_regimes,
}


def write_csv_text(header, rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    return "\n".join(out) + "\n"
