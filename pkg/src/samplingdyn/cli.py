"""Command line front end.

Subcommands: analyze, phase, trajectory, basins, oracle, sweep,
normalize.  Runs are driven by a JSON config (--config) with a top-level
"command" discriminator; the flags --out, --seed, --resolution, --tmax,
--dt override the matching config fields.  Exit codes: 0 success, 2
configuration error, 3 internal numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import config as cfg
from . import svg as svgmod
from .config import ConfigError
from .dynamics import Environment, SampleSizeDistribution
from .extensions import (
    MinEffortResponse,
    Observation,
    contracting_pure_stability,
    mineffort_pure_stability,
)
from .flow import NumericError, estimate_basins, integrate
from .games import canonicalize, to_dominance
from .oracle import empirical_response, simulate_population


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="samplingdyn",
        description="Sampling best-response dynamics for coordination games",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("analyze", "stationary states, stability, and theorem reports"),
        ("phase", "deterministic SVG phase plot plus curve CSV"),
        ("trajectory", "integrate one trajectory to CSV"),
        ("basins", "basin-of-attraction grid to CSV"),
        ("oracle", "finite-population Monte Carlo run to CSV"),
        ("sweep", "parameter sweep with per-point verdicts"),
        ("normalize", "reduce a game to the standard representation"),
    ]:
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", type=str, help="JSON run configuration")
        p.add_argument("--out", type=str, help="output directory (default '.')")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--resolution", type=int, help="grid resolution per axis")
        p.add_argument("--tmax", type=float, help="integration horizon")
        p.add_argument("--dt", type=float, help="integration step size")
    return parser


def _merged_config(args: argparse.Namespace) -> dict:
    conf = cfg.load_config(args.config) if args.config else {}
    if "command" in conf and conf["command"] != args.command:
        raise ConfigError(
            f"config is for command {conf['command']!r}, invoked as {args.command!r}"
        )
    for key, value in [
        ("out", args.out),
        ("seed", args.seed),
        ("resolution", args.resolution),
        ("tmax", args.tmax),
        ("dt", args.dt),
    ]:
        if value is not None:
            conf[key] = value
    return conf


def _out_dir(conf: dict) -> Path:
    out = Path(conf.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _env_spec(conf: dict) -> cfg.EnvSpec:
    if "environment" not in conf:
        raise ConfigError("missing 'environment' in config")
    return cfg.parse_environment(conf["environment"])


def _stationary_for_spec(spec: cfg.EnvSpec) -> an.StationaryAnalysis:
    system = spec.response_system()
    if spec.kind == "sampling" and spec.one_population:
        return an.find_stationary_one_pop(system)
    if spec.kind == "mineffort":
        return an.find_stationary_one_pop(system)
    return an.find_stationary_two_pop(system)


def _state_str(s: an.StationaryState) -> str:
    if s.is_pair:
        return f"({s.p1:.4f}, {s.p2:.4f})"
    return f"{s.p1:.4f}"


def cmd_analyze(conf: dict) -> int:
    spec = _env_spec(conf)
    out = _out_dir(conf)
    reports: dict[str, dict] = {}

    if spec.kind == "contracting":
        eq_reports = contracting_pure_stability(spec.contracting, *spec.thetas)
        entries = []
        for r in eq_reports:
            entries.append(
                {
                    "action": r.action,
                    "pareto_efficient": r.pareto_efficient,
                    "part1_products": list(r.part1_products),
                    "part2_products": list(r.part2_products),
                    "label": r.label,
                }
            )
            print(
                f"Proposition 5, equilibrium {r.action}: {r.label} "
                f"(part1 {r.part1_products[0]:.6g}/{r.part1_products[1]:.6g}, "
                f"part2 {r.part2_products[0]:.6g}/{r.part2_products[1]:.6g})"
            )
        reports["proposition-5"] = {"equilibria": entries}
        cfg.write_json(out / "theorems.json", reports)
        return 0

    stationary = _stationary_for_spec(spec)
    cfg.write_stationary_csv(out / "stationary.csv", stationary)
    if stationary.continuum:
        print(f"continuum: {stationary.note}")
    else:
        for s in stationary.states:
            print(
                f"stationary {_state_str(s)}: {s.stability.value} "
                f"(slope product {s.slope_product:.6g}, residual {s.residual:.2e})"
            )

    if spec.kind == "mineffort":
        rep = mineffort_pure_stability(spec.mineffort, spec.thetas[0])
        name = (
            "proposition-7"
            if spec.mineffort.observation == Observation.MINIMUM_EFFORT
            else "proposition-8"
        )
        reports[name] = {
            "safe": rep.safe_label.value,
            "efficient": rep.efficient_label.value,
            "conditions": rep.conditions,
            "note": rep.note,
        }
        print(f"{name}: safe {rep.safe_label.value}, efficient {rep.efficient_label.value}")

    if spec.kind == "sampling":
        env = spec.environment
        pure = an.classify_pure_states(env, one_population=spec.one_population)
        reports["proposition-4"] = {
            "state_a": cfg.theorem_report_json(
                an.TheoremReport(
                    "proposition-4-a",
                    {
                        "product": pure.state_a.slope_product,
                        "leading_eigenvalue": pure.state_a.leading_eigenvalue,
                    },
                    an.Verdict.HOLDS,
                )
            ),
            "state_b": cfg.theorem_report_json(
                an.TheoremReport(
                    "proposition-4-b",
                    {
                        "product": pure.state_b.slope_product,
                        "leading_eigenvalue": pure.state_b.leading_eigenvalue,
                    },
                    an.Verdict.HOLDS,
                )
            ),
        }
        print(
            f"Proposition 4: state a {pure.state_a.stability.value} "
            f"(product {pure.state_a.slope_product:.6g}), "
            f"state b {pure.state_b.stability.value} "
            f"(product {pure.state_b.slope_product:.6g})"
        )

        if env.theta1.degenerate_k and env.theta2.degenerate_k:
            if env.theta1.degenerate_k > 1 and env.theta2.degenerate_k > 1:
                rep = an.check_homogeneous_uniqueness(env)
                reports["theorem-1"] = cfg.theorem_report_json(rep)
                print(f"Theorem 1/1': {rep.verdict.value}")

        if env.game.u1 >= 1.0:
            rep = an.check_theorem4(env)
            reports["theorem-4"] = cfg.theorem_report_json(rep)
            print(f"Theorem 4 part 1: {rep.parts['part1'].value}")
            print(f"Theorem 4 part 2: {rep.parts['part2'].value}")

        if env.game.u2 < 1.0 < env.game.u1:
            rep = an.check_theorem3(
                env.game, (env.theta1, env.theta2), int(conf.get("big_k", 1000))
            )
            reports["theorem-3"] = cfg.theorem_report_json(rep)
            print(f"Theorem 3: {rep.verdict.value}")

        step = float(conf.get("search_alpha_step", 0.1))
        search = an.stable_interior_search(
            env.game,
            (env.theta1, env.theta2),
            big_k=int(conf.get("big_k", 1000)),
            alpha_step=step,
        )
        entry = {
            "found": search.found,
            "in_scope": search.in_scope,
            "alpha": list(search.alpha) if search.alpha else None,
            "alpha_step": step,
        }
        if search.state is not None:
            entry["state"] = [search.state.p1, search.state.p2]
        reports["theorem-2-search"] = entry
        found = f"alpha={search.alpha}" if search.found else "none"
        scope = "" if search.in_scope else " [outside theorem scope]"
        print(f"Theorem 2/2' mixture search: {found}{scope}")

        stable_int = stationary.stable_interior()
        for s in stable_int:
            if s.is_pair:
                print(
                    f"miscoordination at {_state_str(s)}: "
                    f"{an.miscoordination_probability(s.state):.4f}"
                )

    if reports:
        cfg.write_json(out / "theorems.json", reports)
    return 0


def cmd_phase(conf: dict) -> int:
    spec = _env_spec(conf)
    out = _out_dir(conf)
    samples = int(conf.get("samples", 601))
    stationary = _stationary_for_spec(spec)
    if spec.kind in ("sampling", "mineffort") and (
        spec.one_population or spec.kind == "mineffort"
    ):
        response = (
            spec.environment.single_response()
            if spec.kind == "sampling"
            else MinEffortResponse(spec.mineffort, spec.thetas[0])
        )
        svg_text = svgmod.phase_svg_one_pop(response, stationary, samples)
        csv_text = svgmod.phase_curves_csv_one_pop(response, samples)
    else:
        pair = spec.pair if spec.kind == "logit" else spec.environment.pair()
        svg_text = svgmod.phase_svg_two_pop(
            pair, stationary, samples, quiver=int(conf.get("quiver", 15))
        )
        csv_text = svgmod.phase_curves_csv_two_pop(pair, samples)
    (out / "phase.svg").write_bytes(svg_text.encode("utf-8"))
    with open(out / "phase.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text)
    print(f"wrote {out / 'phase.svg'} and {out / 'phase.csv'}")
    return 0


def _parse_initial(conf: dict, one_population: bool):
    if "initial" not in conf:
        return 0.5 if one_population else (0.5, 0.5)
    raw = conf["initial"]
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, list) and len(raw) == 2:
        return (float(raw[0]), float(raw[1]))
    raise ConfigError(f"invalid 'initial': {raw!r}")


def cmd_trajectory(conf: dict) -> int:
    spec = _env_spec(conf)
    out = _out_dir(conf)
    initial = _parse_initial(conf, spec.one_population)
    system = spec.response_system()
    traj = integrate(
        system,
        initial,
        t_max=float(conf.get("tmax", 200.0)),
        dt=float(conf.get("dt", 0.01)),
    )
    cfg.write_trajectory_csv(out / "trajectory.csv", traj.times, traj.states)
    print(f"verdict: {traj.verdict}")
    return 0


def cmd_basins(conf: dict) -> int:
    spec = _env_spec(conf)
    out = _out_dir(conf)
    system = spec.response_system()
    grid = estimate_basins(
        system,
        resolution=int(conf.get("resolution", 101)),
        t_max=float(conf.get("tmax", 200.0)),
        dt=float(conf.get("dt", 0.01)),
    )
    cfg.write_basins_csv(out / "basins.csv", grid)
    cfg.write_json(out / "basins_legend.json", cfg.basin_legend_json(grid))
    for i, s in enumerate(grid.attractors):
        share = grid.shares.get(i, 0.0)
        print(f"attractor {i} {_state_str(s)} [{s.stability.value}]: share {share:.4f}")
    if grid.flagged:
        print(f"flagged cells: {grid.flagged}")
    return 0


def cmd_oracle(conf: dict) -> int:
    spec = _env_spec(conf)
    out = _out_dir(conf)
    if spec.kind != "sampling":
        raise ConfigError("the oracle simulates sampling environments only")
    seed = int(conf.get("seed", 0))
    mode = conf.get("mode", "population")
    if mode == "response":
        p = float(conf.get("p", 0.5))
        samples = int(conf.get("samples", 10**5))
        est, se = empirical_response(spec.environment, p, samples, seed)
        lines = [
            f"# seed={seed} samples={samples}",
            "p,estimate,standard_error",
            f"{cfg.fmt(p)},{cfg.fmt(est)},{cfg.fmt(se)}",
        ]
        with open(out / "oracle.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"empirical response at p={p}: {est:.6f} +- {se:.2e}")
        return 0
    if mode != "population":
        raise ConfigError(f"unknown oracle mode {mode!r}")
    n = int(conf.get("n", 10**5))
    initial = _parse_initial(conf, spec.one_population) if "initial" in conf else None
    traj = simulate_population(
        spec.environment,
        n=n,
        t_max=float(conf.get("tmax", 50.0)),
        dt=float(conf.get("dt", 0.01)),
        seed=seed,
        initial=initial,
    )
    cfg.write_trajectory_csv(
        out / "oracle.csv", traj.times, traj.states, comments=(f"seed={seed} n={n}",)
    )
    print(f"final state: {traj.final_state}")
    return 0


def _sweep_values(spec: dict) -> list[float]:
    start = float(cfg._number(spec, "start", "sweep"))
    stop = float(cfg._number(spec, "stop", "sweep"))
    step = float(cfg._number(spec, "step", "sweep"))
    if step <= 0 or stop < start:
        raise ConfigError("sweep needs step > 0 and stop >= start")
    values = []
    i = 0
    while True:
        v = round(start + i * step, 12)
        if v > stop + 1e-12:
            break
        values.append(v)
        i += 1
    return values


def cmd_sweep(conf: dict) -> int:
    if "sweep" not in conf:
        raise ConfigError("missing 'sweep' in config")
    spec = conf["sweep"]
    sweep_type = spec.get("type")
    out = _out_dir(conf)
    rows = []

    def analyze_env(env_or_response, one_pop: bool, value: float):
        flag = ""
        try:
            if one_pop:
                res = an.find_stationary_one_pop(env_or_response)
            else:
                res = an.find_stationary_two_pop(env_or_response)
        except ArithmeticError:
            return [cfg.fmt(value), "", "", "", "", "", "numeric-failure"]
        if res.continuum:
            return [cfg.fmt(value), "", "", "", "", "", "continuum"]
        interior = res.interior()
        stable_int = res.stable_interior()
        t4p1 = t4p2 = ""
        if not one_pop and hasattr(env_or_response, "game"):
            if env_or_response.game.u1 >= 1.0:
                rep = an.check_theorem4(env_or_response)
                t4p1 = rep.parts["part1"].value
                t4p2 = rep.parts["part2"].value
        return [
            cfg.fmt(value),
            str(len(res.states)),
            str(len(interior)),
            "1" if stable_int else "0",
            t4p1,
            t4p2,
            flag,
        ]

    if sweep_type == "theta-mass":
        game = cfg.parse_game(conf.get("environment", conf), "sweep environment")
        if not game.is_symmetric:
            raise ConfigError("theta-mass sweeps use a symmetric game")
        k = int(cfg._number(spec, "k", "sweep"))
        big_k = int(cfg._number(spec, "big_k", "sweep"))
        for beta in _sweep_values(spec):
            if not (0.0 < beta < 1.0):
                raise ConfigError(f"theta mass {beta} outside (0, 1)")
            theta = SampleSizeDistribution.of({k: beta, big_k: 1.0 - beta})
            env = Environment.symmetric(game.u, theta)
            rows.append(analyze_env(env, True, beta))
    elif sweep_type == "alpha":
        env_spec = _env_spec(conf)
        if env_spec.kind != "sampling":
            raise ConfigError("alpha sweeps need a sampling environment")
        env = env_spec.environment
        big_k = int(cfg._number(spec, "big_k", "sweep"))
        for alpha in _sweep_values(spec):
            if not (0.0 < alpha < 1.0):
                raise ConfigError(f"alpha {alpha} outside (0, 1)")
            mixed = Environment(
                env.game,
                env.theta1.mix_with(alpha, big_k),
                env.theta2.mix_with(alpha, big_k),
                env.tie_break,
            )
            rows.append(analyze_env(mixed, env_spec.one_population, alpha))
    elif sweep_type == "u":
        theta = cfg.parse_theta(
            cfg._require(conf.get("environment", {}), "theta", "environment"), "theta"
        )
        for u in _sweep_values(spec):
            if u <= 0:
                raise ConfigError(f"u {u} must be positive")
            rows.append(analyze_env(Environment.symmetric(u, theta), True, u))
    else:
        raise ConfigError(f"unknown sweep type {sweep_type!r}")

    header = "value,n_stationary,n_interior,stable_interior,thm4_part1,thm4_part2,flag"
    text = header + "\n" + "\n".join(",".join(r) for r in rows) + "\n"
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
    return 0


def cmd_normalize(conf: dict) -> int:
    game_obj = conf.get("game", conf.get("environment"))
    if game_obj is None:
        raise ConfigError("missing 'game' in config")
    game = cfg.parse_game(game_obj, "game")
    canonical, swapped = canonicalize(game)
    dom = to_dominance(canonical)
    out_obj = {
        "u1": canonical.u1,
        "u2": canonical.u2,
        "labels_swapped": swapped,
        "dominance": {"q1": dom.q1, "q2": dom.q2},
        "mixed_nash": list(canonical.mixed_nash()),
    }
    print(json.dumps(out_obj, indent=2, sort_keys=True))
    if "out" in conf:
        cfg.write_json(_out_dir(conf) / "normalized.json", out_obj)
    return 0


_COMMANDS = {
    "analyze": cmd_analyze,
    "phase": cmd_phase,
    "trajectory": cmd_trajectory,
    "basins": cmd_basins,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "normalize": cmd_normalize,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        conf = _merged_config(args)
        return _COMMANDS[args.command](conf)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
