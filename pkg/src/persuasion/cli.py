"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 failed check.
Every number is rounded to 12 significant digits before it is printed, so
the human table and ``--json`` output carry the same values.
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Optional

import numpy as np

from . import io as pio
from . import oracle
from .core import (
    PersuasionError,
    PersuasionInstance,
    PlatformPolicy,
    SenderPolicy,
    greedy_best_response,
    improve_to_lowest_type_targeting,
    is_lowest_type_targeting,
    policy_utilities,
    single_segment_policy,
    truthful_strategy,
)
from .io import canonical, canonical_list
from .reduction import check_reduction_identity, solve_one_shot, to_market
from .repeated import (
    SolverConfig,
    closed_form_utilities,
    first_best,
    is_incentive_compatible,
    monopoly_value,
    solve_repeated,
    surplus_total,
)
from .segmentation import (
    MarketError,
    bbm_segmentation,
    is_price_optimal,
    optimal_uniform_price,
    pareto_mix,
    revenue,
    surplus_triangle,
    surpluses,
)
from .simulate import SimConfig, dump_trajectory, punishment_hazard, rng_stream, simulate

EXIT_IO, EXIT_INVALID, EXIT_CHECK = 1, 2, 3


class CheckFailed(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def render(report: dict, indent: int = 0) -> str:
    pad = " " * indent
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render(value, indent + 2))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            cols = list(value[0])
            cells = [[_fmt(row.get(c)) for c in cols] for row in value]
            widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
            lines.append(f"{pad}{key}:")
            lines.append(pad + "  " + "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
            for r in cells:
                lines.append(pad + "  " + "  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip())
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return "\n".join(lines)


def _emit(report: dict, as_json: bool) -> None:
    sys.stdout.write(pio.dumps(report) if as_json else render(report) + "\n")


def _policy_rows(inst: PersuasionInstance, policy: PlatformPolicy, sender: SenderPolicy) -> list[dict]:
    rows = []
    for i, (w, x, p) in enumerate(zip(policy.weights, policy.posteriors, sender.lies)):
        rows.append({
            "segment": i,
            "weight": canonical(w),
            "posterior": canonical_list(x),
            "lie_prob": canonical(p),
            "truthful": i == policy.truthful_index,
        })
    return rows


def cmd_solve_oneshot(args) -> int:
    inst = pio.load_instance(args.instance)
    policy, sender, report = solve_one_shot(inst)
    out = {
        "command": "solve-oneshot",
        "segments": _policy_rows(inst, policy, sender),
        "utilities": pio.utilities_to_dict(report),
    }
    if args.out:
        pio.write_json(args.out, pio.policy_to_dict(policy, sender, report))
    _emit(out, args.json)
    return 0


def cmd_segment(args) -> int:
    market = pio.load_market(args.market)
    seg = bbm_segmentation(market) if args.pareto_mix is None else pareto_mix(market, args.pareto_mix)
    s = surpluses(seg)
    tri = surplus_triangle(market)
    out = {
        "command": "segment",
        "pareto_mix": None if args.pareto_mix is None else canonical(args.pareto_mix),
        "segments": [
            {"segment": i, "weight": canonical(w), "masses": canonical_list(row), "price": canonical(seg.values[k])}
            for i, (w, row, k) in enumerate(zip(seg.weights, seg.masses, seg.price_indices))
        ],
        "surplus": {"consumer": canonical(s.consumer), "producer": canonical(s.producer), "total": canonical(s.total)},
        "triangle": {name: canonical_list(pt) for name, pt in tri.items()},
    }
    _emit(out, args.json)
    return 0


def cmd_solve_repeated(args) -> int:
    inst = pio.load_instance(args.instance)
    if not inst.is_repeated:
        raise PersuasionError("instance has no 'repeated' block (delta, u_bar)")
    cfg = SolverConfig(grid_points_per_axis=args.grid, restarts=args.restarts)
    res = solve_repeated(inst, cfg)
    sender = truthful_strategy(inst, res.policy)
    report = policy_utilities(inst, res.policy, sender)
    out = {
        "command": "solve-repeated",
        "alpha_t": canonical(res.alpha_t),
        "x_t": None if res.x_t is None else canonical_list(res.x_t),
        "x_f": None if res.x_f is None else canonical_list(res.x_f),
        "segments": _policy_rows(inst, res.policy, sender),
        "sender_value": canonical(res.sender_value),
        "platform_value": canonical(res.platform_value),
        "ic_slack": [{"type": k + 1, "slack": canonical(v)} for k, v in sorted(res.ic_certificate.items())],
        "fallback_used": res.fallback_used,
        "grid_points_per_axis": cfg.grid_points_per_axis,
    }
    if args.out:
        pio.write_json(args.out, pio.policy_to_dict(res.policy, sender, report))
    _emit(out, args.json)
    return 0


def cmd_simulate(args) -> int:
    inst = pio.load_instance(args.instance)
    policy, sender, _ = pio.load_policy(args.policy)
    deviate = None
    if args.deviate is not None:
        if not 1 <= args.deviate <= inst.n:
            raise PersuasionError(f"--deviate must be a type index in 1..{inst.n}")
        deviate = args.deviate - 1
    cfg = SimConfig(periods=args.periods, seed=args.seed, deviate_at=deviate, record=bool(args.trajectory))
    rep = simulate(inst, policy, sender, cfg)

    effective = np.array(sender.lies)
    if policy.truthful_index is not None:
        effective[policy.truthful_index] = 0.0 if deviate is None else inst.thresholds[deviate]
    theory = policy_utilities(inst, policy, SenderPolicy(effective))
    out = {
        "command": "simulate",
        "periods": args.periods,
        "seed": args.seed,
        "mode": "truthful" if deviate is None else f"deviate at type {args.deviate}",
        "sender": {
            "empirical": canonical(rep.avg_sender_utility),
            "std_error": canonical(rep.avg_sender_utility_se),
            "theoretical_high_state": canonical(theory.sender),
        },
        "platform": {
            "empirical": canonical(rep.avg_user_utility),
            "std_error": canonical(rep.avg_user_utility_se),
            "theoretical_high_state": canonical(theory.platform),
        },
    }
    if rep.discounted_sender_utility is not None:
        out["discounted_sender_utility"] = canonical(rep.discounted_sender_utility)
        out["discount_tail_bound"] = canonical(rep.discount_tail_bound)
    if rep.punishment_period is not None:
        out["punishment_period"] = rep.punishment_period
    if deviate is not None:
        hazard, se = punishment_hazard(inst, policy, sender, deviate, args.periods, args.seed)
        x_t = policy.x_t
        out["hazard"] = {
            "empirical": canonical(hazard),
            "std_error": canonical(se),
            "theoretical": canonical((1 - inst.mu) * float(np.sum(x_t[deviate:])) * inst.thresholds[deviate]),
        }
    if args.trajectory:
        dump_trajectory(rep, args.trajectory)
    _emit(out, args.json)
    return 0


def _random_posterior(rng, n: int) -> np.ndarray:
    x = rng.dirichlet(np.ones(n))
    mask = rng.random(n) < 0.3
    if mask.all():
        mask[rng.integers(n)] = False
    x[mask] = 0.0
    return x / x.sum()


def _verify_checks(inst: PersuasionInstance, seed: int, policy_file) -> list[tuple[str, float, Callable[[], bool]]]:
    rng = rng_stream(seed)
    rmap = to_market(inst)
    market = rmap.market
    posts = [_random_posterior(rng, inst.n) for _ in range(200)]
    lies = np.concatenate([[0.0], inst.thresholds])
    checks: list[tuple[str, float, Callable[[], bool]]] = []

    def add(name, tol):
        def deco(fn):
            checks.append((name, tol, fn))
            return fn
        return deco

    if policy_file is not None:
        @add("policy file is Bayes-plausible for the instance", 1e-9)
        def _():
            try:
                policy, _, _ = pio.load_policy(policy_file)
            except PersuasionError:
                return False
            return policy.is_bayes_plausible(inst.prior, 1e-9)

    @add("sender and user utilities equal producer revenue and consumer surplus", 1e-12)
    def _():
        return all(check_reduction_identity(x, p, rmap) for x in posts for p in lies)

    @add("closed-form utilities match outcome enumeration", 1e-12)
    def _():
        from .core import platform_utility
        for x in posts[:50]:
            for p in lies:
                a, b = platform_utility(inst, x, p), oracle.enumerate_one_shot_utilities(inst, x, p)
                if abs(a.sender - b.sender) > 1e-12 or abs(a.platform - b.platform) > 1e-12:
                    return False
        return True

    @add("greedy target equals the monopoly price index", 0.0)
    def _():
        from .segmentation import Market
        return all(
            greedy_best_response(inst, x)[0] == optimal_uniform_price(Market(market.values, x)) for x in posts
        )

    seg = bbm_segmentation(market)
    sur = surpluses(seg)
    monopoly_rev = revenue(market, optimal_uniform_price(market))

    @add("segmentation averages to the prior", 1e-9)
    def _():
        return bool(np.max(np.abs(seg.aggregate() - market.masses)) <= 1e-9)

    @add("every segment is priced optimally", 1e-12)
    def _():
        return is_price_optimal(seg)

    @add("producer surplus equals uniform monopoly revenue", 1e-9)
    def _():
        return abs(sur.producer - monopoly_rev) <= 1e-9

    @add("every consumer buys", 1e-9)
    def _():
        return abs(sur.total - market.total_value) <= 1e-9 and seg.m <= inst.n

    if inst.n <= 3:
        @add("no gridded two-segment split beats the segmentation", 1e-3)
        def _():
            best = oracle.grid_segmentation_search(market.values, market.masses, oracle.GridSpec(resolution=50))
            return best <= sur.consumer + 1e-3

    policy, sender, report = solve_one_shot(inst)

    @add("one-shot policy is Bayes-plausible and lowest-type-targeting", 1e-9)
    def _():
        return policy.is_bayes_plausible(inst.prior) and is_lowest_type_targeting(inst, policy)

    @add("one-shot sender utility equals the no-information utility", 1e-9)
    def _():
        return abs(report.sender - monopoly_value(inst)) <= 1e-9 and abs(report.platform - sur.consumer) <= 1e-9

    @add("splitting the prior reaches a lowest-type-targeting policy without hurting anyone", 1e-9)
    def _():
        base = single_segment_policy(inst)
        better = improve_to_lowest_type_targeting(inst, base)
        before, after = policy_utilities(inst, base), policy_utilities(inst, better)
        return (
            is_lowest_type_targeting(inst, better)
            and better.is_bayes_plausible(inst.prior)
            and after.sender >= before.sender - 1e-9
            and after.platform >= before.platform - 1e-9
        )

    if inst.is_repeated:
        res = solve_repeated(inst)

        @add("repeated policy is incentive compatible, Bayes-plausible and lowest-type-targeting", 1e-9)
        def _():
            ok, slack = is_incentive_compatible(inst, res.policy)
            return (
                min(slack.values(), default=0.0) >= -1e-9
                and res.policy.is_bayes_plausible(inst.prior)
                and is_lowest_type_targeting(inst, res.policy)
            )

        @add("repeated platform value between the one-shot value and the first best", 1e-9)
        def _():
            return report.platform - 1e-9 <= res.platform_value <= first_best(inst) + 1e-9

        @add("closed forms and the surplus identity hold on the repeated policy", 1e-12)
        def _():
            cf = closed_form_utilities(inst, res.policy)
            direct = policy_utilities(inst, res.policy)
            return (
                abs(cf.value - direct.sender) <= 1e-12
                and abs(cf.platform - direct.platform) <= 1e-12
                and abs(direct.sender + direct.platform - surplus_total(inst)) <= 1e-12
            )

        if inst.n <= 3:
            resolution = 400 if inst.n <= 2 else 100
            grid_tol = 1e-3 if inst.n <= 2 else 2.0 / (resolution - 1)

            @add(f"repeated value matches the grid oracle (resolution {resolution})", grid_tol)
            def _():
                grid = oracle.grid_repeated_search(inst, oracle.GridSpec(resolution=resolution))
                return abs(grid.platform - res.platform_value) <= grid_tol

        @add("repeated value matches the analytic candidate", 1e-6)
        def _():
            return abs(oracle.analytic_v_star(inst) - res.sender_value) <= 1e-6

    return checks


def cmd_verify(args) -> int:
    inst = pio.load_instance(args.instance)
    if args.policy is not None:
        pio.read_json(args.policy)  # unreadable or non-JSON files are input errors, not failed checks
    results = []
    for name, tol, fn in _verify_checks(inst, args.seed, args.policy):
        try:
            passed = bool(fn())
        except Exception as exc:  # a crashing check is a failed check
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        results.append({"check": name, "tolerance": canonical(tol), "passed": passed})
    failed = sum(not r["passed"] for r in results)
    out = {"command": "verify", "checks": results, "failed": failed}
    if args.json:
        _emit(out, True)
    else:
        for r in results:
            sys.stdout.write(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}  (tol {_fmt(r['tolerance'])})\n")
        sys.stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return EXIT_CHECK if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="persuasion", description="Persuasion platform solvers")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-oneshot", help="user-optimal one-shot disclosure policy")
    s.add_argument("instance")
    s.add_argument("--out", help="write the policy file here")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_solve_oneshot)

    s = sub.add_parser("segment", help="consumer-optimal segmentation of a market file")
    s.add_argument("market")
    s.add_argument("--pareto-mix", type=float, default=None, metavar="LAMBDA",
                   help="weight on full revelation, in [0, 1]")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("solve-repeated", help="optimal policy for the reputation game")
    s.add_argument("instance")
    s.add_argument("--grid", type=int, default=32, help="grid points per axis (>= 8)")
    s.add_argument("--restarts", type=int, default=4)
    s.add_argument("--out", help="write the policy file here")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_solve_repeated)

    s = sub.add_parser("simulate", help="Monte Carlo run of the reputation game")
    s.add_argument("instance")
    s.add_argument("--policy", required=True)
    s.add_argument("--periods", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--deviate", type=int, default=None, metavar="K",
                   help="lie at type K's threshold (1-based) on the truthful segment")
    s.add_argument("--trajectory", help="write one JSON line per period here")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="run invariant and oracle checks on an instance")
    s.add_argument("instance")
    s.add_argument("--policy", help="also check this policy file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PersuasionError, MarketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
