"""Command-line interface.

Subcommands: run (one trial), dims (dimensions of a class), adversary
(emit a hard-process trace), experts (serialize a flip-set pool), check
(condition checkers).  Exit codes: 0 ok, 2 invalid config, 3 infeasible
construction, 4 violated invariant.
"""

import argparse
import sys

from .concepts import parse_class_spec
from .errors import (
    ConfigError,
    EndOfStream,
    InfeasibleError,
    InvariantError,
    MistakeLabError,
    RealizabilityError,
    StateError,
)
from .harness import (
    adversary_to_csv,
    check_c2,
    check_condition1,
    default_config,
    emit,
    load_config,
    report_to_csv,
    run_trial,
    trace_to_csv,
)
from .learners import save_expert_pool, set_of_index
from .processes import littlestone_adversary, vcl_adversary
from .trees import (
    build_vcl_adversary_tree,
    littlestone_dimension,
    littlestone_witness,
    vc_dimension,
    vcl_depth,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INVARIANT = 4


def _write_or_print(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _merged_config(args):
    cfg = default_config()
    if args.config:
        for section, values in load_config(args.config).items():
            cfg.setdefault(section, {}).update(values)
    return cfg


def _cmd_run(args):
    cfg = _merged_config(args)
    trial = cfg.get("trial", {})
    seed = args.seed if args.seed is not None else int(trial.get("seed", "0"))
    T = args.T if args.T is not None else int(trial.get("t", trial.get("T", "100")))
    learner_cfg = dict(cfg.get("learner", {}))
    if args.learner:
        learner_cfg["name"] = args.learner
    if args.rollouts is not None:
        learner_cfg["rollouts"] = str(args.rollouts)
    if args.experts_max is not None:
        learner_cfg["experts_max"] = str(args.experts_max)
    class_spec = args.class_spec or cfg.get("class", {}).get("spec", "thresholds:7")
    trace = run_trial(
        learner_cfg,
        cfg.get("process", {}),
        class_spec,
        T,
        seed,
        mode=trial.get("mode", "realizable"),
        comparator=trial.get("comparator", "truth"),
    )
    if args.out:
        emit(trace, args.format, args.out)
    else:
        sys.stdout.write(trace_to_csv(trace))
    return EXIT_OK


def _format_dim(value, cap):
    return f">={cap}" if value is not None and value >= cap else str(value)


def _cmd_dims(args):
    cls = parse_class_spec(args.class_spec)
    cap = args.cap
    vc = vc_dimension(cls)
    ld = littlestone_dimension(cls, cap=cap)
    vd = vcl_depth(cls, cap=cap)
    sys.stdout.write(
        f"vc={vc}, littlestone={_format_dim(ld, cap)}, vcl_depth={_format_dim(vd, cap)}\n"
    )
    if args.witness:
        lines = []
        if ld:
            depth = min(ld, cap)
            tree = littlestone_witness(cls, depth)
            lines.append(f"# mistake-tree witness, depth {depth}")
            lines.append("bfs_index,parent,edge_pattern,points")
            index = {(): 1}
            counter = 1
            frontier = [()]
            while frontier:
                path = frontier.pop(0)
                if len(path) >= depth:
                    continue
                for b in (0, 1):
                    child = path + (b,)
                    if len(child) <= depth:
                        counter += 1
                        index[child] = counter
                        if len(child) < depth:
                            frontier.append(child)
                parent = index[path[:-1]] if path else 0
                edge = str(path[-1]) if path else ""
                lines.append(f"{index[path]},{parent},{edge},{tree.point_at(path)}")
        if vd:
            try:
                tree = build_vcl_adversary_tree(cls, min(vd, cap))
                lines.append(f"# reweighted tree witness, depth {tree.depth}")
                lines.append("bfs_index,parent,edge_pattern,points")
                for node in tree.nodes:
                    lines.append(
                        f"{node.index},{node.parent},{node.edge_pattern},"
                        + " ".join(node.points)
                    )
            except InfeasibleError:
                lines.append("# no reweighted tree witness at this depth")
        text = "\n".join(lines) + "\n"
        _write_or_print(text, args.out)
    return EXIT_OK


def _cmd_adversary(args):
    cls = parse_class_spec(args.class_spec)
    if args.kind == "littlestone":
        trace = littlestone_adversary(cls, args.T, args.seed)
    elif args.kind == "vcl":
        tree = build_vcl_adversary_tree(cls, args.depth)
        trace = vcl_adversary(tree, cls, args.seed)
    else:
        raise ConfigError(f"unknown adversary kind {args.kind!r}")
    _write_or_print(adversary_to_csv(trace), args.out)
    return EXIT_OK


def _cmd_experts(args):
    sets = [set_of_index(i) for i in range(1, args.max + 1)]
    if args.out:
        save_expert_pool(sets, args.out)
    else:
        for J in sets:
            sys.stdout.write(" ".join(str(j) for j in sorted(J)) + "\n")
    return EXIT_OK


def _cmd_check(args):
    cfg = _merged_config(args)
    class_spec = args.class_spec or cfg.get("class", {}).get("spec", "thresholds:7")
    if args.kind == "condition1":
        section = cfg.get("check_condition1", {})
        seeds = [int(s) for s in section.get("seeds_list", "").split()] or list(
            range(int(section.get("seeds", "5")))
        )
        report = check_condition1(
            cfg.get("learner", {"name": "soa"}),
            cfg.get("process", {}),
            class_spec,
            seeds,
            section.get("n_grid", "50 100 200 400").split(),
            envelope=float(section.get("envelope", "0.1")),
        )
    elif args.kind == "c2":
        section = cfg.get("check_c2", {})
        seeds = list(range(int(section.get("seeds", "5"))))
        report = check_c2(
            cfg.get("process", {}),
            section.get("partition", "singletons"),
            section.get("t_grid", "50 100 200 400").split(),
            seeds,
            threshold=float(section.get("threshold", "0.05")),
            class_spec=class_spec,
        )
    else:
        raise ConfigError(f"unknown check kind {args.kind!r}")
    if args.out:
        emit(report, args.format, args.out)
    else:
        sys.stdout.write(report_to_csv(report))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (ini-style key = value)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument(
        "--format", choices=("csv", "jsonl", "svg"), default="csv"
    )

    parser = argparse.ArgumentParser(
        prog="mistakelab",
        description="simulation lab for mistake-bounded online prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="run one trial")
    p_run.add_argument("--learner", help="soa|alg2|alg1|wm|squint|constant")
    p_run.add_argument("--class", dest="class_spec", help="class spec or file:PATH")
    p_run.add_argument("--T", type=int, default=None)
    p_run.add_argument("--rollouts", type=int, help="conditional rollouts per prediction")
    p_run.add_argument("--experts-max", type=int, help="aggregator pool size")
    p_run.set_defaults(func=_cmd_run)

    p_dims = sub.add_parser(
        "dims", parents=[common], help="dimensions of a concept class"
    )
    p_dims.add_argument("--class", dest="class_spec", required=True)
    p_dims.add_argument("--cap", type=int, default=16)
    p_dims.add_argument("--witness", action="store_true")
    p_dims.set_defaults(func=_cmd_dims)

    p_adv = sub.add_parser(
        "adversary", parents=[common], help="emit an adversary trace"
    )
    p_adv.add_argument("--kind", choices=("littlestone", "vcl"), required=True)
    p_adv.add_argument("--class", dest="class_spec", required=True)
    p_adv.add_argument("--T", type=int, default=10)
    p_adv.add_argument("--depth", type=int, default=2)
    p_adv.set_defaults(func=_cmd_adversary)

    p_exp = sub.add_parser(
        "experts", parents=[common], help="serialize a canonical flip-set pool"
    )
    p_exp.add_argument("--max", type=int, default=10)
    p_exp.set_defaults(func=_cmd_experts)

    p_check = sub.add_parser(
        "check", parents=[common], help="run a condition checker"
    )
    p_check.add_argument("--kind", choices=("condition1", "c2"), required=True)
    p_check.add_argument("--class", dest="class_spec")
    p_check.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = getattr(args, "seed", None)
    if seed is None:
        args.seed = 0 if args.command in ("adversary",) else None
    try:
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, EndOfStream) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvariantError, RealizabilityError, StateError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except MistakeLabError as exc:  # residual library errors are config-like
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
