"""Command line front end: gen, grade, simulate, serve, report.

Exit codes are stable for CI: 0 success, 2 generation failure, 3 budget
exhausted before an oracle run reached the top level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import sys

from . import games
from .agents import make_agent
from .core import (
    GAME_IDS,
    GameId,
    GenerationExhausted,
    MAX_LEVEL,
    ValidationError,
    canonical_json,
    instance_from_json,
    instance_to_json,
    mix,
    rng_from_seed,
)
from .curriculum import (
    CurriculumConfig,
    CurriculumState,
    maybe_advance,
    record_episode,
    sample_task,
    windowed_means,
)
from .reward import RewardConfig, grade, grading_record

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GENERATION = 2
EXIT_BUDGET = 3

_SIM_TASK_SALT = 0x51A7
_SIM_AGENT_SALT = 0xA6E7
_SIM_HOLDOUT_SALT = 0x801D


def _parse_games(text: str) -> tuple[GameId, ...]:
    if text == "all":
        return GAME_IDS
    out = []
    for name in text.split(","):
        name = name.strip()
        try:
            out.append(GameId(name))
        except ValueError:
            raise ValidationError(f"unknown game {name!r}")
    return tuple(out)


def _curriculum_config(args) -> CurriculumConfig:
    return CurriculumConfig(
        tau_int=args.tau_int,
        tau_final=args.tau_final,
        window=args.window,
        max_level=args.max_level,
        games=_parse_games(args.games) if hasattr(args, "games") else GAME_IDS,
    )


def cmd_gen(args) -> int:
    game = GameId(args.game)
    lines = []
    try:
        for i in range(args.count):
            instance = games.generate_instance(game, args.level, mix(args.seed, i))
            lines.append(instance_to_json(instance))
    except GenerationExhausted as exc:
        log.error("generation failed: %s", exc)
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    out = pathlib.Path(args.out)
    out.write_text("".join(line + "\n" for line in lines))
    index = {
        "game": game.value,
        "seed": args.seed,
        "count": args.count,
        "levels": {str(args.level): args.count},
    }
    out.with_name(out.name + ".index.json").write_text(
        canonical_json(index) + "\n"
    )
    log.info("wrote %d instances to %s", args.count, out)
    return EXIT_OK


def cmd_grade(args) -> int:
    index = {}
    with open(args.instances) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            instance = instance_from_json(line)
            index[(instance.game.value, instance.seed)] = instance
    records = []
    graded = []
    with open(args.transcripts) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
                key = (entry["game"], entry["seed"])
                raw = entry["transcript"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                records.append({"line": line_no, "error": f"bad transcript entry: {exc}"})
                continue
            if key not in index:
                records.append(
                    {"game": key[0], "seed": key[1], "error": "no matching instance"}
                )
                continue
            instance = index[key]
            config = RewardConfig(game=instance.game, gamma=args.gamma)
            breakdown = grade(raw, instance, config)
            records.append(grading_record(instance, breakdown, config))
            graded.append(breakdown)
    summary = {
        "summary": True,
        "count": len(graded),
        "errors": len(records) - len(graded),
        "mean_cumulative": (
            sum(b.cumulative for b in graded) / len(graded) if graded else None
        ),
        "mean_r_final": (
            sum(b.r_final for b in graded) / len(graded) if graded else None
        ),
    }
    records.append(summary)
    payload = "".join(canonical_json(r) + "\n" for r in records)
    if args.out:
        pathlib.Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _curriculum_config(args)
    state = CurriculumState(config)
    agent = make_agent(args.agent, epsilon=args.epsilon, delta=args.delta)
    reward_configs = {
        g: RewardConfig(game=g, gamma=args.gamma) for g in config.games
    }
    task_rng = rng_from_seed(mix(args.seed, _SIM_TASK_SALT))
    events = []
    episode = 0
    try:
        while episode < args.budget and not state.all_at_max(config):
            episode += 1
            game, level = sample_task(state, config, task_rng)
            instance_seed = task_rng.next_u64()
            instance = games.generate_instance(game, level, instance_seed)
            raw = agent(instance, mix(args.seed, mix(_SIM_AGENT_SALT, episode)))
            breakdown = grade(raw, instance, reward_configs[game])
            if args.holdout:
                held = games.generate_instance(
                    game, level, mix(instance_seed, _SIM_HOLDOUT_SALT)
                )
                held_raw = agent(
                    held, mix(args.seed, mix(_SIM_HOLDOUT_SALT, episode))
                )
                record_episode(state, game, grade(held_raw, held, reward_configs[game]))
            else:
                record_episode(state, game, breakdown)
            new_level, advanced = maybe_advance(state, game, config)
            if advanced:
                events.append(
                    {
                        "event": "advance",
                        "game": game.value,
                        "from": new_level - 1,
                        "to": new_level,
                        "episode": episode,
                    }
                )
            if args.snapshot_every and episode % args.snapshot_every == 0:
                events.append(
                    {
                        "event": "snapshot",
                        "episode": episode,
                        "levels": {g.value: state.levels[g] for g in config.games},
                        "means": {
                            g.value: list(windowed_means(state, g)[:2])
                            for g in config.games
                        },
                    }
                )
    except GenerationExhausted as exc:
        log.error("generation failed mid-run: %s", exc)
        print(f"generation failed mid-run: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    reached = state.all_at_max(config)
    events.append(
        {
            "event": "done",
            "episodes": episode,
            "levels": {g.value: state.levels[g] for g in config.games},
            "reached_max": reached,
        }
    )
    payload = "".join(canonical_json(ev) + "\n" for ev in events)
    if args.out:
        pathlib.Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    if args.agent == "oracle" and not reached:
        print(
            "budget exhausted before the oracle reached the top level",
            file=sys.stderr,
        )
        return EXIT_BUDGET
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import protocol

    config = _curriculum_config(args)
    if args.transport == "stdio":
        protocol.serve_stdio(
            gamma=args.gamma, curriculum_config=config, seed=args.seed
        )
        return EXIT_OK
    protocol.serve_tcp(
        args.host,
        args.port,
        gamma=args.gamma,
        curriculum_config=config,
        seed=args.seed,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_report

    written = render_report(args.run_log, args.out_dir)
    for path in written:
        print(path)
    return EXIT_OK


def _add_curriculum_flags(parser) -> None:
    parser.add_argument("--tau-int", type=float, default=0.8)
    parser.add_argument("--tau-final", type=float, default=0.7)
    parser.add_argument("--window", type=int, default=200)
    parser.add_argument("--max-level", type=int, default=MAX_LEVEL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puzzle-forge",
        description="Puzzle environments with verifiable rewards.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a JSONL dataset of instances")
    p.add_argument("--game", required=True, choices=[g.value for g in GAME_IDS])
    p.add_argument("--level", type=int, required=True, choices=range(1, MAX_LEVEL + 1))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("grade", help="grade transcripts against instances")
    p.add_argument("--instances", required=True)
    p.add_argument("--transcripts", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("simulate", help="closed-loop curriculum run")
    p.add_argument(
        "--agent",
        default="oracle",
        choices=["oracle", "noisy", "random", "silent"],
    )
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--games", default="all")
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--snapshot-every", type=int, default=500)
    p.add_argument(
        "--holdout",
        action="store_true",
        help="measure window accuracies on freshly drawn instances",
    )
    p.add_argument("--out", default=None)
    _add_curriculum_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="speak the environment protocol")
    p.add_argument("--transport", default="stdio", choices=["stdio", "tcp"])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--games", default="all")
    _add_curriculum_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="render figures and CSV from a run log")
    p.add_argument("--run-log", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PUZZLE_FORGE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
