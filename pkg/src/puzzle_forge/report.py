"""Render a simulation run log into figures and a summary table.

Input is the event JSONL that cmd_simulate writes: advancement events,
periodic accuracy snapshots, and a closing done event. Output is two
PNG figures (level trajectories, windowed accuracies) plus a CSV with
one row per game.
"""

from __future__ import annotations

import csv
import json
import pathlib

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import ValidationError


def _load_events(run_log: pathlib.Path) -> list[dict]:
    events = []
    for line_no, line in enumerate(run_log.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            events.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{run_log}:{line_no}: {exc}") from exc
    if not events:
        raise ValidationError(f"{run_log} holds no events")
    return events


def _level_tracks(events: list[dict]) -> dict[str, list[tuple[int, int]]]:
    """Per game: (episode, level) points, starting from level 1."""
    tracks: dict[str, list[tuple[int, int]]] = {}
    last_episode = 0
    for ev in events:
        if ev.get("event") == "advance":
            game = ev["game"]
            tracks.setdefault(game, [(0, ev["from"])])
            tracks[game].append((ev["episode"], ev["to"]))
        if "episode" in ev:
            last_episode = max(last_episode, ev["episode"])
        if ev.get("event") == "done":
            for game, level in ev.get("levels", {}).items():
                tracks.setdefault(game, [(0, 1)])
            last_episode = max(last_episode, ev.get("episodes", 0))
    for points in tracks.values():
        points.append((last_episode, points[-1][1]))
    return tracks


def _accuracy_tracks(events: list[dict]) -> dict[str, list[tuple[int, float, float]]]:
    tracks: dict[str, list[tuple[int, float, float]]] = {}
    for ev in events:
        if ev.get("event") != "snapshot":
            continue
        for game, means in ev.get("means", {}).items():
            tracks.setdefault(game, []).append(
                (ev["episode"], means[0], means[1])
            )
    return tracks


def render_report(run_log: str, out_dir: str) -> list[pathlib.Path]:
    """Write levels.png, accuracy.png and summary.csv; returns the paths."""
    log_path = pathlib.Path(run_log)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events = _load_events(log_path)
    levels = _level_tracks(events)
    accuracy = _accuracy_tracks(events)
    done = next((ev for ev in events if ev.get("event") == "done"), None)
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for game in sorted(levels):
        xs = [e for e, _ in levels[game]]
        ys = [d for _, d in levels[game]]
        ax.step(xs, ys, where="post", label=game)
    ax.set_xlabel("episode")
    ax.set_ylabel("level")
    ax.set_title("difficulty trajectory")
    if levels:
        ax.legend(fontsize=8)
    fig.tight_layout()
    levels_png = out / "levels.png"
    fig.savefig(levels_png, dpi=110)
    plt.close(fig)
    written.append(levels_png)

    fig, (ax_int, ax_final) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for game in sorted(accuracy):
        xs = [e for e, _, _ in accuracy[game]]
        ax_int.plot(xs, [a for _, a, _ in accuracy[game]], label=game)
        ax_final.plot(xs, [b for _, _, b in accuracy[game]], label=game)
    ax_int.set_ylabel("windowed step accuracy")
    ax_final.set_ylabel("windowed final accuracy")
    ax_final.set_xlabel("episode")
    ax_int.set_title("accuracy over the run")
    if accuracy:
        ax_int.legend(fontsize=8)
    fig.tight_layout()
    accuracy_png = out / "accuracy.png"
    fig.savefig(accuracy_png, dpi=110)
    plt.close(fig)
    written.append(accuracy_png)

    summary_csv = out / "summary.csv"
    final_levels = done.get("levels", {}) if done else {}
    games = sorted(set(levels) | set(accuracy) | set(final_levels))
    with summary_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["game", "final_level", "advancements", "last_a_int", "last_a_final"]
        )
        for game in games:
            advancements = max(0, len(levels.get(game, [])) - 2)
            last = accuracy.get(game, [])
            a_int = f"{last[-1][1]:.4f}" if last else ""
            a_final = f"{last[-1][2]:.4f}" if last else ""
            final_level = final_levels.get(
                game, levels.get(game, [(0, 1)])[-1][1]
            )
            writer.writerow([game, final_level, advancements, a_int, a_final])
    written.append(summary_csv)
    return written
