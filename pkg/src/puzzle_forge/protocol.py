"""Line-delimited JSON environment protocol: reset, score, stats.

One session per connection. reset generates an instance and hands back
the prompt with an episode id; score grades a transcript against that
episode and releases it. Requests never kill a session: malformed input
gets an error object and the loop continues. A session asked to reset
with curriculum "auto" owns its own difficulty state and samples the
next task itself, so the caller can stay stateless.
"""

from __future__ import annotations

import json
import logging
import socketserver
import sys
from typing import IO

from . import games
from .core import (
    GameId,
    GenerationExhausted,
    MAX_LEVEL,
    PuzzleInstance,
    canonical_json,
    mix,
    rng_from_seed,
)
from .curriculum import (
    CurriculumConfig,
    CurriculumState,
    maybe_advance,
    record_episode,
    sample_task,
)
from .reward import RewardConfig, grade, grading_record

log = logging.getLogger(__name__)

_SESSION_SALT = 0x5E55


def _error(code: str, msg: str) -> dict:
    return {"error": code, "msg": msg}


class Session:
    """Protocol state for one client: open episodes plus counters."""

    def __init__(
        self,
        gamma: float = 1.0,
        curriculum_config: CurriculumConfig | None = None,
        seed: int = 0,
    ) -> None:
        self.gamma = gamma
        self.episodes: dict[str, PuzzleInstance] = {}
        self.counter = 0
        self.served = 0
        self.curriculum_config = curriculum_config or CurriculumConfig()
        self.curriculum: CurriculumState | None = None
        self._auto_rng = rng_from_seed(mix(seed, _SESSION_SALT))
        self._auto_episodes: set[str] = set()

    def handle_line(self, line: str) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error("bad_json", str(exc))
        if not isinstance(request, dict):
            return _error("bad_request", "request must be a JSON object")
        return self.handle(request)

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        if cmd == "reset":
            return self._reset(request)
        if cmd == "score":
            return self._score(request)
        if cmd == "stats":
            return {
                "open_episodes": len(self.episodes),
                "served": self.served,
            }
        return _error("unknown_cmd", f"unsupported cmd {cmd!r}")

    def _reset(self, request: dict) -> dict:
        auto = request.get("curriculum") == "auto"
        if auto:
            if self.curriculum is None:
                self.curriculum = CurriculumState(self.curriculum_config)
            game, level = sample_task(
                self.curriculum, self.curriculum_config, self._auto_rng
            )
            seed = request.get("seed", self._auto_rng.next_u64())
        else:
            try:
                game = GameId(request.get("game"))
            except ValueError:
                return _error("bad_request", f"unknown game {request.get('game')!r}")
            level = request.get("level", 1)
            seed = request.get("seed", 0)
        if not isinstance(level, int) or not 1 <= level <= MAX_LEVEL:
            return _error("bad_request", f"level must be 1..{MAX_LEVEL}")
        if not isinstance(seed, int) or seed < 0:
            return _error("bad_request", "seed must be a non-negative integer")
        try:
            instance = games.generate_instance(game, level, seed)
        except GenerationExhausted as exc:
            return _error("generation_failed", str(exc))
        episode_id = f"ep-{self.counter}"
        self.counter += 1
        self.episodes[episode_id] = instance
        if auto:
            self._auto_episodes.add(episode_id)
        return {
            "episode_id": episode_id,
            "prompt": instance.prompt,
            "game": game.value,
            "level": level,
            "seed": seed,
        }

    def _score(self, request: dict) -> dict:
        episode_id = request.get("episode_id")
        if episode_id not in self.episodes:
            return _error("no_such_episode", f"unknown episode {episode_id!r}")
        transcript = request.get("transcript")
        if not isinstance(transcript, str):
            return _error("bad_request", "transcript must be a string")
        instance = self.episodes.pop(episode_id)
        config = RewardConfig(game=instance.game, gamma=self.gamma)
        breakdown = grade(transcript, instance, config)
        self.served += 1
        response = grading_record(instance, breakdown, config)
        response["episode_id"] = episode_id
        if episode_id in self._auto_episodes:
            self._auto_episodes.discard(episode_id)
            assert self.curriculum is not None
            record_episode(self.curriculum, instance.game, breakdown)
            new_level, advanced = maybe_advance(
                self.curriculum, instance.game, self.curriculum_config
            )
            response["curriculum_level"] = new_level
            response["advanced"] = advanced
        return response


def serve_stream(
    session: Session, reader: IO[str], writer: IO[str]
) -> None:
    """Pump one session over text streams until EOF."""
    for line in reader:
        line = line.strip()
        if not line:
            continue
        response = session.handle_line(line)
        writer.write(canonical_json(response) + "\n")
        writer.flush()


def serve_stdio(
    gamma: float = 1.0,
    curriculum_config: CurriculumConfig | None = None,
    seed: int = 0,
) -> None:
    session = Session(gamma=gamma, curriculum_config=curriculum_config, seed=seed)
    serve_stream(session, sys.stdin, sys.stdout)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server = self.server  # type: ignore[assignment]
        session = Session(
            gamma=server.gamma,
            curriculum_config=server.curriculum_config,
            seed=server.session_seed,
        )
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = session.handle_line(line)
            payload = (canonical_json(response) + "\n").encode("utf-8")
            try:
                self.wfile.write(payload)
                self.wfile.flush()
            except BrokenPipeError:
                return


class ProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        host: str,
        port: int,
        gamma: float = 1.0,
        curriculum_config: CurriculumConfig | None = None,
        seed: int = 0,
    ) -> None:
        super().__init__((host, port), _Handler)
        self.gamma = gamma
        self.curriculum_config = curriculum_config
        self.session_seed = seed


def serve_tcp(
    host: str,
    port: int,
    gamma: float = 1.0,
    curriculum_config: CurriculumConfig | None = None,
    seed: int = 0,
    announce: IO[str] | None = None,
) -> None:
    server = ProtocolServer(
        host, port, gamma=gamma, curriculum_config=curriculum_config, seed=seed
    )
    bound_host, bound_port = server.server_address[:2]
    out = announce if announce is not None else sys.stdout
    out.write(f"listening on {bound_host}:{bound_port}\n")
    out.flush()
    log.info("serving on %s:%s", bound_host, bound_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
