"""Protocol sessions: request handling, episode lifecycle, TCP transport."""

import json
import socket
import threading

import pytest

from puzzle_forge import GAME_IDS, GameId, MAX_LEVEL
from puzzle_forge.agents import oracle_transcript
from puzzle_forge.curriculum import CurriculumConfig
from puzzle_forge.games import generate_instance
from puzzle_forge.protocol import ProtocolServer, Session


def reset(session, game="sudoku", level=1, seed=0, **extra):
    return session.handle({"cmd": "reset", "game": game, "level": level, "seed": seed, **extra})


def test_reset_returns_prompt_and_id():
    session = Session()
    r = reset(session, game="zebra", level=2, seed=9)
    assert r["episode_id"] == "ep-0"
    assert r["game"] == "zebra"
    expected = generate_instance(GameId.ZEBRA, 2, 9)
    assert r["prompt"] == expected.prompt


def test_score_round_trip_all_games_and_levels():
    session = Session()
    for game in GAME_IDS:
        for level in range(1, MAX_LEVEL + 1):
            r = reset(session, game=game.value, level=level, seed=1)
            instance = generate_instance(game, level, 1)
            s = session.handle(
                {
                    "cmd": "score",
                    "episode_id": r["episode_id"],
                    "transcript": oracle_transcript(instance),
                }
            )
            assert s["r_final"] == 1, (game, level)
            assert s["cumulative"] == 2 * len(instance.solution) + 1


def test_score_releases_episode():
    session = Session()
    r = reset(session)
    assert session.handle({"cmd": "stats"})["open_episodes"] == 1
    session.handle({"cmd": "score", "episode_id": r["episode_id"], "transcript": ""})
    stats = session.handle({"cmd": "stats"})
    assert stats == {"open_episodes": 0, "served": 1}
    again = session.handle(
        {"cmd": "score", "episode_id": r["episode_id"], "transcript": ""}
    )
    assert again["error"] == "no_such_episode"


def test_errors_keep_session_alive():
    session = Session()
    assert session.handle({"cmd": "nope"})["error"] == "unknown_cmd"
    assert session.handle({})["error"] == "unknown_cmd"
    assert session.handle_line("not json")["error"] == "bad_json"
    assert session.handle_line("[1,2,3]")["error"] == "bad_request"
    assert reset(session, game="chess")["error"] == "bad_request"
    assert reset(session, level=9)["error"] == "bad_request"
    assert reset(session, seed=-1)["error"] == "bad_request"
    r = reset(session)
    assert r["episode_id"] == "ep-0"
    bad = session.handle({"cmd": "score", "episode_id": r["episode_id"]})
    assert bad["error"] == "bad_request"
    # the failed score kept the episode open
    assert session.handle({"cmd": "stats"})["open_episodes"] == 1


def test_curriculum_auto_mode_advances():
    config = CurriculumConfig(window=10, games=(GameId.GRAPH_CONNECTIVITY,))
    session = Session(curriculum_config=config, seed=3)
    levels = []
    for _ in range(25):
        r = session.handle({"cmd": "reset", "curriculum": "auto"})
        assert r["game"] == "graph_connectivity"
        levels.append(r["level"])
        instance = generate_instance(
            GameId.GRAPH_CONNECTIVITY, r["level"], r["seed"]
        )
        s = session.handle(
            {
                "cmd": "score",
                "episode_id": r["episode_id"],
                "transcript": oracle_transcript(instance),
            }
        )
        assert "curriculum_level" in s
    assert levels[0] == 1
    assert levels[-1] >= 2
    assert levels == sorted(levels)


def test_sessions_are_independent():
    a, b = Session(), Session()
    reset(a)
    assert a.handle({"cmd": "stats"})["open_episodes"] == 1
    assert b.handle({"cmd": "stats"})["open_episodes"] == 0


def request_over_socket(sock_file, sock, payload):
    sock.sendall((json.dumps(payload) + "\n").encode())
    return json.loads(sock_file.readline())


@pytest.fixture()
def tcp_server():
    server = ProtocolServer("127.0.0.1", 0, gamma=1.0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server.server_address
    finally:
        server.shutdown()
        server.server_close()


def test_tcp_round_trip(tcp_server):
    host, port = tcp_server
    with socket.create_connection((host, port), timeout=10) as sock:
        fh = sock.makefile("r", encoding="utf-8")
        r = request_over_socket(
            fh, sock, {"cmd": "reset", "game": "knights_knaves", "level": 1, "seed": 2}
        )
        assert r["episode_id"] == "ep-0"
        instance = generate_instance(GameId.KNIGHTS_KNAVES, 1, 2)
        assert r["prompt"] == instance.prompt
        s = request_over_socket(
            fh,
            sock,
            {
                "cmd": "score",
                "episode_id": r["episode_id"],
                "transcript": oracle_transcript(instance),
            },
        )
        assert s["r_final"] == 1
        bad = request_over_socket(fh, sock, {"cmd": "bogus"})
        assert bad["error"] == "unknown_cmd"
        stats = request_over_socket(fh, sock, {"cmd": "stats"})
        assert stats == {"open_episodes": 0, "served": 1}


def test_tcp_connections_get_separate_sessions(tcp_server):
    host, port = tcp_server
    with socket.create_connection((host, port), timeout=10) as s1:
        f1 = s1.makefile("r", encoding="utf-8")
        request_over_socket(f1, s1, {"cmd": "reset", "game": "sudoku", "level": 1, "seed": 0})
        with socket.create_connection((host, port), timeout=10) as s2:
            f2 = s2.makefile("r", encoding="utf-8")
            stats = request_over_socket(f2, s2, {"cmd": "stats"})
            assert stats["open_episodes"] == 0
