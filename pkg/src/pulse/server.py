"""``pulse-server`` entry point: configure from CLI/env and serve the API."""

from __future__ import annotations

import argparse
import os

from .api import create_app
from .service import ServiceConfig, SessionService
from .session import load_allowlist
from .store import Store


def build_app(
    store_path: str,
    allowlist_path: str | None = None,
    reader_key: str | None = None,
    admin_key: str | None = None,
    double_tap_window_ms: int = 400,
    max_questions: int = 3,
    word_budget: int = 60,
    deterministic_ids: bool = False,
):
    config = ServiceConfig(
        allowlist=load_allowlist(allowlist_path) if allowlist_path else set(),
        reader_key=reader_key or os.environ.get("PULSE_READER_KEY", "reader"),
        admin_key=admin_key or os.environ.get("PULSE_ADMIN_KEY", "admin"),
        double_tap_window_ms=double_tap_window_ms,
        max_questions=max_questions,
        word_budget=word_budget,
        deterministic_ids=deterministic_ids,
    )
    service = SessionService(Store(store_path), config)
    return create_app(service)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pulse-server")
    parser.add_argument("--store", default="./store")
    parser.add_argument("--allowlist", default=None)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--window-ms", type=int, default=400)
    parser.add_argument("--max-questions", type=int, default=3)
    parser.add_argument("--word-budget", type=int, default=60)
    parser.add_argument("--deterministic-ids", action="store_true")
    args = parser.parse_args(argv)

    import uvicorn

    app = build_app(
        args.store,
        allowlist_path=args.allowlist,
        double_tap_window_ms=args.window_ms,
        max_questions=args.max_questions,
        word_budget=args.word_budget,
        deterministic_ids=args.deterministic_ids,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
