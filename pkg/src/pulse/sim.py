"""CLI device emulator: replays a scripted interview (credential swipe,
timed speech lines, taps, stop) against the service API and renders the
device screen to the terminal.

Script format, one event per line, sorted by time:

    CARD <uid>            credential, exactly once, before any event
    I: <text> @<ms>       interviewer speech
    P: <text> @<ms>       participant speech
    TAP @<ms>             touch-sensor tap
    STOP @<ms>            end the interview

Virtual-clock mode advances time logically (no sleeping), so runs are
byte-deterministic and CI-fast; wall-clock mode sleeps scaled by --speed.
"""

from __future__ import annotations

import argparse
import re
import sys
import time
from dataclasses import dataclass

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_AUTH = 3
EXIT_NETWORK = 4

_AT_RE = re.compile(r"@(\S+)\s*$")


@dataclass(frozen=True)
class SimEvent:
    line_no: int
    at: int
    kind: str  # speech | tap | stop
    speaker: str | None = None  # "I" | "P"
    text: str | None = None


@dataclass
class SimScript:
    credential: str
    events: list[SimEvent]


class ScriptError(Exception):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def parse_script(text: str) -> SimScript:
    credential = None
    events: list[SimEvent] = []
    diagnostics: list[str] = []

    def parse_at(line: str, line_no: int) -> tuple[str, int | None]:
        m = _AT_RE.search(line)
        if not m:
            diagnostics.append(f"line {line_no}: missing @<ms> timestamp")
            return line, None
        raw = m.group(1)
        if not raw.isdigit():
            diagnostics.append(f"line {line_no}: malformed timestamp '@{raw}'")
            return line, None
        return line[: m.start()].rstrip(), int(raw)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("CARD "):
            if credential is not None:
                diagnostics.append(f"line {line_no}: duplicate CARD line")
            elif events:
                diagnostics.append(f"line {line_no}: CARD must precede all events")
            else:
                credential = line[5:].strip()
                if not credential:
                    diagnostics.append(f"line {line_no}: empty CARD uid")
            continue
        if credential is None:
            diagnostics.append(f"line {line_no}: event before CARD line")
        if line.startswith(("I:", "P:")):
            speaker = line[0]
            rest, at = parse_at(line[2:].strip(), line_no)
            if at is None:
                continue
            if not rest:
                diagnostics.append(f"line {line_no}: empty speech text")
                continue
            events.append(SimEvent(line_no, at, "speech", speaker=speaker, text=rest))
        elif line.startswith("TAP"):
            _, at = parse_at(line, line_no)
            if at is not None:
                events.append(SimEvent(line_no, at, "tap"))
        elif line.startswith("STOP"):
            _, at = parse_at(line, line_no)
            if at is not None:
                events.append(SimEvent(line_no, at, "stop"))
        else:
            diagnostics.append(f"line {line_no}: unrecognized line '{line}'")

    if credential is None:
        diagnostics.append("missing CARD credential line")
    for a, b in zip(events, events[1:]):
        if b.at < a.at:
            diagnostics.append(
                f"events out of order: line {b.line_no} (t={b.at}) "
                f"before line {a.line_no} (t={a.at})"
            )
    stops = [e for e in events if e.kind == "stop"]
    if len(stops) > 1:
        diagnostics.append(f"line {stops[1].line_no}: duplicate STOP")
    if stops and events and events[-1].kind != "stop":
        diagnostics.append("events after STOP")
    if diagnostics:
        raise ScriptError(diagnostics)
    return SimScript(credential=credential, events=events)


def validate_script(path: str) -> list[str]:
    """Syntactic and ordering check only; returns diagnostics (empty = ok)."""
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        return [str(exc)]
    try:
        parse_script(text)
    except ScriptError as exc:
        return exc.diagnostics
    return []


def _fmt_elapsed(ms: int) -> str:
    s = ms // 1000
    return f"{s // 60:02d}:{s % 60:02d}"


def render_screen(t: int, state: str, mode: str | None, elapsed: int | None,
                  snapshot: dict | None) -> str:
    """Fixed plain-text template so transcripts diff cleanly."""
    lines = [
        f"== t={t}ms  state={state}  mode={mode or '-'}  "
        f"timer={_fmt_elapsed(elapsed) if elapsed is not None else '--:--'} =="
    ]
    if mode == "Summary" and snapshot:
        lines.append("SUMMARY:")
        lines.append(f"  {snapshot.get('summary', '')}")
        for point in snapshot.get("key_points", []):
            lines.append(f"  * {point}")
    elif mode == "FollowUps" and snapshot:
        lines.append("FOLLOW-UP QUESTIONS:")
        for i, q in enumerate(snapshot.get("follow_up_questions", []), start=1):
            lines.append(f"  {i}. {q}")
    return "\n".join(lines)


class SimRunner:
    """Drives one scripted interview against the API. The HTTP client is
    injectable so tests run in-process."""

    def __init__(self, client, out=None):
        self.client = client
        self.out = out if out is not None else sys.stdout
        self.screens: list[str] = []

    def _emit(self, screen: str) -> None:
        self.screens.append(screen)
        print(screen, file=self.out)

    def _check(self, response, *codes):
        if response.status_code not in codes:
            body = response.json()
            raise RuntimeError(
                f"unexpected {response.status_code}: {body.get('error', body)}"
            )
        return response.json()

    def run(self, script: SimScript, speed: float | None = None) -> dict:
        """Returns {'session_id', 'final_snapshot_version', 'screens'}."""
        resp = self.client.post("/v1/sessions", json={"credential": script.credential})
        if resp.status_code == 401:
            raise PermissionError("credential denied")
        created = self._check(resp, 201)
        session_id, token = created["session_id"], created["token"]
        headers = {"X-Session-Token": token}

        start_at = script.events[0].at if script.events else 0
        self._check(
            self.client.post(
                f"/v1/sessions/{session_id}/transition",
                json={"event": "start", "at": start_at},
                headers=headers,
            ),
            200,
        )
        self._emit(render_screen(start_at, "Recording", None, 0, None))

        state = "Recording"
        mode = None
        snapshot = None
        seq = 0
        prev_t = start_at
        final_version = 0
        speaker_map = {"I": "Interviewer", "P": "Participant"}

        for event in script.events:
            if speed is not None and event.at > prev_t:
                time.sleep((event.at - prev_t) / 1000.0 / speed)
            prev_t = event.at
            if event.kind == "speech":
                result = self._check(
                    self.client.post(
                        f"/v1/sessions/{session_id}/chunks",
                        json={
                            "seq": seq,
                            "text": event.text,
                            "speaker": speaker_map[event.speaker],
                            "t_start": event.at,
                            "t_end": event.at,
                        },
                        headers=headers,
                    ),
                    200,
                )
                seq += 1
                # A chunk arrival can expire a pending single tap.
                if result["resolved"]:
                    mode = result["mode"]
                    if result["snapshot_version"]:
                        final_version = result["snapshot_version"]
                        snapshot = self._latest_snapshot(session_id, token)
                    self._emit(render_screen(event.at, state, mode, event.at - start_at, snapshot))
            elif event.kind == "tap":
                result = self._check(
                    self.client.post(
                        f"/v1/sessions/{session_id}/taps",
                        json={"at": event.at},
                        headers=headers,
                    ),
                    200,
                )
                if result["resolved"]:
                    mode = result["mode"]
                    if result["snapshot_version"]:
                        final_version = result["snapshot_version"]
                        snapshot = self._latest_snapshot(session_id, token)
                    self._emit(render_screen(event.at, state, mode, event.at - start_at, snapshot))
            elif event.kind == "stop":
                self._check(
                    self.client.post(
                        f"/v1/sessions/{session_id}/transition",
                        json={"event": "stop", "at": event.at},
                        headers=headers,
                    ),
                    200,
                )
                state = "Ended"
                snapshot, version, mode2 = self._poll_final(session_id, token)
                if version:
                    final_version = version
                if mode2:
                    mode = mode2
                self._emit(render_screen(event.at, state, mode, event.at - start_at, snapshot))

        print(f"session: {session_id}", file=self.out)
        print(f"final snapshot version: {final_version}", file=self.out)
        return {
            "session_id": session_id,
            "final_snapshot_version": final_version,
            "screens": list(self.screens),
        }

    def _latest_snapshot(self, session_id, token) -> dict | None:
        snap, _, _ = self._read_events(session_id, token)
        return snap

    def _poll_final(self, session_id, token):
        return self._read_events(session_id, token)

    def _read_events(self, session_id, token):
        """Replay the committed event log for the latest snapshot and mode.
        Uses the resumable live stream like any other client would."""
        import json

        snapshot = None
        version = None
        mode = None
        with self.client.stream(
            "GET",
            f"/v1/sessions/{session_id}/live",
            params={"wait": "false"},
            headers={"X-Session-Token": token},
        ) as resp:
            if resp.status_code != 200:
                return None, None, None
            for line in resp.iter_lines():
                if not line.startswith("data: "):
                    continue
                data = json.loads(line[6:])
                if data["kind"] == "snapshot_ready":
                    snapshot = data["payload"]
                    version = data["payload"]["version"]
                elif data["kind"] == "mode_changed":
                    mode = data["payload"]["mode"]
        return snapshot, version, mode


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pulse-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="replay a script against a server")
    run_p.add_argument("--script", required=True)
    run_p.add_argument("--server", required=True)
    run_p.add_argument("--speed", type=float, default=None,
                       help="wall-clock speed multiplier")
    run_p.add_argument("--virtual-clock", action="store_true",
                       help="no sleeping; timestamps advance logically")
    run_p.add_argument("--seed", type=int, default=None)

    val_p = sub.add_parser("validate", help="check a script without a server")
    val_p.add_argument("--script", required=True)

    args = parser.parse_args(argv)

    if args.command == "validate":
        diagnostics = validate_script(args.script)
        if diagnostics:
            for d in diagnostics:
                print(d, file=sys.stderr)
            return EXIT_PARSE
        print("ok")
        return EXIT_OK

    try:
        script = parse_script(open(args.script, encoding="utf-8").read())
    except ScriptError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE

    import httpx

    speed = None if args.virtual_clock else (args.speed or 1.0)
    try:
        with httpx.Client(base_url=args.server, timeout=30.0) as client:
            runner = SimRunner(client)
            runner.run(script, speed=speed)
    except PermissionError:
        print("authentication denied", file=sys.stderr)
        return EXIT_AUTH
    except httpx.TransportError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
