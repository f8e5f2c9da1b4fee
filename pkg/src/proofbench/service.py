"""Session-based HTTP interface for interactive proof construction.

Thin JSON wrapper over the engine and kernel: sessions hold a derivation
plus its branch tree, options are recomputed per request and validated
against a content hash so a stale index can never apply, and every
mutation bumps an optimistic-concurrency version.
"""

from __future__ import annotations

import hashlib
import json
import pathlib
import secrets
import threading
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import HTMLResponse

from . import evaluator, kernel
from .engine import EngineError, NotADisjunction, NotAnOption, Option, Session
from .equivalence import io_match
from .evaluator import Box, ExecError, Int, Rat, Vec
from .model import MachParams, ParseError, Statement, parse_statement
from .theory import FALSE, Theory, bundled_theory_names, load_bundled


def _statement_json(stmt: Statement | None) -> str:
    return FALSE if stmt is None else stmt.serialize()


def _line_json(ln, num):
    return {
        "number": num,
        "statement": _statement_json(ln.statement),
        "star": ln.star,
        "label": ln.label,
        "connections": list(ln.connections),
    }


def _option_json(opt: Option, index: int):
    return {
        "index": index,
        "statement": _statement_json(opt.conclusion),
        "label": opt.label,
        "connections": list(opt.connections),
        "provenance": opt.provenance,
        "rendered": opt.render(),
    }


def _options_hash(options) -> str:
    payload = json.dumps([o.render() for o in options]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class Workspace:
    """One session tree plus the per-session rule overlay."""

    id: str
    theory_name: str
    session: Session
    version: int = 0
    lemma_labels: list[str] = field(default_factory=list)

    def node(self, path: str) -> Session:
        node = self.session
        for part in [p for p in path.split(".") if p != ""]:
            try:
                node = node.children[int(part)]
            except (ValueError, IndexError):
                raise HTTPException(404, f"no branch {path!r}")
        return node

    def to_json(self):
        def node_json(s: Session):
            return {
                "lines": [_line_json(ln, i + 1) for i, ln in enumerate(s.lines)],
                "status": s.status,
                "split_at": s.split_at,
                "children": [node_json(c) for c in s.children],
            }

        return {
            "id": self.id,
            "theory": self.theory_name,
            "version": self.version,
            "lemmas": self.lemma_labels,
            "root": node_json(self.session),
        }

    def snapshot(self):
        def node_state(s: Session):
            return {
                "lines": [
                    {
                        "statement": _statement_json(ln.statement),
                        "star": ln.star,
                        "label": ln.label,
                        "connections": list(ln.connections),
                    }
                    for ln in s.lines
                ],
                "status": s.status,
                "split_at": s.split_at,
                "children": [node_state(c) for c in s.children],
            }

        overlay = [
            self.session.theory.rules[l].serialize() for l in self.lemma_labels
        ]
        return {
            "id": self.id,
            "theory": self.theory_name,
            "version": self.version,
            "lemmas": self.lemma_labels,
            "overlay": overlay,
            "root": node_state(self.session),
        }


def _restore_session(state, theory: Theory) -> Session:
    from .engine import SessionLine

    session = Session(theory=theory)
    for raw in state["lines"]:
        stmt = (
            None
            if raw["statement"] == FALSE
            else parse_statement(raw["statement"], theory.mach)
        )
        session.lines.append(
            SessionLine(
                stmt,
                raw["label"],
                tuple(raw["connections"]),
                raw["star"],
            )
        )
    session.status = state["status"]
    session.split_at = state["split_at"]
    session.children = [_restore_session(c, theory) for c in state["children"]]
    return session


def create_app(mach: MachParams | None = None, persist: str | None = None) -> FastAPI:
    app = FastAPI(title="proofbench", version="0.1.0")
    mach = mach or MachParams()
    lock = threading.Lock()
    theories: dict[str, Theory] = {}
    workspaces: dict[str, Workspace] = {}

    def theory(name: str) -> Theory:
        if name not in theories:
            if name not in bundled_theory_names():
                raise HTTPException(404, f"unknown theory {name!r}")
            theories[name] = kernel.corpus_theory(name, mach)
        return theories[name]

    def workspace(sid: str) -> Workspace:
        ws = workspaces.get(sid)
        if ws is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return ws

    def check_version(ws: Workspace, version) -> None:
        if version is not None and version != ws.version:
            raise HTTPException(409, f"version conflict: server at {ws.version}")

    def save_all():
        if not persist:
            return
        payload = [ws.snapshot() for ws in workspaces.values()]
        pathlib.Path(persist).write_text(json.dumps(payload, indent=1))

    def load_all():
        if not persist or not pathlib.Path(persist).is_file():
            return
        for state in json.loads(pathlib.Path(persist).read_text()):
            th = load_bundled(state["theory"], mach)
            for block in state.get("overlay", []):
                from .theory import parse_rule_blocks, parse_rule_record

                for kind, label, prem, concl in parse_rule_blocks(block):
                    if label not in th.rules:
                        th.store_rule(
                            parse_rule_record(kind, label, prem, concl, th.mach)
                        )
            ws = Workspace(
                state["id"],
                state["theory"],
                _restore_session(state["root"], th),
                state["version"],
                list(state.get("lemmas", [])),
            )
            workspaces[ws.id] = ws

    load_all()

    @app.get("/theories")
    def list_theories():
        return {"theories": bundled_theory_names()}

    @app.get("/theories/{name}")
    def theory_info(name: str):
        th = theory(name)
        return {
            "name": name,
            "atoms": sorted(th.atoms),
            "disjunctions": sorted(th.disjunctions),
            "constants": sorted(th.constants),
            "rules": [
                {"label": r.label, "kind": r.kind, "falsity": r.is_falsity}
                for r in th.rules.values()
            ],
        }

    @app.get("/theories/{name}/rules/{label}")
    def rule_info(name: str, label: str):
        th = theory(name)
        rule = th.rules.get(label)
        if rule is None:
            raise HTTPException(404, f"unknown rule {label!r}")
        return {
            "label": rule.label,
            "kind": rule.kind,
            "premise": [s.serialize() for s in rule.premise],
            "conclusion": _statement_json(rule.conclusion),
            "tcl": list(rule.tcl),
            "text": rule.serialize(),
        }

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        with lock:
            name = body.get("theory")
            if not name:
                raise HTTPException(422, "missing theory")
            th = theory(name).with_hooks({})
            try:
                premises = [
                    parse_statement(line, th.mach) for line in body.get("premises", [])
                ]
                session = Session.from_premises(th, premises)
            except (ParseError, EngineError) as exc:
                raise HTTPException(422, str(exc))
            sid = secrets.token_hex(8)
            ws = Workspace(sid, name, session)
            workspaces[sid] = ws
            save_all()
            return ws.to_json()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return workspace(sid).to_json()

    @app.get("/sessions/{sid}/options")
    def get_options(sid: str, branch: str = ""):
        ws = workspace(sid)
        node = ws.node(branch)
        options = node.options()
        return {
            "version": ws.version,
            "branch": branch,
            "hash": _options_hash(options),
            "options": [_option_json(o, i) for i, o in enumerate(options)],
        }

    @app.post("/sessions/{sid}/apply")
    def apply_option(sid: str, body: dict = Body(...)):
        with lock:
            ws = workspace(sid)
            check_version(ws, body.get("version"))
            node = ws.node(body.get("branch", ""))
            options = node.options()
            try:
                if "index" in body:
                    if body.get("hash") not in (None, _options_hash(options)):
                        raise HTTPException(409, "options changed; re-fetch")
                    try:
                        option = options[int(body["index"])]
                    except (IndexError, ValueError):
                        raise HTTPException(422, "bad option index")
                    node.apply(option)
                elif "literal" in body:
                    text = body["literal"].strip()
                    stmt, label, connections = _parse_literal(text, node.theory)
                    node.apply_statement(stmt, label, connections)
                else:
                    raise HTTPException(422, "apply needs an index or a literal")
            except NotAnOption as exc:
                raise HTTPException(422, f"NotAnOption: {exc}")
            except EngineError as exc:
                raise HTTPException(422, str(exc))
            ws.version += 1
            save_all()
            return ws.to_json()

    @app.post("/sessions/{sid}/split")
    def split_session(sid: str, body: dict = Body(...)):
        with lock:
            ws = workspace(sid)
            check_version(ws, body.get("version"))
            node = ws.node(body.get("branch", ""))
            try:
                node.split(int(body["line"]))
            except (KeyError, ValueError):
                raise HTTPException(422, "split needs a line number")
            except NotADisjunction as exc:
                raise HTTPException(422, f"NotADisjunction: {exc}")
            ws.version += 1
            save_all()
            return ws.to_json()

    @app.post("/sessions/{sid}/contract")
    def contract_session(sid: str, body: dict = Body(...)):
        with lock:
            ws = workspace(sid)
            check_version(ws, body.get("version"))
            node = ws.node(body.get("branch", ""))
            try:
                node.contract(int(body["line"]), body["lemmaA"], body["lemmaB"])
            except KeyError as exc:
                raise HTTPException(422, f"missing field {exc}")
            except EngineError as exc:
                raise HTTPException(422, str(exc))
            ws.version += 1
            save_all()
            return ws.to_json()

    @app.post("/sessions/{sid}/extract")
    def extract_session(sid: str, body: dict = Body(None)):
        with lock:
            body = body or {}
            ws = workspace(sid)
            node = ws.node(body.get("branch", ""))
            script = _session_script(
                node, body.get("label", "session"), body.get("kind", "theorem")
            )
            report = kernel.check_proof(script, node.theory)
            if not report.ok:
                bad = report.failure_lines()[0]
                raise HTTPException(422, f"line {bad.number}: {bad.message}")
            if report.redundant and not body.get("force"):
                return {
                    "extracted": False,
                    "redundant": report.redundant,
                    "support": report.support,
                }
            record, inner = kernel.extract_theorem(script, node.theory, force=True)
            stored = False
            if body.get("store"):
                if record.label in node.theory.rules:
                    raise HTTPException(422, f"duplicate label {record.label!r}")
                node.theory.store_rule(record)
                ws.lemma_labels.append(record.label)
                stored = True
            ws.version += 1
            save_all()
            return {
                "extracted": True,
                "stored": stored,
                "label": record.label,
                "text": record.serialize(),
                "tcl": list(record.tcl),
                "redundant": inner.redundant,
            }

    @app.post("/eval")
    def eval_program(body: dict = Body(...)):
        th = theory(body.get("theory", ""))
        try:
            program = tuple(
                parse_statement(line, th.mach) for line in body.get("program", [])
            )
            env = {k: _value_from_json(v) for k, v in body.get("env", {}).items()}
        except (ParseError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        try:
            out = evaluator.eval_program(program, env, th)
        except ExecError as exc:
            return {
                "ok": False,
                "error": exc.kind,
                "detail": exc.detail,
                "site": exc.site,
            }
        bindings = {
            k: _value_to_json(v) for k, v in out.items() if k not in th.constants
        }
        return {"ok": True, "bindings": bindings}

    @app.get("/", response_class=HTMLResponse)
    def index():
        page = _frontend_page()
        if page is None:
            return HTMLResponse(
                "<html><body><h1>proofbench service</h1>"
                "<p>No bundled frontend; the JSON API is live.</p></body></html>"
            )
        return HTMLResponse(page)

    app.state.workspaces = workspaces
    return app


def _parse_literal(text: str, theory: Theory):
    """Parse an `options.dat`-style line: statement, label, connection list."""
    from .model import scan_statement

    if text.startswith(FALSE):
        stmt, rest = None, text[len(FALSE) :].strip()
    else:
        stmt, rest = scan_statement(text, theory.mach)
    tokens = rest.split()
    if not tokens:
        raise NotAnOption("literal carries no justification")
    label = tokens[0]
    connections = ()
    tail = " ".join(tokens[1:])
    if tail.startswith("[") and tail.endswith("]"):
        connections = tuple(
            int(t) if t.isdigit() else t for t in tail[1:-1].split()
        )
    return stmt, label, connections


def _session_script(node: Session, label: str, kind: str) -> kernel.ProofScript:
    lines = []
    for i, ln in enumerate(node.lines, start=1):
        lines.append(
            kernel.ProofLine(i, ln.statement, ln.star, ln.label, tuple(ln.connections))
        )
    premises = tuple(
        ln.statement for ln in node.lines if ln.label is None and ln.statement
    )
    final = node.lines[-1]
    return kernel.ProofScript(
        kind if kind in ("theorem", "lemma") else "theorem",
        label,
        premises,
        final.statement,
        lines,
    )


def _value_from_json(raw):
    if isinstance(raw, bool):
        raise ValueError("booleans are not machine values")
    if isinstance(raw, int):
        return Int(raw)
    if isinstance(raw, list) and len(raw) == 2 and all(isinstance(x, list) for x in raw):
        return Box(tuple(raw[0]), tuple(raw[1]))
    if isinstance(raw, list):
        return Vec(tuple(raw))
    if isinstance(raw, dict) and "rat" in raw:
        return Rat(int(raw["rat"]))
    raise ValueError(f"bad value {raw!r}")


def _value_to_json(value):
    if isinstance(value, Int):
        return value.value
    if isinstance(value, Rat):
        return {"rat": value.units}
    if isinstance(value, Vec):
        return list(value.elements)
    if isinstance(value, Box):
        return [list(value.lo), list(value.hi)]
    return str(value)


def _frontend_page():
    root = pathlib.Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    page = root / "index.html"
    if page.is_file():
        return page.read_text()
    return None
