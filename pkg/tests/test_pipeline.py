"""Workflow orchestration: routing, expansion, event ordering, persistence."""
import json

import pytest

from conftest import FIXTURES, scripted
from diagramforge.config import DEFAULT_EDIT_KEYWORDS
from diagramforge.errors import (
    AmbiguousQuery,
    CheckExhausted,
    ExpansionRejected,
    NoOriginal,
    SessionBusy,
    SessionNotFound,
)
from diagramforge.gateway import Gateway
from diagramforge.pipeline import (
    Pipeline,
    SessionManager,
    classify_task,
    expand_query,
    is_complete_query,
)
from diagramforge.types import SessionStatus, TaskKind, UserQuery

PNG = (FIXTURES / "sample_graph.png").read_bytes()


class TestClassify:
    def test_hint_wins(self):
        query = UserQuery(instruction="add a node", image=PNG,
                          task_hint=TaskKind.GENERATION)
        assert classify_task(query, DEFAULT_EDIT_KEYWORDS) is TaskKind.GENERATION

    def test_image_with_edit_keyword_is_editing(self):
        query = UserQuery(instruction="remove the second node", image=PNG)
        assert classify_task(query, DEFAULT_EDIT_KEYWORDS) is TaskKind.EDITING

    def test_image_without_keyword_is_coding(self):
        query = UserQuery(instruction="what is this", image=PNG)
        assert classify_task(query, DEFAULT_EDIT_KEYWORDS) is TaskKind.CODING

    def test_text_only_is_generation(self):
        query = UserQuery(instruction="draw a flowchart of tea brewing")
        assert classify_task(query, DEFAULT_EDIT_KEYWORDS) is TaskKind.GENERATION

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError):
            classify_task(UserQuery(instruction="  "), DEFAULT_EDIT_KEYWORDS)

    def test_model_disagreement_strict(self, tmp_path):
        path = tmp_path / "router.jsonl"
        path.write_text(json.dumps({"match": "", "reply": "EDITING"}) + "\n")
        profile = scripted("plan", "judge_complete.jsonl")
        profile.endpoint_url = f"scripted:{path}"
        query = UserQuery(instruction="draw a mind map")
        with pytest.raises(AmbiguousQuery):
            classify_task(query, DEFAULT_EDIT_KEYWORDS, model=profile,
                          gateway=Gateway(), strict=True)
        # non-strict: the structural route wins
        assert classify_task(query, DEFAULT_EDIT_KEYWORDS, model=profile,
                             gateway=Gateway()) is TaskKind.GENERATION


class TestExpansion:
    def test_complete_query_is_identity(self, tmp_path):
        text = ("Draw a flowchart with these nodes: " + "alpha beta " * 70)
        assert is_complete_query(text)
        profile = scripted("plan", "judge_complete.jsonl")
        assert expand_query(text, profile, Gateway()) == text

    def test_short_query_expanded(self, tmp_path):
        path = tmp_path / "plan.jsonl"
        path.write_text(json.dumps(
            {"match": "", "reply": "Draw Alpha connected to Beta with arrows."}
        ) + "\n")
        profile = scripted("plan", "judge_complete.jsonl")
        profile.endpoint_url = f"scripted:{path}"
        out = expand_query("connect Alpha and Beta", profile, Gateway())
        assert "Alpha" in out and len(out) > len("connect Alpha and Beta")

    def test_expansion_dropping_entities_rejected(self, tmp_path):
        path = tmp_path / "plan.jsonl"
        path.write_text(json.dumps(
            {"match": "", "reply": "Draw two connected boxes."}) + "\n")
        profile = scripted("plan", "judge_complete.jsonl")
        profile.endpoint_url = f"scripted:{path}"
        with pytest.raises(ExpansionRejected):
            expand_query('link "Gateway" to "Database"', profile, Gateway())


class TestGeneration:
    def test_success_records_version_and_events(self, pipeline):
        handle = pipeline.sessions.create()
        version = pipeline.run_generation(
            UserQuery(instruction="[R01] chain", task_hint=TaskKind.GENERATION),
            handle,
        )
        assert version.check.compile_ok
        assert version.image in pipeline.sessions.store
        agents = [e.agent.value for e in handle.state.events]
        assert agents[:2] == ["plan", "plan"]
        assert "code" in agents and "sandbox" in agents
        clocks = [e.at for e in handle.state.events]
        assert clocks == sorted(clocks) and len(set(clocks)) == len(clocks)
        assert handle.state.status is SessionStatus.IDLE

    def test_failure_raises_with_failed_version(self, pipeline):
        handle = pipeline.sessions.create()
        with pytest.raises(CheckExhausted) as exc_info:
            pipeline.run_generation(
                UserQuery(instruction="[R09] broken", task_hint=TaskKind.GENERATION),
                handle,
            )
        assert exc_info.value.version is not None
        assert not exc_info.value.version.check.compile_ok
        assert len(handle.state.versions) == 1
        assert handle.state.status is SessionStatus.IDLE

    def test_crash_marks_session_failed(self, pipeline, monkeypatch):
        handle = pipeline.sessions.create()
        monkeypatch.setitem(pipeline.config.models, "code", None)
        with pytest.raises(Exception):
            pipeline.run_generation(
                UserQuery(instruction="[R01] x", task_hint=TaskKind.GENERATION),
                handle,
            )
        assert handle.state.status is SessionStatus.FAILED


class TestCoding:
    def test_image_to_code(self, pipeline):
        handle = pipeline.sessions.create()
        code = pipeline.run_coding(
            UserQuery(instruction="", image=PNG, task_hint=TaskKind.CODING), handle
        )
        assert code.source.startswith("digraph")
        assert handle.latest_version().check.compile_ok


class TestEditing:
    def test_image_editing_stage_order(self, pipeline):
        """Eq. 3 order: diagram_to_code, then modification, then compile."""
        handle = pipeline.sessions.create()
        pipeline.config.models["code"] = scripted("code", "edit_dashed.jsonl")
        version = pipeline.run_editing(
            UserQuery(instruction="make the edge dashed", image=PNG,
                      task_hint=TaskKind.EDITING),
            handle,
        )
        assert version.check.compile_ok
        assert "dashed" in version.code.source
        agents = [e.agent.value for e in handle.state.events]
        d2c = agents.index("diagram_to_code")
        code_idx = agents.index("code", d2c)
        sandbox_idx = agents.index("sandbox", code_idx)
        assert d2c < code_idx < sandbox_idx

    def test_session_reuse_sets_created_from(self, pipeline):
        handle = pipeline.sessions.create()
        pipeline.run_generation(
            UserQuery(instruction="[R01] chain", task_hint=TaskKind.GENERATION),
            handle,
        )
        pipeline.config.models["code"] = scripted("code", "edit_dashed.jsonl")
        version = pipeline.run_editing(
            UserQuery(instruction="make the edge dashed",
                      task_hint=TaskKind.EDITING),
            handle,
        )
        assert version.created_from == 0
        assert len(handle.state.versions) == 2

    def test_empty_session_without_image(self, pipeline):
        handle = pipeline.sessions.create()
        with pytest.raises(NoOriginal):
            pipeline.run_editing(
                UserQuery(instruction="remove the node",
                          task_hint=TaskKind.EDITING),
                handle,
            )


class TestPersistence:
    def test_replay_reconstructs_state(self, pipeline, app_config, tmp_path):
        handle = pipeline.sessions.create()
        pipeline.run_generation(
            UserQuery(instruction="[R02] chain", task_hint=TaskKind.GENERATION),
            handle,
        )
        fresh = SessionManager(tmp_path / "data")
        replayed = fresh.get(handle.state.session_id)
        assert len(replayed.state.versions) == 1
        assert replayed.state.versions[0].code.source == (
            handle.state.versions[0].code.source
        )
        assert replayed.state.status is SessionStatus.IDLE
        assert [e.to_dict() for e in replayed.state.events] == (
            [e.to_dict() for e in handle.state.events]
        )

    def test_unclean_shutdown_replays_as_failed(self, pipeline, tmp_path):
        handle = pipeline.sessions.create()
        handle.set_status(SessionStatus.RUNNING)  # log ends mid-workflow
        fresh = SessionManager(tmp_path / "data")
        assert fresh.get(handle.state.session_id).state.status is SessionStatus.FAILED

    def test_unknown_session(self, tmp_path):
        with pytest.raises(SessionNotFound):
            SessionManager(tmp_path / "data").get("missing")

    def test_list_ids(self, pipeline):
        a = pipeline.sessions.create().state.session_id
        b = pipeline.sessions.create().state.session_id
        assert set(pipeline.sessions.list_ids()) == {a, b}


class TestSingleWriter:
    def test_busy_session_refused(self, pipeline):
        handle = pipeline.sessions.create()
        assert handle.lock.acquire(blocking=False)
        try:
            with pytest.raises(SessionBusy):
                pipeline.run_locked(handle, lambda: None)
        finally:
            handle.lock.release()

    def test_lock_released_after_run(self, pipeline):
        handle = pipeline.sessions.create()
        assert pipeline.run_locked(handle, lambda: 42) == 42
        assert handle.lock.acquire(blocking=False)
        handle.lock.release()
