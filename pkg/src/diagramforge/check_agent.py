"""Compile-debug loop plus model-backed completeness verification."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ModelUnavailable
from .gateway import ChatTurn, Gateway, ModelProfile
from .prompting import render
from .sandbox import Sandbox, parse_errors
from .types import CheckReport, CompileOutcome, DiagramCode, VerifyVerdict

log = logging.getLogger(__name__)

FEEDBACK_EXCERPTS = 5

# observer(agent, kind, payload_text) lets the workflow record events
Observer = Callable[[str, str, str], None]


def debug_round(code: DiagramCode, sandbox: Sandbox,
                observer: Optional[Observer] = None) -> tuple[CompileOutcome, str]:
    if observer:
        observer("sandbox", "request", code.source)
    outcome = sandbox.compile(code)
    if observer:
        observer("sandbox", "response",
                 f"status={outcome.status.value} artifact={outcome.artifact or ''}")
    if outcome.ok:
        return outcome, ""
    excerpts = parse_errors(outcome.log, code.language)[:FEEDBACK_EXCERPTS]
    feedback = "\n\n".join(excerpts) if excerpts else outcome.log[-2000:]
    return outcome, feedback


def verify(code: DiagramCode, context: str, judge: ModelProfile,
           gateway: Gateway,
           observer: Optional[Observer] = None) -> tuple[VerifyVerdict, list[str]]:
    prompt = render("verify", instruction=context, code=code.source)
    if observer:
        observer("check", "request", prompt)
    try:
        reply = gateway.complete(judge, [ChatTurn("user", prompt)])
    except ModelUnavailable as exc:
        log.warning("verification judge unavailable: %s", exc)
        if observer:
            observer("check", "error", str(exc))
        return VerifyVerdict.SKIPPED, []
    if observer:
        observer("check", "response", reply)
    first = reply.strip().split("\n")[0].strip()
    if first.upper() == "COMPLETE":
        return VerifyVerdict.COMPLETE, []
    if first.upper().startswith("MISSING:"):
        items = [p.strip() for p in first[len("MISSING:"):].split(",") if p.strip()]
        return VerifyVerdict.INCOMPLETE, items
    log.warning("unparseable judge reply %r; defaulting to complete", first[:80])
    return VerifyVerdict.COMPLETE, []


@dataclass
class CheckResult:
    code: DiagramCode
    report: CheckReport
    outcome: Optional[CompileOutcome]  # last successful compile, if any


def check_loop(
    producer: Callable[[str], DiagramCode],
    initial: DiagramCode,
    sandbox: Sandbox,
    max_rounds: int = 3,
    judge: Optional[ModelProfile] = None,
    gateway: Optional[Gateway] = None,
    verify_context: str = "",
    feedback_enabled: bool = True,
    observer: Optional[Observer] = None,
) -> CheckResult:
    """Compile-regenerate until success or the round budget runs out.

    An incomplete verification verdict buys exactly one extra producer
    round, so the loop performs at most max_rounds + 1 compilations.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    started = time.monotonic()
    report = CheckReport()
    current = initial
    outcome: Optional[CompileOutcome] = None
    ok_outcome: Optional[CompileOutcome] = None

    for round_no in range(1, max_rounds + 1):
        outcome, feedback = debug_round(current, sandbox, observer)
        report.rounds_used = round_no
        if outcome.ok:
            ok_outcome = outcome
            break
        report.error_excerpts.append(
            parse_errors(outcome.log, current.language)[:FEEDBACK_EXCERPTS]
        )
        if round_no < max_rounds:
            current = producer(feedback if feedback_enabled else "")

    report.compile_ok = ok_outcome is not None

    if report.compile_ok and judge is not None and gateway is not None:
        verdict, missing = verify(current, verify_context, judge, gateway, observer)
        report.verify_verdict = verdict
        report.missing_elements = missing
        if verdict is VerifyVerdict.INCOMPLETE:
            retry = producer("The diagram is missing: " + ", ".join(missing))
            retry_outcome, _ = debug_round(retry, sandbox, observer)  # the +1 compile
            if retry_outcome.ok:
                current = retry
                ok_outcome = retry_outcome
                verdict, missing = verify(current, verify_context, judge,
                                          gateway, observer)
                report.verify_verdict = verdict
                report.missing_elements = missing
    else:
        report.verify_verdict = VerifyVerdict.SKIPPED

    report.duration_s = time.monotonic() - started
    return CheckResult(code=current, report=report, outcome=ok_outcome)
