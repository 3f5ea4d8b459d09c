"""verify: run the randomised lemma suites."""
import logging

from app.cli.runconfig import RunConfig
from app.config import EXIT_CODES
from app.core.io import to_json, write_json
from app.errors import ConfigError
from app.oracle.lemmas import SUITES, verify_all, verify_lemma

logger = logging.getLogger(__name__)


def cmd_verify(rc: RunConfig):
    suite = rc["suite"]
    if suite == "all":
        reports = verify_all(rc["trials"], rc.seed)
    elif suite in SUITES:
        reports = [verify_lemma(suite, rc["trials"], rc.seed)]
    else:
        raise ConfigError(f"unknown suite '{suite}', choose from all, {', '.join(SUITES)}")

    payload = {"reports": [r.to_dict() for r in reports], "passed": all(r.passed for r in reports)}
    rc.out.mkdir(parents=True, exist_ok=True)
    write_json(rc.out / "lemmas.json", payload, meta=rc.meta())
    if rc["json"]:
        print(to_json({**payload, "meta": rc.meta()}))
    else:
        for r in reports:
            print(f"{r.suite:10s} {'ok  ' if r.passed else 'FAIL'} max violation {r.max_violation:.3e}")

    summary = {r.suite: r.max_violation for r in reports}
    return (EXIT_CODES["ok"] if payload["passed"] else EXIT_CODES["violated"]), summary
