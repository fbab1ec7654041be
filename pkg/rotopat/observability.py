from __future__ import annotations
import os
import sentry_sdk


def init_observability() -> bool:
    dsn = os.getenv("SENTRY_DSN", "").strip()
    if not dsn:
        return False
    sentry_sdk.init(dsn=dsn, traces_sample_rate=float(os.getenv("SENTRY_TRACES", "0.0")))
    return True


def report_exception(exc: BaseException) -> None:
    if os.getenv("SENTRY_DSN", "").strip():
        sentry_sdk.capture_exception(exc)
