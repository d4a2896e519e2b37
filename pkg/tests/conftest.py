import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    import verdicts
    if verdicts.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(verdicts.LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
