from hypothesis import HealthCheck, settings

# deterministic property tests: the suite doubles as an acceptance pipeline
settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")
