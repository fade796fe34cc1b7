"""Shared pytest configuration: deterministic property-based testing."""

from hypothesis import HealthCheck, settings

# The whole project is seeded-deterministic; keep the property tests that
# way too so a green suite stays green.
settings.register_profile(
    "deterministic",
    derandomize=True,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)
settings.load_profile("deterministic")
