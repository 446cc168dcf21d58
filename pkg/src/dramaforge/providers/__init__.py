from .base import (
    ROLES,
    Binding,
    FixtureStore,
    Provider,
    ProviderRegistry,
    load_role_config,
)
from .mocks import mock_suite, MockSuite

__all__ = [
    "ROLES",
    "Binding",
    "FixtureStore",
    "Provider",
    "ProviderRegistry",
    "load_role_config",
    "mock_suite",
    "MockSuite",
]
