"""Shared pytest fixtures for the optmech test suite."""

from fractions import Fraction as F

import pytest

from optmech.config import GUARD_OVERRIDE_ENV, Guards
from optmech.model import Axis1Setting, Axis2Setting, Axis3Setting, BundlingSetting, ValuePair


@pytest.fixture(autouse=True)
def _no_guard_override(monkeypatch: pytest.MonkeyPatch) -> None:
    """Tests run with the default size guards unless they lift them explicitly."""
    monkeypatch.delenv(GUARD_OVERRIDE_ENV, raising=False)


@pytest.fixture
def guards() -> Guards:
    return Guards()


@pytest.fixture
def values() -> ValuePair:
    return ValuePair(a=F(1), b=F(2))


@pytest.fixture
def axis1_setting(values: ValuePair) -> Axis1Setting:
    return Axis1Setting(n=2, m=2, values=values, p=F(1, 2))


@pytest.fixture
def axis2_setting(values: ValuePair) -> Axis2Setting:
    return Axis2Setting.build(values, [F(1, 3), F(4, 5), F(3, 5)])


@pytest.fixture
def axis3_setting(values: ValuePair) -> Axis3Setting:
    return Axis3Setting.build(2, values, F(3, 5), F(3, 5))


@pytest.fixture
def bundle_setting() -> BundlingSetting:
    """Two items on {1, 2} with fair masses, shifted by c = 4 (exactly the threshold)."""
    return BundlingSetting(
        c=F(4),
        supports=((F(1), F(2)), (F(1), F(2))),
        probs=((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))),
        delta_mass=F(1, 2),
    )
