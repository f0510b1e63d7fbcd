import math
from fractions import Fraction as F

import pytest

from optmech.config import Guards
from optmech.errors import GuardError, InputError, StructuralError
from optmech.mechanisms.axis1 import axis1_mechanism
from optmech.mechanisms.axis2 import axis2_mechanism
from optmech.mechanisms.axis3 import axis3_mechanism
from optmech.mechanisms.bundling import bundling_mechanism
from optmech.model import Axis1Setting, Axis2Setting, Axis3Setting, BundlingSetting, InterimMechanism, ValuePair
from optmech.verify.simulate import mc_simulate


def _within(result, mechanism: InterimMechanism, typespace) -> None:
    exact = float(mechanism.revenue(typespace))
    assert abs(result.revenue - exact) <= 4 * result.revenue_se + 1e-12
    for i, agent in enumerate(typespace.agents):
        for v in agent.types:
            count = result.counts[(i, v)]
            if count < 100:
                continue
            for estimate, truth in zip(result.pi[(i, v)], mechanism.pi[i][v], strict=True):
                spread = math.sqrt(float(truth * (1 - truth)) / count)
                assert abs(estimate - float(truth)) <= 5 * spread + 1e-9


def test_single_trial_has_no_standard_error(axis1_setting: Axis1Setting) -> None:
    mechanism = axis1_mechanism(axis1_setting)
    first = mc_simulate(mechanism.interim, mechanism.typespace, trials=1, seed=5)
    again = mc_simulate(mechanism.interim, mechanism.typespace, trials=1, seed=5)
    assert first.revenue == again.revenue
    assert math.isnan(first.revenue_se)


def test_same_seed_same_estimate(axis2_setting: Axis2Setting) -> None:
    mechanism = axis2_mechanism(axis2_setting)
    first = mc_simulate(mechanism.interim, mechanism.typespace, trials=2000, seed=3)
    again = mc_simulate(mechanism.interim, mechanism.typespace, trials=2000, seed=3)
    assert (first.revenue, first.revenue_se) == (again.revenue, again.revenue_se)


def test_posted_bundle_revenue_has_zero_spread(bundle_setting: BundlingSetting) -> None:
    mechanism = bundling_mechanism(bundle_setting)
    result = mc_simulate(mechanism.interim, mechanism.typespace, trials=500)
    assert result.revenue == 10
    assert result.revenue_se == 0


def test_rejects_bad_requests(axis1_setting: Axis1Setting) -> None:
    mechanism = axis1_mechanism(axis1_setting)
    with pytest.raises(InputError, match="trials"):
        mc_simulate(mechanism.interim, mechanism.typespace, trials=0)
    with pytest.raises(GuardError):
        mc_simulate(mechanism.interim, mechanism.typespace, trials=100, guards=Guards(mc_max_trials=10))
    bare = InterimMechanism(pi=mechanism.interim.pi, pay=mechanism.interim.pay)
    with pytest.raises(StructuralError):
        mc_simulate(bare, mechanism.typespace, trials=10)


def test_estimates_track_exact_values(
    axis1_setting: Axis1Setting, axis2_setting: Axis2Setting, axis3_setting: Axis3Setting
) -> None:
    for mechanism in (axis1_mechanism(axis1_setting), axis2_mechanism(axis2_setting), axis3_mechanism(axis3_setting)):
        result = mc_simulate(mechanism.interim, mechanism.typespace, trials=20_000, seed=17)
        _within(result, mechanism.interim, mechanism.typespace)


@pytest.mark.slow
@pytest.mark.parametrize(
    "build",
    [
        lambda: axis1_mechanism(Axis1Setting(n=3, m=3, values=ValuePair(a=F(1), b=F(2)), p=F(2, 5))),
        lambda: axis2_mechanism(Axis2Setting.build(ValuePair(a=F(1), b=F(2)), [F(1, 5), F(1, 2), F(4, 5)])),
        lambda: axis3_mechanism(Axis3Setting.build(3, ValuePair(a=F(1), b=F(2)), F(3, 5), F(1, 2))),
        lambda: axis3_mechanism(Axis3Setting.build(2, ValuePair(a=F(1), b=F(2)), F(9, 10), F(1, 10))),
        lambda: bundling_mechanism(
            BundlingSetting(
                c=F(4), supports=((F(1), F(2)), (F(1), F(2))), probs=((F(1, 2), F(1, 2)),) * 2, delta_mass=F(1, 2)
            )
        ),
    ],
    ids=["axis1", "axis2", "axis3", "axis3-variant-two", "bundling"],
)
def test_million_trials(build) -> None:
    mechanism = build()
    result = mc_simulate(mechanism.interim, mechanism.typespace, trials=1_000_000, seed=2024)
    _within(result, mechanism.interim, mechanism.typespace)
