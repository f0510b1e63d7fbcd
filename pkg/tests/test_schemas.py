import json
from fractions import Fraction as F
from pathlib import Path

import pytest

from optmech.duality import certify
from optmech.errors import InputError, StructuralError
from optmech.mechanisms.axis2 import axis2_mechanism
from optmech.mechanisms.axis3 import axis3_mechanism
from optmech.model import Axis2Setting, Axis3Setting, ValuePair, enumerate_types
from optmech.numerics import format_rational
from optmech.schemas import (
    certificate_to_document,
    dumps,
    flows_from_document,
    flows_to_document,
    load_json,
    mechanism_from_document,
    mechanism_to_document,
    setting_from_document,
    setting_to_document,
    supports_from_document,
)

VALUES = ValuePair(a=F(1), b=F(2))


def _axis3_doc(**overrides: object) -> dict:
    doc = {"schema": "optmech/setting/v1", "kind": "axis3", "n": 2, "a": 1, "b": 2, "p": "2/5", "q": "3/10"}
    return doc | overrides


def test_setting_document_round_trip() -> None:
    setting = setting_from_document(_axis3_doc())
    assert setting == Axis3Setting.build(2, VALUES, F(2, 5), F(3, 10))
    assert setting_to_document(setting) == _axis3_doc(a="1/1", b="2/1")


def test_setting_documents_keep_the_callers_order() -> None:
    swapped = Axis3Setting.build(2, VALUES, F(3, 10), F(2, 5))
    assert swapped.swapped
    assert (setting_to_document(swapped)["p"], setting_to_document(swapped)["q"]) == ("3/10", "2/5")
    axis2 = Axis2Setting.build(VALUES, [F(1, 5), F(4, 5), F(1, 2)])
    assert setting_to_document(axis2)["q"] == ["1/5", "4/5", "1/2"]


@pytest.mark.parametrize(
    ("doc", "message"),
    [
        ({"kind": "axis3"}, "schema"),
        (_axis3_doc(kind="axis9"), "kind"),
        ({k: v for k, v in _axis3_doc().items() if k != "p"}, "'p' is a required property"),
        (_axis3_doc(extra=1), "Additional properties"),
        (_axis3_doc(n=0), "n"),
        (_axis3_doc(p="3/2"), "p: must lie strictly between 0 and 1"),
        (_axis3_doc(p="0.4"), "p: decimals are not accepted"),
        (_axis3_doc(a=3), "values: need 0 < a < b"),
    ],
)
def test_invalid_settings_name_the_field(doc: dict, message: str) -> None:
    with pytest.raises(InputError, match=message):
        setting_from_document(doc)


def test_supports_default_delta_mass() -> None:
    doc = {"supports": [[1, 2], ["1/2", 3]], "probs": [["1/3", "2/3"], ["1/2", "1/2"]]}
    setting = supports_from_document(doc, F(4))
    assert setting.delta_mass == F(1, 3)
    assert setting.supports[1] == (F(1, 2), F(3))
    assert supports_from_document(doc | {"delta_mass": "1/4"}, F(4)).delta_mass == F(1, 4)


def test_mechanism_document_round_trip_in_callers_agent_order() -> None:
    mechanism = axis2_mechanism(Axis2Setting.build(VALUES, [F(1, 5), F(4, 5)]))
    doc = mechanism_to_document(mechanism.setting, mechanism.interim, mechanism.typespace)
    assert [entry["agent"] for entry in doc["agents"]] == [0, 1]
    # the caller's agent 0 has q = 1/5, which sits at position 1
    assert doc["agents"][0]["types"][0]["payment"] == format_rational(mechanism.interim.pay[1][(F(2), F(2))])
    setting, interim = mechanism_from_document(json.loads(dumps(doc)))
    assert setting == mechanism.setting
    assert [dict(t) for t in interim.pi] == [dict(t) for t in mechanism.interim.pi]
    assert [dict(t) for t in interim.pay] == [dict(t) for t in mechanism.interim.pay]


def test_swapped_axis3_documents_certify_after_reading_back() -> None:
    mechanism = axis3_mechanism(Axis3Setting.build(2, VALUES, F(3, 10), F(2, 5)))
    mech_doc = json.loads(dumps(mechanism_to_document(mechanism.setting, mechanism.interim, mechanism.typespace)))
    flow_doc = json.loads(dumps(flows_to_document(mechanism.setting, mechanism.flows())))
    pi_ab = mechanism.interim.pi[0][(F(1), F(2))]
    row = next(r for r in mech_doc["agents"][0]["types"] if r["type"] == ["2/1", "1/1"])
    assert row["pi"] == [format_rational(x) for x in reversed(pi_ab)]
    setting, interim = mechanism_from_document(mech_doc)
    flow_setting, flows = flows_from_document(flow_doc)
    assert setting == flow_setting == mechanism.setting
    assert certify(flows, interim, enumerate_types(setting)).optimal


def test_mechanism_document_needs_every_agent() -> None:
    mechanism = axis3_mechanism(Axis3Setting.build(2, VALUES, F(3, 5), F(3, 5)))
    doc = mechanism_to_document(mechanism.setting, mechanism.interim, mechanism.typespace)
    doc["agents"] = doc["agents"][:1]
    with pytest.raises(StructuralError, match="one entry per agent"):
        mechanism_from_document(doc)


def test_certificate_document_reports_the_callers_agent() -> None:
    mechanism = axis2_mechanism(Axis2Setting.build(VALUES, [F(1, 5), F(4, 5)]))
    top = (F(2), F(2))
    broken = mechanism.interim.with_payment(0, top, F(0))
    certificate = certify(mechanism.flows(), broken, mechanism.typespace)
    doc = certificate_to_document(certificate, mechanism.setting)
    assert doc["optimal"] is False
    assert doc["bic_ok"] is False
    assert doc["bic_witness"]["agent"] == 1
    assert doc["bic_witness"]["report"] == ["2/1", "2/1"]
    assert doc["setting"]["q"] == ["1/5", "4/5"]


def test_certificate_document_for_an_optimal_mechanism() -> None:
    mechanism = axis3_mechanism(Axis3Setting.build(2, VALUES, F(3, 5), F(3, 5)))
    doc = certificate_to_document(certify(mechanism.flows(), mechanism.interim, mechanism.typespace))
    assert doc["optimal"] is True
    assert doc["bic_witness"] is None and doc["bir_witness"] is None
    assert doc["loose_constraints"] == []
    assert doc["dual_objective"] == doc["mechanism_revenue"]
    assert "setting" not in doc


def test_dumps_is_byte_stable() -> None:
    mechanism = axis3_mechanism(Axis3Setting.build(2, VALUES, F(3, 5), F(1, 2)))
    text = dumps(mechanism_to_document(mechanism.setting, mechanism.interim, mechanism.typespace))
    assert text.endswith("}\n")
    assert dumps(json.loads(text)) == text
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_load_json_reports_bad_files(tmp_path: Path) -> None:
    path = tmp_path / "setting.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputError, match="not valid JSON"):
        load_json(path)
