import copy
import json

import numpy as np
import pytest
from numpy import testing

from bodyschema.body import (DistortionMap, apply_distortion, link_length, load_body_spec,
                             parse_distortion, read_body_document, validate_model)
from bodyschema.errors import InvariantError, SpecError, StructuralError


@pytest.fixture
def arm_doc():
    return read_body_document("planar_arm")


def test_default_arm_loads_40_taxels(arm):
    size, shape = arm
    assert len(list(shape.all_taxels())) == 40
    assert shape.patches["forearm"].grid.rows == 10
    assert size.joint_ids == ("shoulder", "elbow", "wrist")


def test_default_arm_taxel_layout(arm):
    _, shape = arm
    patch = shape.patches["forearm"]
    assert patch.taxel(19).position == (120.0, 15.0, 0.0)
    xs = sorted({t.position[0] for t in patch.taxels})
    assert xs == [20.0 + 25.0 * i for i in range(10)]


def test_default_arm_valid(arm):
    assert validate_model(*arm) == []


def test_hand_valid(hand):
    assert validate_model(*hand) == []


def test_unknown_link_is_structural(arm_doc):
    arm_doc["skin_patches"].append({"link": "foot", "taxels": [{"id": 1, "xyz_mm": [0, 0, 0]}]})
    with pytest.raises(StructuralError, match="foot"):
        load_body_spec(arm_doc)


def test_limits_excluding_zero(arm_doc):
    arm_doc["joints"][1]["limits_rad"] = [0.5, 1.0]
    with pytest.raises(InvariantError, match="elbow"):
        load_body_spec(arm_doc)


def test_cycle_is_structural(arm_doc):
    arm_doc["joints"].append({"id": "loop", "parent": "hand", "child": "upper_arm",
                              "axis": [0, 0, 1]})
    with pytest.raises(StructuralError):
        load_body_spec(arm_doc)


def test_pure_cycle_detected(arm_doc):
    arm_doc["links"] += ["a", "b"]
    arm_doc["joints"] += [
        {"id": "ab", "parent": "a", "child": "b", "axis": [0, 0, 1]},
        {"id": "ba", "parent": "b", "child": "a", "axis": [0, 0, 1]},
    ]
    size, shape = load_body_spec(arm_doc, strict=False)
    kinds = {(v.kind, v.message) for v in validate_model(size, shape)}
    assert ("structural", "joint graph contains a cycle") in kinds
    with pytest.raises(StructuralError):
        load_body_spec(arm_doc)


def test_unreachable_link(arm_doc):
    arm_doc["links"].append("floating")
    size, shape = load_body_spec(arm_doc, strict=False)
    assert any("floating" in v.subject for v in validate_model(size, shape))


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["joints"][0].pop("axis"), "joints[0].axis"),
    (lambda d: d["joints"][1].__setitem__("axis", [0, 1]), "joints[1].axis"),
    (lambda d: d["joints"][1]["pre_transform"].__setitem__("xyz_mm", "x"),
     "joints[1].pre_transform.xyz_mm"),
    (lambda d: d["landmarks"]["wrist"].pop("link"), "landmarks.wrist.link"),
    (lambda d: d["skin_patches"][0]["grid"].pop("rows"), "skin_patches[0].grid.rows"),
    (lambda d: d.pop("links"), "links"),
])
def test_schema_errors_name_field(arm_doc, mutate, field):
    mutate(arm_doc)
    with pytest.raises(SpecError) as info:
        load_body_spec(arm_doc)
    assert info.value.field == field


def test_duplicate_taxel_reported(arm_doc):
    arm_doc["skin_patches"] = [{"link": "forearm", "taxels": [
        {"id": 7, "xyz_mm": [0, 0, 0]}, {"id": 7, "xyz_mm": [1, 0, 0]}]}]
    size, shape = load_body_spec(arm_doc, strict=False)
    report = validate_model(size, shape)
    assert len(report) == 1 and "7" in report[0].message


def test_dangling_landmark_reported(arm_doc):
    arm_doc["landmarks"]["ankle"] = {"link": "shin", "xyz_mm": [0, 0, 0]}
    size, shape = load_body_spec(arm_doc, strict=False)
    report = validate_model(size, shape)
    assert [v.subject for v in report] == ["landmark ankle"]


def test_non_unit_axis_reported(arm_doc):
    arm_doc["joints"][0]["axis"] = [0, 0, 2]
    size, shape = load_body_spec(arm_doc, strict=False)
    assert any("axis norm" in v.message for v in validate_model(size, shape))


def test_json_roundtrip_of_embedded_spec(arm_doc):
    again = load_body_spec(json.loads(json.dumps(arm_doc)))
    assert again == load_body_spec(arm_doc)


# -- distortion ---------------------------------------------------------------

def _taxel_array(shape):
    return np.array([t.position for t in shape.all_taxels()])


def test_identity_distortion(arm):
    size, shape = arm
    s2, sh2 = apply_distortion(size, shape, DistortionMap())
    assert s2 == size
    testing.assert_allclose(_taxel_array(sh2), _taxel_array(shape), atol=1e-12)


def test_forearm_length_scale(arm):
    size, shape = arm
    s2, _ = apply_distortion(size, shape, DistortionMap({"forearm": (0.75, 1.0, 1.0)}))
    assert link_length(s2, "forearm") == pytest.approx(187.5, abs=1e-12)
    assert link_length(s2, "upper_arm") == 300.0


def test_mediolateral_scale_on_taxel(arm):
    size, shape = arm
    _, sh2 = apply_distortion(size, shape, DistortionMap({"forearm": (1.0, 1.2, 1.0)}))
    testing.assert_allclose(sh2.patches["forearm"].taxel(19).position, (120, 18, 0), atol=1e-12)


def test_bias_recorded_not_applied(arm):
    size, shape = arm
    _, sh2 = apply_distortion(size, shape, DistortionMap(biases={"forearm": (8, 5, 0)}))
    assert sh2.patches["forearm"].bias == (8.0, 5.0, 0.0)
    assert sh2.patches["forearm"].taxels == shape.patches["forearm"].taxels


def test_nonpositive_scale_rejected(arm):
    with pytest.raises(InvariantError):
        apply_distortion(*arm, DistortionMap({"forearm": (0.0, 1.0, 1.0)}))
    with pytest.raises(InvariantError):
        parse_distortion({"links": {"forearm": {"normal": -1}}})


def test_parse_distortion_named_axes():
    d = parse_distortion({"links": {"forearm": {"proximodistal": 0.75}},
                          "patch_bias_mm": {"forearm": [8, 5, 0]}})
    assert d.scales["forearm"] == (0.75, 1.0, 1.0)
    assert d.biases["forearm"] == (8.0, 5.0, 0.0)


def test_distortion_composes_multiplicatively(hand, rng):
    size, shape = hand
    for _ in range(20):
        s1 = {l: tuple(rng.uniform(0.5, 1.5, 3)) for l in size.links}
        s2 = {l: tuple(rng.uniform(0.5, 1.5, 3)) for l in size.links}
        both = {l: tuple(a * b for a, b in zip(s1[l], s2[l])) for l in size.links}
        a = apply_distortion(*apply_distortion(size, shape, DistortionMap(s1)), DistortionMap(s2))
        b = apply_distortion(size, shape, DistortionMap(both))
        testing.assert_allclose(_taxel_array(a[1]), _taxel_array(b[1]), atol=1e-9)
        for ja, jb in zip(a[0].joints, b[0].joints):
            testing.assert_allclose(ja.pre_transform.translation, jb.pre_transform.translation,
                                    atol=1e-9)
        for name in size.landmarks:
            testing.assert_allclose(a[0].landmarks[name].offset, b[0].landmarks[name].offset,
                                    atol=1e-9)


def test_distortion_preserves_topology(hand, rng):
    size, shape = hand
    d = DistortionMap({l: tuple(rng.uniform(0.5, 1.5, 3)) for l in size.links},
                      {"hand": (1.0, 2.0, 0.0)})
    s2, sh2 = apply_distortion(size, shape, d)
    assert [(j.id, j.parent, j.child, j.axis, j.limits) for j in s2.joints] == \
        [(j.id, j.parent, j.child, j.axis, j.limits) for j in size.joints]
    assert {k: [t.id for t in p.taxels] for k, p in sh2.patches.items()} == \
        {k: [t.id for t in p.taxels] for k, p in shape.patches.items()}
    assert {k: v.link for k, v in s2.landmarks.items()} == \
        {k: v.link for k, v in size.landmarks.items()}


def test_distortion_does_not_mutate_input(arm):
    size, shape = arm
    before = copy.deepcopy((size, shape))
    apply_distortion(size, shape, DistortionMap({"forearm": (0.5, 2.0, 1.0)}, {"forearm": (1, 1, 1)}))
    assert (size, shape) == before
