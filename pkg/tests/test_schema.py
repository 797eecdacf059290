"""Schema model: definition building, builtin inventory, class lookup."""

import pytest

from dsdl import build_definitions, lookup_class, parse_document
from dsdl.diagnostics import ClassLookupError
from dsdl.schema import BUILTINS, ClassDomain, ClassRef, StructClass

from conftest import CORPUS


@pytest.fixture
def get_started_defs():
    doc = parse_document((CORPUS / "get-started.yaml").read_text(), format="yaml")
    return doc.defs


def test_build_get_started_definitions(get_started_defs):
    registry, diags = build_definitions(get_started_defs)
    assert diags == []
    dom = registry.get("MyClassDom")
    assert isinstance(dom, ClassDomain)
    assert dom.class_names() == ["dog", "cat", "fish", "tiger"]
    sample = registry.get("ImageClassificationSample")
    assert isinstance(sample, StructClass)
    assert list(sample.fields) == ["image", "label"]


def test_build_parametric_struct():
    raw = {
        "ObjectDetectionSample": {
            "$def": "struct",
            "$params": ["cdom"],
            "$fields": {
                "image": "Image",
                "objects": "List[etype=LocalObjectEntry[cdom=$cdom]]",
            },
        }
    }
    registry, diags = build_definitions(raw)
    assert diags == []
    struct = registry.get("ObjectDetectionSample")
    assert struct.params == ["cdom"]
    assert struct.fields["objects"].head == "List"


def test_optional_unknown_field_is_flagged():
    raw = {
        "S": {
            "$def": "struct",
            "$fields": {"label": "Str"},
            "$optional": ["labl"],
        }
    }
    registry, diags = build_definitions(raw)
    assert "S" not in registry
    assert [d.code for d in diags] == ["OPTIONAL_UNKNOWN_FIELD"]


def test_unbound_param_is_flagged_at_definition_time():
    raw = {
        "S": {"$def": "struct", "$fields": {"label": "Label[dom=$cdom]"}}
    }
    _, diags = build_definitions(raw)
    assert [d.code for d in diags] == ["UNBOUND_PARAM"]


def test_unknown_def_kind():
    _, diags = build_definitions({"S": {"$def": "enum", "values": []}})
    assert [d.code for d in diags] == ["UNKNOWN_DEF_KIND"]


def test_malformed_definitions():
    _, diags = build_definitions(
        {
            "NoFields": {"$def": "struct"},
            "NoClasses": {"$def": "class_domain"},
        }
    )
    assert [d.code for d in diags] == ["MALFORMED_DEF", "MALFORMED_DEF"]


def test_duplicate_class_paths_rejected():
    _, diags = build_definitions(
        {"D": {"$def": "class_domain", "classes": ["dog", "dog"]}}
    )
    assert [d.code for d in diags] == ["MALFORMED_DEF"]


def test_skeleton_bounds_are_validated():
    body = {"$def": "class_domain", "classes": ["a", "b"], "skeleton": [[1, 3]]}
    _, diags = build_definitions({"D": body})
    assert [d.code for d in diags] == ["MALFORMED_DEF"]
    body["skeleton"] = [[1, 1]]
    _, diags = build_definitions({"D": body})
    assert [d.code for d in diags] == ["MALFORMED_DEF"]
    body["skeleton"] = [[2, 1]]
    registry, diags = build_definitions({"D": body})
    assert diags == []
    assert registry.get("D").skeleton == [(2, 1)]


def test_definition_key_bracket_suffix_records_parents():
    raw = {
        "Desc[Base]": {"$def": "class_domain", "classes": ["nose[person]"]},
    }
    registry, diags = build_definitions(raw)
    assert diags == []
    dom = registry.get("Desc")
    assert dom.parents == ["Base"]
    assert dom.classes[0][0].name == "nose"
    assert dom.classes[0][0].parent == "person"


def test_field_spec_mapping_form():
    raw = {
        "S": {
            "$def": "struct",
            "$fields": {"label": {"$type": "Label", "dom": "MyClassDom"}},
        }
    }
    registry, diags = build_definitions(raw)
    assert diags == []
    expr = registry.get("S").fields["label"]
    assert expr.head == "Label"
    assert expr.args[0].key == "dom"


def test_build_definitions_is_idempotent(get_started_defs):
    first, _ = build_definitions(get_started_defs)
    second, _ = build_definitions(get_started_defs)
    assert first == second


def test_builtin_inventory():
    expected = {
        "Bool", "Int", "Num", "Str",
        "Coord", "Coord3D", "Interval", "BBox", "Polygon", "Date", "Time",
        "Label", "List",
        "Image", "Video", "Audio", "Text", "PointCloud", "LabelMap", "InstanceMap",
        "Keypoint", "RotatedBBox", "InstanceID", "UniqueID", "ImageShape",
    }
    assert set(BUILTINS) == expected
    assert [p.name for p in BUILTINS["List"].params] == ["etype", "ordered"]
    assert BUILTINS["RotatedBBox"].params[1].default == "radian"
    assert BUILTINS["Label"].params[0].required


@pytest.fixture
def my_class_dom(get_started_defs):
    registry, _ = build_definitions(get_started_defs)
    return registry.get("MyClassDom")


@pytest.fixture
def hierarchical_dom():
    raw = {
        "ClassDom": {
            "$def": "class_domain",
            "classes": [
                "vehicle.airplane",
                "food.apple",
                "accessory.backpack",
                "food.banana",
                "animal.bear",
                "vehicle.bicycle",
                "animal.bird",
                "vehicle.boat",
            ],
        }
    }
    registry, diags = build_definitions(raw)
    assert diags == []
    return registry.get("ClassDom")


def test_lookup_by_name(my_class_dom):
    # oracle: linear scan of the declared list, 1-based
    assert lookup_class(my_class_dom, "cat") == ClassRef("MyClassDom", (2,), "cat")


def test_lookup_by_index_matches_name(my_class_dom):
    assert lookup_class(my_class_dom, "2") == lookup_class(my_class_dom, "cat")
    assert lookup_class(my_class_dom, 2) == lookup_class(my_class_dom, "cat")


def test_lookup_unknown_name(my_class_dom):
    with pytest.raises(ClassLookupError) as exc:
        lookup_class(my_class_dom, "horse")
    assert exc.value.code == "CLASS_NOT_FOUND"


def test_lookup_index_out_of_range(my_class_dom):
    for bad in (0, 5, "9"):
        with pytest.raises(ClassLookupError) as exc:
            lookup_class(my_class_dom, bad)
        assert exc.value.code == "CLASS_INDEX_RANGE"


def test_hierarchical_name_lookup(hierarchical_dom):
    ref = lookup_class(hierarchical_dom, "vehicle.airplane")
    assert ref.path == "vehicle.airplane"
    assert len(ref.path.split(".")) == 2
    assert ref.index_path == (1, 1)


def test_hierarchical_index_path(hierarchical_dom):
    # distinct level-1 names in first-appearance order:
    # vehicle(1), food(2), accessory(3), animal(4)
    assert lookup_class(hierarchical_dom, "2.2") == lookup_class(hierarchical_dom, "food.banana")
    with pytest.raises(ClassLookupError) as exc:
        lookup_class(hierarchical_dom, "2.3")
    assert exc.value.code == "CLASS_INDEX_RANGE"


def test_flat_index_addresses_declared_order(hierarchical_dom):
    # the 4th declared class is food.banana regardless of hierarchy
    ref = lookup_class(hierarchical_dom, 4)
    assert ref.path == "food.banana"
    assert ref.index_path == (2, 2)


def test_unique_leaf_fallback(hierarchical_dom):
    assert lookup_class(hierarchical_dom, "backpack").path == "accessory.backpack"


def test_shared_leaf_requires_full_path():
    raw = {
        "D": {"$def": "class_domain", "classes": ["food.apple", "toy.apple"]}
    }
    registry, diags = build_definitions(raw)
    assert diags == []
    dom = registry.get("D")
    assert lookup_class(dom, "food.apple").index_path == (1, 1)
    with pytest.raises(ClassLookupError):
        lookup_class(dom, "apple")


def test_name_index_agreement_for_every_class(hierarchical_dom):
    for i, name in enumerate(hierarchical_dom.class_names(), start=1):
        assert lookup_class(hierarchical_dom, name) == lookup_class(hierarchical_dom, i)
