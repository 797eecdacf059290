"""CLI contract: exit codes, output formats, determinism."""

import json

import pytest
import yaml as pyyaml

from conftest import CORPUS, run_cli


def corpus(rel: str) -> str:
    return str(CORPUS / rel)


# -- validate ---------------------------------------------------------------


def test_validate_get_started_exits_zero():
    code, out, _ = run_cli("validate", corpus("get-started.yaml"))
    assert code == 0
    assert out == "2 samples validated, 0 errors, 0 warnings\n"


def test_validate_missing_file_exits_two():
    code, out, err = run_cli("validate", "does-not-exist.yaml")
    assert code == 2
    assert "cannot read" in err
    assert out == ""


def test_usage_error_exits_two():
    code, _, _ = run_cli("validate")
    assert code == 2
    code, _, _ = run_cli()
    assert code == 2


def test_deleted_required_field_warns_by_default_fails_strict(tmp_path):
    raw = pyyaml.safe_load((CORPUS / "get-started.yaml").read_text())
    del raw["data"]["samples"][0]["label"]
    target = tmp_path / "mutated.yaml"
    target.write_text(pyyaml.safe_dump(raw))

    code, out, _ = run_cli("validate", str(target))
    assert code == 0
    assert "warning FIELD_MISSING samples/0/label" in out

    code, out, _ = run_cli("validate", "--strict", str(target))
    assert code == 1
    assert "error FIELD_MISSING samples/0/label" in out


def test_validate_error_exits_one(tmp_path):
    raw = pyyaml.safe_load((CORPUS / "get-started.yaml").read_text())
    raw["data"]["samples"][0]["label"] = 9
    target = tmp_path / "mutated.yaml"
    target.write_text(pyyaml.safe_dump(raw))
    code, out, _ = run_cli("validate", str(target))
    assert code == 1
    assert "error CLASS_INDEX_RANGE samples/0/label" in out


def test_validate_json_report_round_trips():
    code, text_out, _ = run_cli("validate", corpus("optional-label.yaml"))
    code_json, json_out, _ = run_cli("validate", "--format", "json", corpus("optional-label.yaml"))
    assert code == code_json == 0
    payload = json.loads(json_out)
    assert payload["sample_count"] == 4
    assert payload["errors"] == 0
    assert payload["warnings"] == 0
    assert payload["diagnostics"] == []
    assert "4 samples validated, 0 errors, 0 warnings" in text_out


def test_json_report_lists_every_text_diagnostic(tmp_path):
    raw = pyyaml.safe_load((CORPUS / "voc/train.yaml").read_text())
    raw["data"]["samples"][0]["objects"][0]["bbox"] = [1.0, 2.0, 3.0]
    target = tmp_path / "voc.yaml"
    target.write_text(pyyaml.safe_dump(raw))
    args = (str(target), "--library-path", corpus("voc"))
    code_t, text_out, _ = run_cli("validate", *args)
    code_j, json_out, _ = run_cli("validate", "--format", "json", *args)
    assert code_t == code_j == 1
    payload = json.loads(json_out)
    text_diag_lines = [l for l in text_out.splitlines() if l.startswith(("error", "warning", "note"))]
    assert len(payload["diagnostics"]) == len(text_diag_lines)
    for diag, line in zip(payload["diagnostics"], text_diag_lines):
        assert f"{diag['severity']} {diag['code']} {diag['path']}" in line
    assert payload["counts_by_code"] == {"ARITY": 1}


def test_repeated_runs_are_byte_identical():
    for args in (
        ("validate", corpus("voc/train.yaml")),
        ("inspect", corpus("voc/train.yaml")),
        ("summary", corpus("optional-label.yaml")),
        ("validate", "--format", "json", corpus("dota/set-train/train.yaml")),
    ):
        first = run_cli(*args)
        second = run_cli(*args)
        assert first == second


# -- inspect -----------------------------------------------------------------


def test_inspect_voc_expands_sample_type():
    code, out, _ = run_cli("inspect", corpus("voc/train.yaml"))
    assert code == 0
    assert "sample-type: ObjectDetectionSample[cdom=VOCClassDom]" in out
    assert "objects: List[etype=LocalObjectEntry[cdom=VOCClassDom], ordered=false]" in out
    assert "class_domain VOCClassDom (20 classes)" in out
    assert "20. cow" in out


def test_inspect_keypoints_shows_skeleton():
    code, out, _ = run_cli("inspect", corpus("keypoints/set-train/train.yaml"))
    assert code == 0
    assert "skeleton: [16, 14]," in out


def test_inspect_cycle_exits_one(tmp_path):
    target = tmp_path / "cycle.yaml"
    target.write_text(
        '$dsdl-version: "0.5.0"\n'
        "defs:\n"
        "  A:\n    $def: struct\n    $fields: {x: B}\n"
        "  B:\n    $def: struct\n    $fields: {y: A}\n"
    )
    code, out, _ = run_cli("inspect", str(target))
    assert code == 1
    assert "CYCLE_DETECTED" in out


def test_inspect_shows_provenance_of_winning_definition(tmp_path):
    (tmp_path / "liba.yaml").write_text(
        '$dsdl-version: "0.5.0"\nS:\n  $def: struct\n  $fields:\n    a: Int\n'
    )
    (tmp_path / "libb.yaml").write_text(
        '$dsdl-version: "0.5.0"\nS:\n  $def: struct\n  $fields:\n    b: Str\n'
    )
    target = tmp_path / "main.yaml"
    target.write_text('$dsdl-version: "0.5.0"\n$import: [liba, libb]\n')
    code, out, _ = run_cli("inspect", str(target), "--library-path", str(tmp_path))
    assert code == 0
    assert "warning IMPORT_OVERWRITE" in out
    assert out.count("IMPORT_OVERWRITE") == 1
    struct_line = next(l for l in out.splitlines() if l.strip().startswith("struct S"))
    assert "libb.yaml" in struct_line
    assert "b: Str" in out
    assert "a: Int" not in out


# -- resolve-loc ----------------------------------------------------------------


def test_resolve_loc_relative():
    code, out, _ = run_cli("resolve-loc", "abc/001.jpg", "--data-root", "/d")
    assert code == 0
    assert out == "relative -> /d/abc/001.jpg\n"


def test_resolve_loc_alias_flag():
    code, out, _ = run_cli("resolve-loc", "$m/x.jpg", "--alias", "m=/mnt")
    assert code == 0
    assert out == "alias -> /mnt/x.jpg\n"


def test_resolve_loc_alias_flag_beats_environment(monkeypatch):
    monkeypatch.setenv("DSDL_ALIAS_m", "/from-env")
    code, out, _ = run_cli("resolve-loc", "$m/x.jpg", "--alias", "m=/from-flag")
    assert code == 0
    assert out == "alias -> /from-flag/x.jpg\n"
    code, out, _ = run_cli("resolve-loc", "$m/x.jpg")
    assert code == 0
    assert out == "alias -> /from-env/x.jpg\n"


def test_resolve_loc_syntax_error_exits_one():
    code, out, _ = run_cli("resolve-loc", "::a::")
    assert code == 1
    assert "LOC_SYNTAX" in out


def test_resolve_loc_undefined_alias_exits_one():
    code, out, _ = run_cli("resolve-loc", "$nope/x.jpg")
    assert code == 1
    assert "ALIAS_UNDEFINED" in out


def test_resolve_loc_without_environment_classifies_only():
    code, out, _ = run_cli("resolve-loc", "abc/001.jpg")
    assert code == 0
    assert out.startswith("relative abc/001.jpg")
    code, out, _ = run_cli("resolve-loc", "::cuhk.ie::abcd1234xyz")
    assert code == 0
    assert out.startswith("object-id")


# -- summary ----------------------------------------------------------------------


def test_summary_get_started():
    code, out, _ = run_cli("summary", corpus("get-started.yaml"))
    assert code == 0
    assert "samples: 2" in out
    assert "MyClassDom::cat: 1" in out
    assert "MyClassDom::dog: 1" in out


def test_summary_fill_rates():
    code, out, _ = run_cli("summary", corpus("optional-label.yaml"))
    assert code == 0
    assert "ImageClassificationSample.label: 2/4" in out
    assert "relative: 4" in out


def test_summary_empty_samples(tmp_path):
    target = tmp_path / "empty.yaml"
    target.write_text(
        '$dsdl-version: "0.5.0"\n'
        "defs:\n  S:\n    $def: struct\n    $fields: {n: Int}\n"
        "data:\n  sample-type: S\n  sample-path: $local\n  samples: []\n"
    )
    code, out, _ = run_cli("summary", str(target))
    assert code == 0
    assert "samples: 0" in out


# -- config ------------------------------------------------------------------------


def test_show_config_prints_effective_settings(monkeypatch):
    monkeypatch.setenv("DSDL_LIBRARY_PATH", "/lib/a")
    code, out, _ = run_cli(
        "validate",
        corpus("get-started.yaml"),
        "--show-config",
        "--library-path",
        "/lib/b",
        "--data-root",
        "/data",
        "--alias",
        "m=/mnt",
    )
    assert code == 0
    assert "config:" in out
    assert "/lib/a" in out and "/lib/b" in out
    assert "data-root: /data" in out
    assert "m=/mnt" in out
