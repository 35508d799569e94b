import json
import os

import pytest

from twinslit import cli, output
from twinslit.config import config_from_dict, parse_config, serialize_config
from twinslit.errors import ParseError, ValidationError

FAST_DOC = {
    "ensemble": {"n": 500, "mode": "constrained_com", "theory": "bqm"},
}


def _write_cfg(tmp_path, doc, out_name="out"):
    doc = dict(doc)
    doc["output_dir"] = str(tmp_path / out_name)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return p, doc["output_dir"]


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg.physical.sigma0 == 1.0
    assert cfg.ensemble.mode == "constrained_com"


def test_negative_sigma0_names_field():
    with pytest.raises(ValidationError, match="sigma0"):
        config_from_dict({"physical": {"sigma0": -1.0}})


def test_unknown_keys_rejected():
    with pytest.raises(ParseError, match="unknown"):
        parse_config('{"physics": {}}')
    with pytest.raises(ParseError, match="sigmaO"):
        parse_config('{"physical": {"sigmaO": 1.0}}')


def test_config_round_trip():
    cfg = config_from_dict({"physical": {"Y": 3.5, "ky": 0.2}})
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_malformed_json():
    with pytest.raises(ParseError):
        parse_config("{not json")


def test_simulate_bqm_constrained_outputs(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, FAST_DOC)
    assert cli.main(["simulate-bqm", "--config", str(cfg_path)]) == 0
    lines = open(os.path.join(out_dir, "arrivals.csv")).read().splitlines()
    assert lines[0] == "pair_id,right,left,same_side"
    assert len(lines) == 501
    assert all(line.rsplit(",", 1)[1] == "0" for line in lines[1:])
    hist = open(os.path.join(out_dir, "histogram_right.csv")).read().splitlines()
    assert hist[0] == "bin_left_edge,count"
    report = json.load(open(os.path.join(out_dir, "report.json")))
    assert report["same_side_count"] == 0
    assert report["same_side_probability_quadrature"] > 0
    assert "right_pattern_vs_born_tv" in report


def test_trajectories_output(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, {"ensemble": {"n": 5}})
    assert cli.main(["trajectories", "--config", str(cfg_path)]) == 0
    lines = open(os.path.join(out_dir, "trajectories.csv")).read().splitlines()
    assert lines[0] == "pair_id,t,y1,y2"
    assert len(lines) == 1 + 5 * 201


def test_selective_output(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, FAST_DOC)
    assert cli.main(["selective", "--config", str(cfg_path)]) == 0
    sel = json.load(open(os.path.join(out_dir, "selective.json")))
    assert sel["left_upper_fraction"] == 0.0
    assert sel["n_selected"] <= sel["n_total"]


def test_compare_output(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, FAST_DOC)
    assert cli.main(["compare", "--config", str(cfg_path)]) == 0
    report = json.load(open(os.path.join(out_dir, "report.json")))
    assert report["same_side_prob"]["bqm:constrained_com"] == 0.0
    assert report["same_side_prob"]["sqm"] > 0.0
    assert 0.0 <= report["tv_distance"] <= 1.0


def test_determinism_byte_identical(tmp_path):
    cfg_path, out_a = _write_cfg(tmp_path, FAST_DOC, "a")
    assert cli.main(["simulate-bqm", "--config", str(cfg_path)]) == 0
    assert cli.main(["simulate-bqm", "--config", str(cfg_path),
                     "--out", str(tmp_path / "b")]) == 0
    for name in ("arrivals.csv", "histogram_right.csv", "histogram_left.csv",
                 "report.json"):
        a = open(os.path.join(out_a, name), "rb").read()
        b = open(os.path.join(tmp_path / "b", name), "rb").read()
        assert a == b, name


def test_seed_override_changes_output(tmp_path):
    cfg_path, out_a = _write_cfg(tmp_path, FAST_DOC, "a")
    assert cli.main(["simulate-sqm", "--config", str(cfg_path)]) == 0
    assert cli.main(["simulate-sqm", "--config", str(cfg_path), "--seed", "1",
                     "--out", str(tmp_path / "b")]) == 0
    a = open(os.path.join(out_a, "arrivals.csv")).read()
    b = open(os.path.join(tmp_path / "b", "arrivals.csv")).read()
    assert a != b


def test_manifest_checksums_match(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, FAST_DOC)
    assert cli.main(["simulate-bqm", "--config", str(cfg_path)]) == 0
    manifest = json.load(open(os.path.join(out_dir, "manifest.json")))
    for name, digest in manifest["files"].items():
        assert output.sha256_file(os.path.join(out_dir, name)) == digest
    assert manifest["counts"]["accepted"] == 500


def test_plots_emitted_when_requested(tmp_path):
    cfg_path, out_dir = _write_cfg(tmp_path, FAST_DOC)
    assert cli.main(["simulate-bqm", "--config", str(cfg_path), "--plots"]) == 0
    manifest = json.load(open(os.path.join(out_dir, "manifest.json")))
    assert "histogram_right.png" in manifest["files"]
    assert os.path.exists(os.path.join(out_dir, "arrivals.png"))


def test_bad_config_exit_code(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"physical": {"sigma0": -1}}')
    assert cli.main(["validate", "--config", str(p)]) == 2
    assert cli.main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_validate_default_config(tmp_path):
    assert cli.main(["validate", "--out", str(tmp_path / "v")]) == 0
    report = json.load(open(tmp_path / "v" / "report.json"))
    assert report["all_passed"] is True
    assert all(c["passed"] for c in report["checks"])
