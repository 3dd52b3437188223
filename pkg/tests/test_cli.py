import json

import numpy as np
import pytest
from click.testing import CliRunner

from wssed import io
from wssed.cli import main
from wssed.core import ClassMap, PosteriorClip, TimeGrid

CM = ClassMap(("Dog", "Blender"))


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus(tmp_path, runner):
    res = runner.invoke(main, ["synth", "--out-dir", str(tmp_path / "c"), "--n-clips", "6", "--seed", "2019"])
    assert res.exit_code == 0, res.output
    return tmp_path / "c"


def write_clip(path, probs, clip_id="clip", factor=1):
    clip = PosteriorClip(clip_id, np.asarray(probs, dtype=float), TimeGrid(0.02, factor), CM)
    io.write_posterior(clip, path)
    return path


def test_synth_layout(corpus):
    assert len(list((corpus / "posteriors").glob("*.tsv"))) == 6
    assert len(io.read_annotations(corpus / "ground_truth.tsv")) == 6
    assert json.loads((corpus / "synth_spec.json").read_text())["seed"] == 2019


def test_synth_is_deterministic(tmp_path, runner):
    outs = []
    for name in ("a", "b"):
        runner.invoke(main, ["synth", "--out-dir", str(tmp_path / name), "--n-clips", "3", "--seed", "1"])
        outs.append(sorted(p.read_bytes() for p in (tmp_path / name).rglob("*") if p.is_file()))
    assert outs[0] == outs[1]


def test_decode_and_eval(corpus, tmp_path, runner):
    out = tmp_path / "pred.tsv"
    res = runner.invoke(main, ["decode", str(corpus / "posteriors"), "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["eval", "--ref", str(corpus / "ground_truth.tsv"), "--pred", str(out)])
    assert res.exit_code == 0, res.output
    report = json.loads(res.output[res.output.index("{"):])
    assert 0.0 <= report["macro_f1"] <= 1.0
    assert "macro F1" in res.output


def test_eval_of_truth_is_perfect(corpus, runner):
    gt = str(corpus / "ground_truth.tsv")
    res = runner.invoke(main, ["eval", "--ref", gt, "--pred", gt])
    report = json.loads(res.output[res.output.index("{"):])
    assert report["macro_f1"] == 1.0 and report["gap"] == 0.0


def test_decode_jobs_env_gives_same_output(corpus, tmp_path, runner):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    runner.invoke(main, ["decode", str(corpus / "posteriors"), "--out", str(a)])
    res = runner.invoke(main, ["decode", str(corpus / "posteriors"), "--out", str(b)],
                        env={"SED_DECODE_JOBS": "4"})
    assert res.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_median_erases_short_event(tmp_path, runner):
    probs = np.zeros((100, 2))
    probs[40:43, 0] = 1.0
    probs[10:90, 1] = 0.9
    src = write_clip(tmp_path / "clip.tsv", probs)
    out = tmp_path / "out.tsv"
    res = runner.invoke(main, ["decode", str(src), "--out", str(out), "--post", "median", "--omega", "51"])
    assert res.exit_code == 0, res.output
    events = io.read_annotations(out)["clip"]
    assert [e.label for e in events] == ["Blender"]
    res = runner.invoke(main, ["decode", str(src), "--out", str(out), "--post", "double"])
    assert sorted(e.label for e in io.read_annotations(out)["clip"]) == ["Blender", "Dog"]


def test_invalid_thresholds_exit_2(tmp_path, runner):
    src = write_clip(tmp_path / "clip.tsv", np.zeros((5, 2)))
    res = runner.invoke(main, ["decode", str(src), "--out", str(tmp_path / "o.tsv"),
                               "--phi-low", "0.8", "--phi-hi", "0.3"])
    assert res.exit_code == 2
    assert "phi_low" in res.output
    assert not (tmp_path / "o.tsv").exists()


def test_even_median_window_exit_2(tmp_path, runner):
    src = write_clip(tmp_path / "clip.tsv", np.zeros((5, 2)))
    res = runner.invoke(main, ["decode", str(src), "--out", str(tmp_path / "o.tsv"),
                               "--post", "median", "--omega", "4"])
    assert res.exit_code == 2 and "odd" in res.output


def test_out_of_range_posterior_exit_2(tmp_path, runner):
    bad = tmp_path / "bad.tsv"
    bad.write_text("frame\tDog\n0\t1.5\n")
    res = runner.invoke(main, ["decode", str(bad), "--out", str(tmp_path / "o.tsv")])
    assert res.exit_code == 2 and "bad.tsv" in res.output


def test_pool(tmp_path, runner):
    src = write_clip(tmp_path / "clip.tsv", [[0.0, 0.5], [0.0, 1.0]])
    res = runner.invoke(main, ["pool", str(src), "--kind", "ls"])
    assert res.exit_code == 0
    rows = [l.split("\t") for l in res.output.strip().splitlines()[1:]]
    got = {r[1]: float(r[2]) for r in rows}
    assert got == {"Dog": 0.0, "Blender": (0.25 + 1.0) / 1.5}


@pytest.mark.parametrize("kind", ["mm", "amm", "lp", "conv", "ls"])
def test_gradcheck(runner, kind):
    res = runner.invoke(main, ["gradcheck", "--kind", kind, "--trials", "20", "--seed", "3"])
    assert res.exit_code == 0, res.output
    report = json.loads(res.output)
    assert report["passed"] and report["trials"] == 20


def test_fuse(tmp_path, runner):
    a = write_clip(tmp_path / "a.tsv", [[0.2, 0.4]] * 4, factor=1)
    b = write_clip(tmp_path / "b.tsv", [[0.6, 0.0]] * 2, factor=2)
    out = tmp_path / "f.tsv"
    res = runner.invoke(main, ["fuse", str(a), str(b), "--out", str(out)])
    assert res.exit_code == 0, res.output
    fused = io.read_posterior(out)
    assert np.allclose(fused.probs, [[0.4, 0.2]] * 4)


def test_fuse_with_itself_is_identity(tmp_path, runner):
    a = write_clip(tmp_path / "a.tsv", np.random.default_rng(0).random((7, 2)))
    out = tmp_path / "f.tsv"
    runner.invoke(main, ["fuse", str(a), str(a), "--out", str(out)])
    assert np.array_equal(io.read_posterior(out).probs, io.read_posterior(a).probs)


def test_pipeline_matches_eval(corpus, tmp_path, runner):
    cfg = {
        "posteriors": "posteriors",
        "ground_truth": "ground_truth.tsv",
        "output": "pred.tsv",
        "report": "report.json",
        "post": {"method": "median", "omega": 51},
    }
    (corpus / "cfg.json").write_text(json.dumps(cfg))
    res = runner.invoke(main, ["pipeline", "--config", str(corpus / "cfg.json")])
    assert res.exit_code == 0, res.output
    report = json.loads((corpus / "report.json").read_text())
    ev_json = tmp_path / "eval.json"
    res = runner.invoke(main, ["eval", "--ref", str(corpus / "ground_truth.tsv"),
                               "--pred", str(corpus / "pred.tsv"), "--json", str(ev_json)])
    assert res.exit_code == 0
    assert json.loads(ev_json.read_text()) == report


def test_pipeline_flags_override_config(corpus, runner):
    cfg = {"posteriors": "posteriors", "ground_truth": "ground_truth.tsv", "output": "pred.tsv",
           "report": "r.json", "post": {"method": "median", "omega": 51}}
    (corpus / "cfg.json").write_text(json.dumps(cfg))
    runner.invoke(main, ["pipeline", "--config", str(corpus / "cfg.json"), "--post", "double", "--omega", "1"])
    dt = json.loads((corpus / "r.json").read_text())
    runner.invoke(main, ["pipeline", "--config", str(corpus / "cfg.json")])
    med = json.loads((corpus / "r.json").read_text())
    assert dt != med


def test_pipeline_bad_config_fails_before_writing(corpus, runner):
    cfg = {"posteriors": "posteriors", "ground_truth": "ground_truth.tsv", "output": "pred.tsv",
           "post": {"method": "double", "phi_low": 0.9, "phi_hi": 0.5}}
    (corpus / "cfg.json").write_text(json.dumps(cfg))
    res = runner.invoke(main, ["pipeline", "--config", str(corpus / "cfg.json")])
    assert res.exit_code == 2
    assert not (corpus / "pred.tsv").exists()


def test_pipeline_unknown_key(corpus, runner):
    (corpus / "cfg.json").write_text(json.dumps({"posterior": "x"}))
    res = runner.invoke(main, ["pipeline", "--config", str(corpus / "cfg.json")])
    assert res.exit_code == 2 and "unknown config keys" in res.output


def test_eval_buckets_file(corpus, tmp_path, runner):
    buckets = tmp_path / "b.json"
    from wssed.evaluation import DEFAULT_BUCKETS
    buckets.write_text(json.dumps({
        "short": [k for k, v in DEFAULT_BUCKETS.items() if v == "short"],
        "long": [k for k, v in DEFAULT_BUCKETS.items() if v == "long"],
    }))
    gt = str(corpus / "ground_truth.tsv")
    res = runner.invoke(main, ["eval", "--ref", gt, "--pred", gt, "--buckets", str(buckets)])
    assert res.exit_code == 0, res.output


def test_missing_input_file(runner, tmp_path):
    res = runner.invoke(main, ["eval", "--ref", str(tmp_path / "nope.tsv"), "--pred", str(tmp_path / "x")])
    assert res.exit_code == 2
