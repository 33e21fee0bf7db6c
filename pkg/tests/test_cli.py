import json
from pathlib import Path

import numpy as np
import pytest

from rfspec.cli import fmt, main
from rfspec.datastore import load_dataset, read_pgm

SCENES = Path(__file__).resolve().parents[1] / "scenes"
BOX = str(SCENES / "conference_box.yaml")
FREE = str(SCENES / "free_space.yaml")


def summary(path):
    text = Path(path).read_text().split("\n\n")[-1]
    return dict(line.split("\t") for line in text.strip().splitlines()[1:])


def test_fmt():
    assert fmt(1 / 3) == "0.333333333" and fmt(float("inf")) == "inf" and fmt(7) == "7"


def test_generate_count_and_manifest(tmp_path):
    out = tmp_path / "a.rfss"
    assert main(["generate", "--scene", FREE, "--count", "10", "--out", str(out)]) == 0
    assert len(load_dataset(out)) == 10
    man = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert man["command"] == "generate" and man["seeds"]["placement"] == 3
    for key in ("config", "inputs", "outputs", "tool_version", "duration_s"):
        assert key in man


def test_generate_is_deterministic_and_replayable(tmp_path):
    a, b = tmp_path / "a.rfss", tmp_path / "b.rfss"
    main(["generate", "--scene", BOX, "--count", "6", "--out", str(a), "--snr-db", "20", "--threads", "1"])
    main(["generate", "--scene", BOX, "--count", "6", "--out", str(b), "--snr-db", "20", "--threads", "4"])
    assert a.read_bytes() == b.read_bytes()
    first = a.read_bytes()
    a.unlink()
    assert main(["replay", str(a) + ".manifest.json"]) == 0
    assert a.read_bytes() == first


def test_generate_from_list(tmp_path):
    txt = tmp_path / "tx.txt"
    pts = np.array([[0.5, 0.5, 1.0], [1.0, -1.0, 0.5], [0.0, 1.5, 1.5]])
    np.savetxt(txt, pts)
    out = tmp_path / "l.rfss"
    assert main(["generate", "--scene", FREE, "--tx-list", str(txt), "--out", str(out)]) == 0
    assert np.array_equal(load_dataset(out).positions, pts)


def test_eval_coincident_target_gives_sentinel(tmp_path):
    txt = tmp_path / "tx.txt"
    np.savetxt(txt, np.array([[0.5, 0.5, 1.0]] * 2 + [[1.0, 1.0, 1.0]] * 2 + [[1.5, 0.2, 0.4]] * 6))
    data = tmp_path / "d.rfss"
    main(["generate", "--scene", FREE, "--tx-list", str(txt), "--out", str(data)])
    rep = tmp_path / "knn.tsv"
    assert main(["eval", "--dataset", str(data), "--method", "knn", "--L", "1", "--out", str(rep)]) == 0
    s = summary(rep)
    assert s["n_psnr_inf"] == s["n_targets"] == "2" and s["lpips"] == "unsupported"
    assert "inf" in rep.read_text().split("\n\n")[0]


@pytest.fixture(scope="module")
def free_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("free") / "f.rfss"
    main(["generate", "--scene", FREE, "--count", "150", "--out", str(out)])
    return out


def test_eval_method_ordering_on_free_space(free_dataset, tmp_path):
    means = {}
    for m in ("knn", "barycentric", "knndl"):
        rep = tmp_path / f"{m}.tsv"
        assert main(["eval", "--dataset", str(free_dataset), "--method", m, "--out", str(rep)]) == 0
        means[m] = float(summary(rep)["mean_psnr_db"])
    assert means["barycentric"] >= means["knn"]
    assert means["knndl"] > means["knn"]
    traces = (tmp_path / "knndl.tsv.traces.tsv").read_text().splitlines()
    assert len(traces) == 31 and len(traces[0].split("\t")) == 202


def test_eval_errors(free_dataset, tmp_path):
    out = str(tmp_path / "x.tsv")
    assert main(["eval", "--dataset", str(free_dataset), "--method", "gp", "--out", out]) == 2
    assert main(["eval", "--dataset", str(free_dataset), "--method", "knn", "--L", "500", "--out", out]) == 2
    assert main(["eval", "--dataset", str(tmp_path / "missing"), "--method", "knn", "--out", out]) == 3
    bad = tmp_path / "bad.rfss"
    bad.write_bytes(b"JUNKJUNK")
    assert main(["eval", "--dataset", str(bad), "--method", "knn", "--out", out]) == 3
    assert main(["generate", "--scene", FREE, "--count", "2", "--clearance", "3", "--out", out]) == 3


def test_theorem_command(tmp_path):
    for field, check in [("quadratic", lambda s: s["satisfaction_rate"] == "1"),
                         ("constant", lambda s: float(s["max_epsilon"]) < 1e-12),
                         ("freespace", lambda s: 3.5 <= float(s["ratio_median"]) <= 4.5)]:
        out = tmp_path / f"{field}.tsv"
        assert main(["theorem", "--field", field, "--trials", "20", "--out", str(out)]) == 0
        assert check(summary(out)), field
    assert main(["theorem", "--field", "quadratic", "--trials", "0", "--out", str(out)]) == 2


def test_obs1_command(tmp_path):
    out = tmp_path / "o.tsv"
    assert main(["obs1", "--scene", BOX, "--pairs", "40", "--out", str(out)]) == 0
    assert float(summary(out)["fraction_below_0.1m"]) >= 0.8
    assert main(["obs1", "--scene", FREE, "--pairs", "5", "--out", str(out)]) == 0
    assert out.read_text().startswith("# notice: no first-order reflection paths")
    assert summary(out)["n_distances"] == "0"


def test_render_and_split(free_dataset, tmp_path):
    img = tmp_path / "r.pgm"
    assert main(["render", "--dataset", str(free_dataset), "--index", "0", "--out", str(img)]) == 0
    px = read_pgm(img.read_bytes())
    assert px.shape == (90, 360) and px.max() == 65535
    assert main(["render", "--dataset", str(free_dataset), "--index", "150", "--out", str(img)]) == 2
    sp = tmp_path / "s.tsv"
    assert main(["split", "--dataset", str(free_dataset), "--out", str(sp)]) == 0
    rows = sp.read_text().splitlines()[1:]
    assert sum(r.endswith("train") for r in rows) == 120 and len(rows) == 150
