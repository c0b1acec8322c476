import json
import random

import pytest

import iotad

FIRST_LINE = (
    "0,tcp,http,SF,181,5450,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,8,8,0.00,0.00,0.00,0.00,"
    "1.00,0.00,0.00,9,9,1.00,0.00,0.11,0.00,0.00,0.00,0.00,0.00,normal."
)


def make_line(rng, kind):
    f = FIRST_LINE.split(",")
    if kind == "normal":
        f[4] = str(rng.randint(150, 400))
        f[5] = str(rng.randint(300, 9000))
    elif kind == "smurf":
        f[1], f[2], f[3] = "icmp", "ecr_i", "SF"
        f[4], f[5] = "1032", "0"
        f[22] = f[23] = "511"
        f[41] = "smurf."
    else:
        f[1], f[2], f[3] = "tcp", "private", "S0"
        f[4] = f[5] = "0"
        f[22] = str(rng.randint(100, 250))
        f[24] = f[25] = "1.00"
        f[41] = "neptune."
    return ",".join(f)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    rng = random.Random(3)
    kinds = ["normal"] * 120 + ["smurf"] * 90 + ["neptune"] * 60
    rng.shuffle(kinds)
    path = tmp_path_factory.mktemp("data") / "kdd.txt"
    path.write_text("\n".join(make_line(rng, k) for k in kinds) + "\n")
    return path


def test_parse_record_first_line():
    r = iotad.parse_record(FIRST_LINE)
    assert r["protocol_type"] == "tcp"
    assert r["service"] == "http"
    assert r["category"] == "Normal"
    assert len(r["numeric"]) == 38
    assert iotad.category_of("smurf") == "DoS"


def test_errors_carry_codes():
    with pytest.raises(iotad.IotadError) as info:
        iotad.parse_record("0,tcp,http")
    assert info.value.code == "WrongFieldCount"
    with pytest.raises(iotad.IotadError):
        iotad.config(knn__kk=3)


def test_sha256_and_percentile():
    assert iotad.sha256_hex(b"abc").startswith("ba7816bf")
    assert iotad.nearest_rank_percentile(list(range(1, 101)), 95) == 95


def test_metrics():
    cm = iotad.confusion([0, 1, 1, 0], [0, 1, 0, 0], 2)
    assert cm == [[2, 0], [1, 1]]
    m = iotad.metrics([0, 1, 1, 0], [0, 1, 0, 0], 2, "binary")
    assert m["accuracy"] == pytest.approx(0.75)
    assert m["recall"] == pytest.approx(0.5)


def test_ingest_summary(dataset, tmp_path):
    s = iotad.ingest(iotad.config(data=dataset, out=tmp_path))
    assert s["records"] == 270
    assert s["categories"]["DoS"] == 150
    assert json.loads((tmp_path / "ingest.json").read_text())["records"] == 270


def test_train_evaluate_score(dataset, tmp_path):
    cfg = iotad.config(data=dataset, out=tmp_path, model="knn", seed=2)
    summary = iotad.train(cfg)
    assert summary["model"] == "knn"
    report, text = iotad.evaluate(cfg, tmp_path / "bundle")
    assert report["accuracy"] > 0.9
    assert "vs reference knn" in text
    bundle = iotad.Bundle(str(tmp_path / "bundle"))
    assert bundle.kind == "knn"
    assert bundle.config_hash == cfg.hash()
    scored = bundle.score_lines([FIRST_LINE, "bad"])
    assert scored[0]["ok"] and scored[0]["predicted"] == "Normal"
    assert not scored[1]["ok"]


def test_resolved_config_roundtrip():
    c = iotad.config(knn__k=7)
    assert "knn.k = 7" in c.resolved_text()
    assert "gan.lambda" in iotad.RunConfig.known_keys()
