import json

import numpy as np
import pandas as pd
import pytest

from chunglu_cutoff.data.models import ExperimentConfig, ExperimentKind, RunManifest
from chunglu_cutoff.utils.outputs import MANIFEST_NAME, OutputWriter, sha256_file, verify_manifest


@pytest.fixture
def writer(tmp_path):
    return OutputWriter(tmp_path / "run")


def test_csv_float_format(writer):
    path = writer.csv("values.csv", [{"a": 1 / 3, "b": 2}])
    assert path.read_text(encoding="utf-8") == "a,b\n0.333333333,2\n"


def test_csv_column_order(writer):
    frame = pd.DataFrame({"b": [1], "a": [2]})
    path = writer.csv("sub/ordered.csv", frame, columns=["a", "b"])
    assert path.read_text(encoding="utf-8").splitlines()[0] == "a,b"
    assert writer.records[-1].path == "sub/ordered.csv"


def test_json_and_jsonl(writer):
    writer.json("payload.json", {"x": np.arange(3)})
    path = writer.jsonl("runs.jsonl", [{"k": 1}, {"k": 2}])
    assert json.loads((writer.out_dir / "payload.json").read_text(encoding="utf-8")) == {"x": [0, 1, 2]}
    assert path.read_text(encoding="utf-8").splitlines() == ['{"k": 1}', '{"k": 2}']


def test_manifest_lists_outputs(writer):
    path = writer.csv("values.csv", [{"a": 1.0}])
    config = ExperimentConfig(experiment=ExperimentKind.STATS)
    manifest = writer.manifest(config, replica_seeds=[1, 2], started=0.0)
    assert manifest.config_digest == config.digest()
    assert manifest.outputs[0].sha256 == sha256_file(path)
    stored = RunManifest.model_validate_json((writer.out_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    assert stored.replica_seeds == [1, 2]
    assert stored.experiment == ExperimentKind.STATS


def test_verify_manifest_detects_changes(writer):
    path = writer.csv("values.csv", [{"a": 1.0}])
    writer.csv("other.csv", [{"b": 2.0}])
    writer.manifest(ExperimentConfig())
    assert verify_manifest(writer.out_dir) == []
    path.write_text("a\n2\n", encoding="utf-8")
    assert verify_manifest(writer.out_dir) == ["values.csv"]
    (writer.out_dir / "other.csv").unlink()
    assert verify_manifest(writer.out_dir) == ["values.csv", "other.csv"]
