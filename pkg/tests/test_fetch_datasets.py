import configparser
import hashlib
import io
import zipfile

import pandas as pd
import pytest
import requests

import fetch_datasets
from qiforest.datasets import load_csv
from qiforest.errors import InvalidInput, IoError

RAW = b"id,a,b,y\n1,0.5,2,10\n2,1.5,?,20\n3,2.5,6,30\n"


def manifest_with(**entry):
    manifest = configparser.RawConfigParser()
    manifest.read_dict({"toy": {"url": "https://example.org/toy.csv", "sha256": "", **entry}})
    return manifest


def test_convert_drops_columns_and_missing_rows():
    frame = fetch_datasets.convert(RAW, {"target": "y", "drop": "id", "na": "?"})
    assert list(frame.columns) == ["a", "b", "target"]
    assert frame["target"].tolist() == [10.0, 30.0]


def test_convert_can_drop_incomplete_columns():
    frame = fetch_datasets.convert(RAW, {"target": "y", "drop": "id", "na": "?", "missing": "drop_columns"})
    assert list(frame.columns) == ["a", "target"]
    assert len(frame) == 3


def test_convert_headerless_with_ranges():
    payload = b"x;1;2;3;4\ny;5;6;7;8\n"
    frame = fetch_datasets.convert(payload, {"header": "false", "sep": ";", "target": "4", "drop": "0-1"})
    assert list(frame.columns) == ["2", "3", "target"]
    assert frame["target"].tolist() == [4.0, 8.0]


def test_convert_reads_zip_members():
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr("data/toy.csv", "a,y\n1,2\n3,4\n")
    frame = fetch_datasets.convert(buffer.getvalue(), {"member": "data/toy.csv", "target": "y"})
    assert frame["target"].tolist() == [2.0, 4.0]


def test_checksum_is_pinned_then_enforced():
    manifest = manifest_with()
    assert fetch_datasets.verify_checksum("toy", RAW, manifest) is True
    assert manifest.get("toy", "sha256") == hashlib.sha256(RAW).hexdigest()
    assert fetch_datasets.verify_checksum("toy", RAW, manifest) is False
    with pytest.raises(IoError):
        fetch_datasets.verify_checksum("toy", RAW + b"tampered", manifest)


class FakeResponse:
    def __init__(self, content, status=200):
        self.content = content
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.HTTPError(f"{self.status} error")


def test_fetch_writes_a_loadable_csv(tmp_path, monkeypatch):
    monkeypatch.setattr(fetch_datasets.requests, "get", lambda url, timeout: FakeResponse(RAW))
    manifest = manifest_with(target="y", drop="id", na="?")

    path = fetch_datasets.fetch("toy", manifest, str(tmp_path))
    dataset = load_csv(path, "target")
    assert dataset.name == "toy"
    assert dataset.x.shape == (2, 2)

    # present files are left alone unless forced
    monkeypatch.setattr(fetch_datasets.requests, "get", lambda url, timeout: FakeResponse(b"", 500))
    assert fetch_datasets.fetch("toy", manifest, str(tmp_path)) == path
    with pytest.raises(IoError):
        fetch_datasets.fetch("toy", manifest, str(tmp_path), force=True)


def test_fetch_reports_unconvertible_downloads(tmp_path, monkeypatch):
    monkeypatch.setattr(fetch_datasets.requests, "get", lambda url, timeout: FakeResponse(RAW))
    with pytest.raises(InvalidInput):
        fetch_datasets.fetch("toy", manifest_with(target="price"), str(tmp_path))


def test_main_pins_checksums(tmp_path, monkeypatch):
    monkeypatch.setattr(fetch_datasets.requests, "get", lambda url, timeout: FakeResponse(RAW))
    path = tmp_path / "manifest.ini"
    with open(path, "w", encoding="utf-8") as f:
        manifest_with(target="y", drop="id", na="?").write(f)

    code = fetch_datasets.main(["--manifest", str(path), "--out-dir", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "toy.csv").exists()
    pinned = configparser.RawConfigParser()
    pinned.read(path, encoding="utf-8")
    assert pinned.get("toy", "sha256") == hashlib.sha256(RAW).hexdigest()

    assert fetch_datasets.main(["--manifest", str(path), "unknown"]) == 1
    assert pd.read_csv(tmp_path / "out" / "toy.csv").shape == (2, 3)


def test_require_pinned_refuses_unpinned_entries(tmp_path, monkeypatch):
    def fail(url, timeout):
        raise AssertionError("nothing should be downloaded")

    monkeypatch.setattr(fetch_datasets.requests, "get", fail)
    with pytest.raises(IoError):
        fetch_datasets.fetch("toy", manifest_with(target="y"), str(tmp_path), require_pinned=True)

    monkeypatch.setattr(fetch_datasets.requests, "get", lambda url, timeout: FakeResponse(RAW))
    pinned = manifest_with(target="y", drop="id", na="?", sha256=hashlib.sha256(RAW).hexdigest())
    path = fetch_datasets.fetch("toy", pinned, str(tmp_path), require_pinned=True)
    assert load_csv(path, "target").n_samples == 2

    manifest_path = tmp_path / "manifest.ini"
    with open(manifest_path, "w", encoding="utf-8") as f:
        manifest_with(target="y").write(f)
    code = fetch_datasets.main(
        ["--manifest", str(manifest_path), "--out-dir", str(tmp_path / "strict"), "--require-pinned"]
    )
    assert code == 2
    assert not (tmp_path / "strict" / "toy.csv").exists()
