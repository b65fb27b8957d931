#!/usr/bin/env python
"""
Downloads the benchmark datasets listed in datasets/manifest.ini and converts
them to the CSV layout `qiforest bench --data datasets --target-col target`
expects: numeric feature columns followed by one column named "target".

Manifest sections are dataset slugs; keys:
    url      download location
    member   file inside a zip archive (optional)
    sep      field separator, a regex such as \\s+ for whitespace (default ,)
    header   whether the source has a header row (default true)
    na       extra token meaning "missing" (optional, e.g. ?)
    missing  drop_rows (default) or drop_columns
    target   target column, name or zero-based index
    drop     comma-separated columns to discard; indices may be ranges (5-9)
    sha256   checksum of the downloaded file; pinned on first download

A file whose checksum does not match its pinned sha256 is rejected. With
--require-pinned, entries without a sha256 are refused instead of pinned, so
checksums recorded elsewhere can be verified on the very first download.
"""

import argparse
import configparser
import hashlib
import io
import json
import os
import sys
import zipfile

import pandas as pd
import requests
from dotenv import load_dotenv

load_dotenv(".env")

from qiforest.errors import InvalidInput, IoError, QIForestError, problem_detail  # noqa: E402
from qiforest.structured_logger import get_logger, setup_structured_logging  # noqa: E402

logger = get_logger("qiforest.fetch")

MANIFEST_PATH = os.path.join("datasets", "manifest.ini")
TIMEOUT_SECONDS = 60


def load_manifest(path=MANIFEST_PATH):
    if not os.path.exists(path):
        raise IoError(f"manifest not found: {path}", path=path)
    manifest = configparser.RawConfigParser()
    manifest.read(path, encoding="utf-8")
    return manifest


def download(url, timeout=TIMEOUT_SECONDS):
    """Raw bytes of a URL."""
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as e:
        raise IoError(f"download failed for {url}: {e}", url=url) from e
    return response.content


def verify_checksum(slug, payload, manifest):
    """
    Check the payload against the pinned sha256, pinning it when none is set.

    Returns:
        True when a new checksum was pinned
    """
    digest = hashlib.sha256(payload).hexdigest()
    pinned = manifest.get(slug, "sha256", fallback="").strip()
    if pinned and pinned != digest:
        raise IoError(
            f"{slug}: checksum mismatch (expected {pinned}, got {digest})",
            expected=pinned,
            actual=digest,
        )
    if not pinned:
        manifest.set(slug, "sha256", digest)
        return True
    return False


def _column_refs(spec, header):
    refs = []
    for part in (p.strip() for p in spec.split(",")):
        if not part:
            continue
        if not header and "-" in part:
            first, last = (int(v) for v in part.split("-", 1))
            refs.extend(range(first, last + 1))
        elif not header:
            refs.append(int(part))
        else:
            refs.append(part)
    return refs


def _resolve(frame, ref):
    if ref in frame.columns:
        return ref
    if isinstance(ref, str) and ref.lstrip("-").isdigit():
        return frame.columns[int(ref)]
    raise InvalidInput(f"column {ref!r} not found", columns=[str(c) for c in frame.columns])


def convert(payload, entry):
    """
    Parse a downloaded file into the feature-columns-plus-target layout.

    Args:
        payload: raw bytes as downloaded
        entry: manifest section (mapping of the keys listed in the module doc)

    Returns:
        pandas DataFrame with numeric columns, "target" last
    """
    member = entry.get("member", "").strip()
    if member:
        with zipfile.ZipFile(io.BytesIO(payload)) as archive:
            payload = archive.read(member)

    header = entry.get("header", "true").strip().lower() in ("true", "1", "yes")
    na = [entry["na"].strip()] if entry.get("na", "").strip() else None
    sep = entry.get("sep", ",")
    frame = pd.read_csv(
        io.BytesIO(payload),
        sep=sep,
        header=0 if header else None,
        na_values=na,
        engine="python" if len(sep) > 1 else "c",
    )

    target = _resolve(frame, _column_refs(entry["target"], header)[0])
    dropped = [_resolve(frame, ref) for ref in _column_refs(entry.get("drop", ""), header)]
    frame = frame.drop(columns=dropped)
    frame = frame.apply(pd.to_numeric, errors="coerce")

    if entry.get("missing", "drop_rows").strip() == "drop_columns":
        keep = [c for c in frame.columns if c == target or not frame[c].isna().any()]
        frame = frame[keep]
    frame = frame.dropna(axis=0, how="any")

    features = [c for c in frame.columns if c != target]
    result = frame[features].copy()
    result.columns = [str(c) for c in features]
    result["target"] = frame[target].to_numpy()
    return result


def fetch(slug, manifest, out_dir, force=False, require_pinned=False):
    """Download, verify and convert one dataset; returns the CSV path."""
    entry = manifest[slug]
    if require_pinned and not entry.get("sha256", "").strip():
        raise IoError(f"{slug}: no pinned sha256 in the manifest", dataset=slug)
    out_path = os.path.join(out_dir, f"{slug}.csv")
    if os.path.exists(out_path) and not force:
        logger.info("dataset already present", extra={"dataset": slug, "path": out_path})
        return out_path

    payload = download(entry["url"])
    pinned = verify_checksum(slug, payload, manifest)
    try:
        frame = convert(payload, entry)
    except (ValueError, KeyError, IndexError, zipfile.BadZipFile) as e:
        raise InvalidInput(f"{slug}: cannot convert download: {e}") from e
    frame.to_csv(out_path, index=False)
    logger.info(
        "dataset fetched",
        extra={
            "dataset": slug,
            "rows": int(frame.shape[0]),
            "features": int(frame.shape[1] - 1),
            "pinned": pinned,
        },
    )
    return out_path


def main(argv=None):
    parser = argparse.ArgumentParser(description="Download the benchmark datasets")
    parser.add_argument("names", nargs="*", help="dataset slugs (default: all in the manifest)")
    parser.add_argument("--manifest", default=MANIFEST_PATH, help="manifest INI file")
    parser.add_argument("--out-dir", default="datasets", help="where the CSV files go")
    parser.add_argument("--force", action="store_true", help="download even if the CSV exists")
    parser.add_argument(
        "--require-pinned",
        action="store_true",
        help="refuse datasets whose manifest entry has no sha256",
    )
    args = parser.parse_args(argv)

    enable_json = os.environ.get("ENABLE_JSON_LOGGING", "true").lower() in ("true", "1", "yes")
    setup_structured_logging(enable_json=enable_json, level=os.environ.get("LOG_LEVEL", "INFO"))

    try:
        manifest = load_manifest(args.manifest)
        names = args.names or manifest.sections()
        unknown = [n for n in names if not manifest.has_section(n)]
        if unknown:
            raise InvalidInput(f"not in the manifest: {', '.join(unknown)}")

        os.makedirs(args.out_dir, exist_ok=True)
        failed = []
        for slug in names:
            try:
                fetch(
                    slug,
                    manifest,
                    args.out_dir,
                    force=args.force,
                    require_pinned=args.require_pinned,
                )
            except QIForestError as e:
                logger.warning("dataset not fetched", extra={"dataset": slug, "reason": e.detail})
                failed.append(slug)

        # write back checksums pinned during this run
        with open(args.manifest, "w", encoding="utf-8") as f:
            manifest.write(f)
    except QIForestError as e:
        sys.stderr.write(json.dumps(problem_detail(e, instance="fetch")) + "\n")
        return e.exit_code

    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
