"""
Version utility for QIForest.
Reads git information to generate version string.
Falls back to the VERSION file if git is unavailable.
"""

import os
import subprocess
from datetime import datetime

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
REPO_DIR = os.path.dirname(PACKAGE_DIR)
VERSION_FILE = os.path.join(REPO_DIR, "VERSION")


def get_version():
    """
    Get version string in format: YYYY.MM.DD-<short_hash>
    Example: 2026.10.19-c7f7c81

    Tries git first, falls back to the VERSION file, then to "unknown".
    """
    version = _get_version_from_git(REPO_DIR)
    if version:
        return version

    if os.path.exists(VERSION_FILE):
        try:
            with open(VERSION_FILE) as f:
                return f.read().strip() or "unknown"
        except OSError:
            pass

    return "unknown"


def _run_git(*args):
    try:
        result = subprocess.run(
            ["git", *args], capture_output=True, text=True, cwd=REPO_DIR, timeout=5
        )
    except (OSError, subprocess.SubprocessError):
        return None
    if result.returncode != 0:
        return None
    return result.stdout.strip() or None


def _get_version_from_git(repo_dir):
    """Try to get version from git."""
    if not os.path.isdir(os.path.join(repo_dir, ".git")):
        return None

    commit_hash = _run_git("rev-parse", "--short", "HEAD")
    if not commit_hash:
        return None

    # format: 2024-11-19 14:30:00 -0500
    commit_date = _run_git("log", "-1", "--format=%ci")
    if commit_date:
        date_formatted = datetime.strptime(commit_date.split()[0], "%Y-%m-%d").strftime("%Y.%m.%d")
    else:
        date_formatted = datetime.now().strftime("%Y.%m.%d")

    return f"{date_formatted}-{commit_hash}"


VERSION = get_version()
PROGRAM_NAME = "qiforest"
