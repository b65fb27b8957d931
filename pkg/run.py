import sys

from dotenv import load_dotenv

# Load .env before importing the package so LOG_LEVEL and friends apply
load_dotenv(".env")

from qiforest.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
