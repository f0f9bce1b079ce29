import sys

from dotenv import load_dotenv

# Load environment variables before the package reads its defaults
load_dotenv()

from rejectgate.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
