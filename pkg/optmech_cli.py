"""Root entrypoint for the optmech command line."""

import sys

from optmech.cli import main


if __name__ == "__main__":
    sys.exit(main())
