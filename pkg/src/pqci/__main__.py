import sys

from pqci.harness.cli import main

sys.exit(main())
