import sys

from consip.cli import main

sys.exit(main())
