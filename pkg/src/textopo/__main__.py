import sys

from textopo.cli import main

sys.exit(main())
