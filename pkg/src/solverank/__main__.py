import sys

from solverank.cli import main

sys.exit(main())
