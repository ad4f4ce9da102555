import sys

from casbr.cli import main

sys.exit(main())
