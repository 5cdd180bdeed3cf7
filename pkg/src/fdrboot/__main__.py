import sys

from fdrboot.cli import main

sys.exit(main())
