import sys

from thermoface.cli import main

sys.exit(main())
