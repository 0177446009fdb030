import sys

from energy_copilot.cli import main

sys.exit(main())
