import sys

from harvestsim.cli import main

sys.exit(main())
