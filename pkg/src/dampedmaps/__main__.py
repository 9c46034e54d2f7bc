import sys

from dampedmaps.lab.cli import main

sys.exit(main())
