import sys

from compsel.cli import main

sys.exit(main())
