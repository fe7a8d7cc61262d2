import sys

from tsunami_blowup.cli import main

sys.exit(main())
