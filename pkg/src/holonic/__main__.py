import sys

from holonic.cli import main

sys.exit(main())
