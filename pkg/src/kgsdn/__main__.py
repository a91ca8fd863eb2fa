import sys

from kgsdn.cli import main

sys.exit(main())
