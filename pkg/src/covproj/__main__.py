import sys

from covproj.cli import main

sys.exit(main())
