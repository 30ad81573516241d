import sys

from .bench import cli_main

sys.exit(cli_main())
