import sys

from piqos.gateway.cli import main

sys.exit(main())
