import sys

from symgap.cli import main

sys.exit(main())
