import sys

from pywirtinger.cli import main

sys.exit(main())
