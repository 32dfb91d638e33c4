import sys

from arrivalqrng.cli import main

sys.exit(main())
