import sys

from elastoscatter.main import main

sys.exit(main())
