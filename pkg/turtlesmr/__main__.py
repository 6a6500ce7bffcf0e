import sys

from turtlesmr.harness import main


sys.exit(main())
