import sys

from blockeq.cli import main

sys.exit(main())
