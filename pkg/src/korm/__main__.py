from korm.cli import main
import sys

sys.exit(main())
