from cdetsim.cli import main
import sys

sys.exit(main())
