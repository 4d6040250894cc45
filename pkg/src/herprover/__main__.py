from herprover.cli import main
import sys

sys.exit(main())
