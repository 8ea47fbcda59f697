import sys

from tfac.main import main


sys.exit(main())
