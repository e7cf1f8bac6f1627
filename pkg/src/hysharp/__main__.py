import sys

from hysharp.cli import main

sys.exit(main())
