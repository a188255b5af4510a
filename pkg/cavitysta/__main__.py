# _*_ coding: utf-8 _*_

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
