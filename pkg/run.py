"""
Simple script to run the simoid command line
"""
import sys

from simoid.main import main

if __name__ == "__main__":
    sys.exit(main())
