"""Main entry point for the bigcm command-line tool."""

# Load environment variables from .env file BEFORE any other imports
from dotenv import load_dotenv
load_dotenv()

import sys

import cli

if __name__ == "__main__":
    sys.exit(cli.main())
