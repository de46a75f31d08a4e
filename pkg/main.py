import sys

from imuon.backend.starting_part.start import start


def main():
    """Run the imuon CLI, e.g. `python main.py verify --out runs`"""
    sys.exit(start(sys.argv[1:]))


if __name__ == "__main__":
    main()
