import signal
import sys

from dotenv import load_dotenv

load_dotenv()

from cli import MorphSuiteCLI  # noqa: E402


def signal_handler(sig, frame):
    print("Strg+C erkannt. Breche ab...", file=sys.stderr)
    sys.exit(130)


def main() -> int:
    # Registriere den Signal-Handler für SIGINT (Strg+C)
    signal.signal(signal.SIGINT, signal_handler)
    return MorphSuiteCLI().run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
