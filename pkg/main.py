import importlib.util
import sys
from typing import Optional

from core.logging_config import get_logger


def check_dependencies() -> bool:
    """Check if all required dependencies are available.

    Returns:
        True if all dependencies are available, False otherwise.
    """
    missing: list[str] = [name for name in ("numpy", "scipy") if importlib.util.find_spec(name) is None]

    if missing:
        print(
            "Missing required dependencies:\n\n"
            f"- {', '.join(missing)}\n\n"
            "Please install them using:\n"
            f"pip install {' '.join(missing)}",
            file=sys.stderr,
        )
        return False

    return True


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point.

    Returns:
        Exit code of the subcommand (3 for unexpected fatal errors).
    """
    if not check_dependencies():
        return 2

    try:
        from core.cli import main as cli_main
        return cli_main(argv)
    except KeyboardInterrupt:
        print("Interrupted.", file=sys.stderr)
        return 130
    except Exception as e:
        get_logger(__name__).critical(f"Fatal error: {e}", exc_info=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
