import os
import sys
from typing import Any, Optional, TextIO


class Colors:
    """ANSI escape codes used by the verification report and the CLI."""

    RED = "\033[91m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"
    MAGENTA = "\033[95m"
    CYAN = "\033[96m"

    BOLD = "\033[1m"

    RESET = "\033[0m"


def supports_color(stream: Optional[TextIO] = None) -> bool:
    """
    Check whether a stream should receive colored output.

    NO_COLOR disables and FORCE_COLOR enables colors regardless of the
    terminal; otherwise the stream must be a TTY with a capable TERM.

    Args:
        stream: Stream to inspect (default: stdout)

    Returns:
        True if colors are supported, False otherwise
    """
    if os.environ.get("NO_COLOR"):
        return False
    if os.environ.get("FORCE_COLOR"):
        return True

    stream = stream or sys.stdout
    if not hasattr(stream, "isatty") or not stream.isatty():
        return False

    term = os.environ.get("TERM", "").lower()
    return term not in ("", "dumb", "unknown")


_COLOR_ENABLED = supports_color()


def enable_colors(enabled: bool = True) -> None:
    """Enable or disable color output globally."""
    global _COLOR_ENABLED
    _COLOR_ENABLED = enabled


def is_color_enabled() -> bool:
    return _COLOR_ENABLED


def colorize(text: str, color: str = "", style: str = "") -> str:
    """
    Apply color and/or style to text.

    Args:
        text: Text to colorize
        color: Color code (e.g., Colors.RED)
        style: Style code (e.g., Colors.BOLD)

    Returns:
        Colorized text if colors are enabled, plain text otherwise
    """
    if not _COLOR_ENABLED:
        return text

    return f"{style}{color}{text}{Colors.RESET}"


def success(text: str, bold: bool = False) -> str:
    """Format text as a passing result (green)."""
    return colorize(text, Colors.GREEN, Colors.BOLD if bold else "")


def error(text: str, bold: bool = False) -> str:
    """Format text as a failing result (red)."""
    return colorize(text, Colors.RED, Colors.BOLD if bold else "")


def warning(text: str, bold: bool = False) -> str:
    return colorize(text, Colors.YELLOW, Colors.BOLD if bold else "")


def info(text: str, bold: bool = False) -> str:
    return colorize(text, Colors.BLUE, Colors.BOLD if bold else "")


def header(text: str, color: str = Colors.CYAN) -> str:
    """Bold colored heading."""
    return colorize(text, color, Colors.BOLD)


def highlight(text: str, color: str = Colors.MAGENTA) -> str:
    return colorize(text, color)


def status_mark(passed: bool) -> str:
    """Green check mark or red cross."""
    return success("✓") if passed else error("✗")


def format_residual(measured: float, tolerance: float) -> str:
    """
    Render a residual against its tolerance, colored by the outcome.

    Args:
        measured: Measured residual
        tolerance: Largest acceptable residual

    Returns:
        Text such as "measured=1.2e-14 tolerance=1.0e-12"
    """
    text = f"measured={measured:.3e} tolerance={tolerance:.3e}"
    return success(text) if measured <= tolerance else error(text)


def print_colored(
    text: Any, color: str = "", style: str = "", **kwargs: Any
) -> None:
    """
    Print text with color and style.

    Args:
        text: Text to print
        color: Color code
        style: Style code
        **kwargs: Additional arguments passed to print()
    """
    print(colorize(str(text), color, style), **kwargs)
