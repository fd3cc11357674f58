#!/usr/bin/env python3
"""
Sato-Tate Lab - CLI Launcher
Runs the command-line workbench from a checkout, preferring the local .venv
"""

import os
import sys
from pathlib import Path


def main():
    """Main launcher function"""
    project_dir = Path(__file__).parent

    # Check for virtual environment and re-exec with it if available
    venv_python = project_dir / ".venv" / "bin" / "python"
    if venv_python.exists() and str(venv_python) != sys.executable:
        print("🔄 Utilizzando l'ambiente virtuale...", file=sys.stderr)
        os.execv(str(venv_python), [str(venv_python)] + sys.argv)

    # Add the project directory to Python path
    sys.path.insert(0, str(project_dir))

    try:
        from cli import main as cli_main
    except ImportError as e:
        print(f"\n❌ Errore di importazione: {e}", file=sys.stderr)
        print("💡 Suggerimento: pip install -e '.[dev]' oppure attiva l'ambiente virtuale:", file=sys.stderr)
        print("   source .venv/bin/activate && python start_cli.py --help", file=sys.stderr)
        print("📖 Vedi README.md per le istruzioni di installazione.", file=sys.stderr)
        sys.exit(1)

    try:
        sys.exit(cli_main(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\n\n🛑 Interrotto dall'utente. / Interrupted by the user.", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
