import logging
import sys

import config
from cli.commands import build_parser
from errors import BreathSimError

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    logging.basicConfig(
        level=config.LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.handler(args)
    except BreathSimError as exc:
        print(f"❌ Error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"❌ Error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error in %s", args.command)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
