import argparse
import json
import sys
from typing import List, Optional

from app import App
from app_config import PARAM_KINDS, command_keys, command_names
from errors import LabError

COMMON_FLAGS = ('config', 'output_dir', 'seed', 'workers')


def _add_param_flag(parser: argparse.ArgumentParser, key: str) -> None:
    flag = '--' + key.replace('_', '-')
    kind = PARAM_KINDS[key]
    if kind == 'float':
        parser.add_argument(flag, dest=key, type=float)
    elif kind == 'int':
        parser.add_argument(flag, dest=key, type=int)
    elif kind == 'bool':
        parser.add_argument(flag, dest=key, action='store_true')
    elif kind == 'floats':
        parser.add_argument(flag, dest=key, type=float, nargs='+')
    elif kind == 'ints':
        parser.add_argument(flag, dest=key, type=int, nargs='+')
    elif kind == 'pair':
        parser.add_argument(flag, dest=key, type=float, nargs=2, metavar=('LO', 'HI'))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='levy-lab', description='Numerical laboratory for heavy-tailed Wigner matrices.')
    commands = parser.add_subparsers(dest='command', required=True)
    for command in command_names():
        sub = commands.add_parser(command, argument_default=argparse.SUPPRESS)
        sub.add_argument('--config', help='JSON file with a flat parameter namespace for this command')
        sub.add_argument('--output-dir', dest='output_dir')
        sub.add_argument('--seed', type=int)
        sub.add_argument('--workers', type=int)
        for key in command_keys(command):
            _add_param_flag(sub, key)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop('command')
    common = {key: args.pop(key, None) for key in COMMON_FLAGS}
    try:
        application = App()
    except LabError as ex:
        print(json.dumps(ex.to_dict(), sort_keys=True), file=sys.stderr)
        return ex.exit_code
    return application.run_command(command, args, **common)


if __name__ == '__main__':
    sys.exit(main())
