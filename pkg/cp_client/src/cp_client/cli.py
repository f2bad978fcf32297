"""cp-client: upload a key to a running switch and/or verify its tables.

Exit codes: 0 success, 2 malformed key, 3 connection failure,
4 server refused a request, 5 digest mismatch, 1 anything else.
"""

import argparse
import sys
from pathlib import Path

from cp_client.client import ClientError, DigestMismatch, upload_key, verify_tables


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cp-client",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--endpoint", default="127.0.0.1:9559",
                    help="control-plane address, host:port")
    group = ap.add_mutually_exclusive_group(required=True)
    group.add_argument("--key", help="AES-128 key as 32 hex chars")
    group.add_argument("--key-file", help="file holding the key in hex")
    ap.add_argument("--verify", action="store_true",
                    help="after uploading, cross-check all 10 round-table "
                         "digests against local computation")
    ap.add_argument("--verify-only", action="store_true",
                    help="do not upload; check the currently installed "
                         "tables against this key")
    args = ap.parse_args(argv)

    try:
        key_hex = (Path(args.key_file).read_text()
                   if args.key_file else args.key)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if not args.verify_only:
            key_id = upload_key(args.endpoint, key_hex)
            print(f"uploaded key {key_id}")
        if args.verify or args.verify_only:
            report = verify_tables(args.endpoint, key_hex)
            if not report.ok:
                rounds = ", ".join(str(r) for r in report.mismatched_rounds)
                raise DigestMismatch(
                    f"installed tables (key {report.key_id}) disagree at "
                    f"round(s) {rounds}")
            print(f"verified {report.rounds_checked}/10 round digests "
                  f"(key {report.key_id})")
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
