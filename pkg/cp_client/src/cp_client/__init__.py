"""Controller-side client for the switchcrypt control protocol."""

from cp_client.client import (  # noqa: F401
    ClientError,
    ClientSession,
    ConnectFailed,
    DigestMismatch,
    MalformedKeyError,
    ServerRefused,
    VerifyReport,
    upload_key,
    verify_tables,
)
