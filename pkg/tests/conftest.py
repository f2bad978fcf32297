import pytest

from switchcrypt.aes_core import Aes128Key, expand_key
from switchcrypt.pipeline import ForwardingTable, Pipeline, SetEgressPort
from switchcrypt.ttables import build_scrambled_tables

import aes_oracle


@pytest.fixture(scope="session")
def kat_key() -> Aes128Key:
    return Aes128Key(aes_oracle.KAT_KEY)


@pytest.fixture(scope="session")
def kat_tables(kat_key):
    return build_scrambled_tables(expand_key(kat_key))


@pytest.fixture
def forwarded_pipeline(kat_tables, kat_key):
    """Pipeline with port 1 -> egress 2 and crypto verification on."""
    fwd = ForwardingTable()
    fwd.add(1, SetEgressPort(2))
    return Pipeline(kat_tables, fwd, reference_key=kat_key)
