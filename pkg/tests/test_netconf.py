"""NETCONF message codec and policy datastore semantics."""
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from capshare.netconf import messages
from capshare.netconf.datastore import PolicyDatastore, apply_edit_config, get_config
from capshare.netconf.messages import RpcFault
from capshare.nrm import RRMPolicyRatio, SNssai

FIXED_ID = "urn:uuid:edb2c826-1bb6-4837-b3f3-57524d8d31d3"

# On-wire reference for a two-slice update (57% / 42%), the exact subtree a
# 3GPP-compliant peer expects for rRMPolicyDedicatedRatio provisioning.
REFERENCE_EDIT_CONFIG = """<?xml version="1.0" encoding="UTF-8"?>
<nc:rpc message-id="urn:uuid:edb2c826-1bb6-4837-b3f3-57524d8d31d3"
xmlns:nc="urn:ietf:params:xml:ns:netconf:base:1.0">
  <nc:edit-config>
    <nc:target>
      <nc:running/>
    </nc:target>
    <nc:test-option>set</nc:test-option>
    <nc:config>
      <rRMPolicyRatio xmlns="urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy">
        <id>1</id>
        <attributes>
          <rRMPolicyDedicatedRatio>57</rRMPolicyDedicatedRatio>
        </attributes>
      </rRMPolicyRatio>
      <rRMPolicyRatio xmlns="urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy">
        <id>2</id>
        <attributes>
          <rRMPolicyDedicatedRatio>42</rRMPolicyDedicatedRatio>
        </attributes>
      </rRMPolicyRatio>
    </nc:config>
  </nc:edit-config>
</nc:rpc>
"""

# Same payload with the config block as a sibling of edit-config, a layout
# seen from some emitters; parsers must accept it.
SIBLING_CONFIG_EDIT = """<?xml version="1.0" encoding="UTF-8"?>
<nc:rpc message-id="urn:uuid:edb2c826-1bb6-4837-b3f3-57524d8d31d3"
xmlns:nc="urn:ietf:params:xml:ns:netconf:base:1.0">
  <nc:edit-config>
    <nc:target>
      <nc:running/>
    </nc:target>
    <nc:test-option>set</nc:test-option>
  </nc:edit-config>
  <nc:config>
    <rRMPolicyRatio xmlns="urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy">
      <id>1</id>
      <attributes>
        <rRMPolicyDedicatedRatio>57</rRMPolicyDedicatedRatio>
      </attributes>
    </rRMPolicyRatio>
    <rRMPolicyRatio xmlns="urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy">
      <id>2</id>
      <attributes>
        <rRMPolicyDedicatedRatio>42</rRMPolicyDedicatedRatio>
      </attributes>
    </rRMPolicyRatio>
  </nc:config>
</nc:rpc>
"""


def policies(*pairs):
    return [RRMPolicyRatio(SNssai(i), r) for i, r in pairs]


def canonical(xml_data) -> str:
    return ET.canonicalize(xml_data=xml_data, strip_text=True)


class TestBuildEditConfig:
    def test_matches_reference_document(self):
        built = messages.build_edit_config(policies((1, 57), (2, 42)), message_id=FIXED_ID)
        assert canonical(built.decode()) == canonical(REFERENCE_EDIT_CONFIG)

    def test_single_zero_ratio_entry(self):
        built = messages.build_edit_config(policies((1, 0)))
        parsed = messages.parse_rpc(built)
        assert parsed.policies == policies((1, 0))

    def test_entries_keep_input_order(self):
        built = messages.build_edit_config(policies((1, 60), (2, 40)))
        parsed = messages.parse_rpc(built)
        assert [p.snssai.id for p in parsed.policies] == [1, 2]
        assert [p.dedicated_ratio for p in parsed.policies] == [60, 40]

    def test_empty_policy_list_rejected(self):
        with pytest.raises(ValueError):
            messages.build_edit_config([])

    def test_fresh_uuid_message_ids(self):
        a = messages.peek_message_id(messages.build_edit_config(policies((1, 1))))
        b = messages.peek_message_id(messages.build_edit_config(policies((1, 1))))
        assert a != b
        assert a.startswith("urn:uuid:")


class TestParseRpc:
    def test_accepts_nested_config(self):
        rpc = messages.parse_rpc(REFERENCE_EDIT_CONFIG.encode())
        assert rpc.operation == "edit-config"
        assert rpc.policies == policies((1, 57), (2, 42))

    def test_accepts_sibling_config(self):
        rpc = messages.parse_rpc(SIBLING_CONFIG_EDIT.encode())
        assert rpc.policies == policies((1, 57), (2, 42))

    def test_unknown_namespace_faults(self):
        doc = REFERENCE_EDIT_CONFIG.replace(
            "urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy", "urn:vendor:something-else"
        )
        with pytest.raises(RpcFault) as err:
            messages.parse_rpc(doc.encode())
        assert err.value.tag == "unknown-namespace"

    def test_out_of_range_ratio_faults(self):
        doc = REFERENCE_EDIT_CONFIG.replace(">57<", ">150<")
        with pytest.raises(RpcFault) as err:
            messages.parse_rpc(doc.encode())
        assert err.value.tag == "invalid-value"

    def test_malformed_xml_raises_message_error(self):
        with pytest.raises(messages.MessageError):
            messages.parse_rpc(b"<nc:rpc>not closed")


class TestApplyEditConfig:
    def test_reference_document_populates_store(self):
        store = PolicyDatastore()
        reply = apply_edit_config(store, REFERENCE_EDIT_CONFIG.encode())
        parsed = messages.parse_reply(reply)
        assert parsed.ok
        assert parsed.message_id == FIXED_ID
        assert {k: v.dedicated_ratio for k, v in store.snapshot().items()} == {1: 57, 2: 42}

    def test_invalid_ratio_leaves_store_unchanged(self):
        store = PolicyDatastore(policies((1, 10)))
        before_entries = store.snapshot()
        before_revision = store.revision
        doc = REFERENCE_EDIT_CONFIG.replace(">42<", ">150<")
        reply = messages.parse_reply(apply_edit_config(store, doc.encode()))
        assert not reply.ok
        assert reply.error_tag == "invalid-value"
        assert store.snapshot() == before_entries
        assert store.revision == before_revision

    def test_reapplying_same_document_bumps_revision(self):
        store = PolicyDatastore()
        apply_edit_config(store, REFERENCE_EDIT_CONFIG.encode())
        first_revision = store.revision
        apply_edit_config(store, REFERENCE_EDIT_CONFIG.encode())
        assert {k: v.dedicated_ratio for k, v in store.snapshot().items()} == {1: 57, 2: 42}
        assert store.revision == first_revision + 1

    def test_reply_echoes_request_message_id(self):
        store = PolicyDatastore()
        built = messages.build_edit_config(policies((3, 12)))
        reply = messages.parse_reply(apply_edit_config(store, built))
        assert reply.message_id == messages.peek_message_id(built)


class TestGetConfig:
    def test_returns_all_entries_sorted(self):
        store = PolicyDatastore(policies((2, 42), (1, 57)))
        doc = get_config(store)
        root = ET.fromstring(doc)
        ids = [el.findtext(f"{{{messages.POLICY_NS}}}id") for el in root]
        assert ids == ["1", "2"]

    def test_empty_store_yields_empty_config(self):
        doc = get_config(PolicyDatastore())
        root = ET.fromstring(doc)
        assert root.tag == f"{{{messages.BASE_NS}}}config"
        assert len(root) == 0

    def test_filter_selects_one_entry(self):
        store = PolicyDatastore(policies((1, 57), (2, 42)))
        root = ET.fromstring(get_config(store, filter_id=2))
        ids = [el.findtext(f"{{{messages.POLICY_NS}}}id") for el in root]
        assert ids == ["2"]

    def test_absent_filter_id_yields_empty_config(self):
        store = PolicyDatastore(policies((1, 57)))
        root = ET.fromstring(get_config(store, filter_id=9))
        assert len(root) == 0


edit_sequence = st.lists(
    st.lists(
        st.tuples(st.integers(1, 6), st.integers(-20, 120)), min_size=1, max_size=4
    ),
    min_size=1,
    max_size=8,
)


@settings(max_examples=200)
@given(edit_sequence)
def test_randomized_edit_sequences_keep_invariants(seq):
    """Write-then-read agreement plus atomic-failure behavior on random edits."""
    store = PolicyDatastore()
    expected: dict[int, int] = {}
    revision = store.revision
    for batch in seq:
        valid = all(0 <= r <= 100 for _, r in batch)
        doc = _raw_edit_config(batch)
        reply = messages.parse_reply(apply_edit_config(store, doc))
        if valid:
            assert reply.ok
            for i, r in batch:
                expected[i] = r
            revision += 1
        else:
            assert not reply.ok
        assert store.revision == revision
        observed = {p.snssai.id: p.dedicated_ratio for p in store.get()}
        assert observed == expected


def _raw_edit_config(batch):
    """Build an edit-config without RRMPolicyRatio validation, so invalid
    ratios reach the server side."""
    entries = "\n".join(
        f'<rRMPolicyRatio xmlns="{messages.POLICY_NS}">'
        f"<id>{i}</id><attributes><rRMPolicyDedicatedRatio>{r}</rRMPolicyDedicatedRatio>"
        f"</attributes></rRMPolicyRatio>"
        for i, r in batch
    )
    return (
        f'<nc:rpc message-id="m-1" xmlns:nc="{messages.BASE_NS}">'
        f"<nc:edit-config><nc:target><nc:running/></nc:target>"
        f"<nc:config>{entries}</nc:config></nc:edit-config></nc:rpc>"
    ).encode()


def test_hello_round_trip():
    raw = messages.build_hello([messages.CAP_BASE_10, messages.CAP_BASE_11], session_id=7)
    hello = messages.parse_hello(raw)
    assert hello.capabilities == {messages.CAP_BASE_10, messages.CAP_BASE_11}
    assert hello.session_id == 7


def test_hello_without_capabilities_rejected():
    doc = f'<nc:hello xmlns:nc="{messages.BASE_NS}"><nc:session-id>1</nc:session-id></nc:hello>'
    with pytest.raises(messages.MessageError):
        messages.parse_hello(doc.encode())
