use proptest::prelude::*;

use super::*;
use crate::ledger::AuthorityRole;

const T0: i64 = 1_700_000_000;
const TTL: i64 = 86_400;
const SERVER: &str = "node-1";

fn honest_panel() -> Vec<Validator> {
    (0..5).map(|i| Validator::honest(format!("v{i}"))).collect()
}

fn rejecting_panel() -> Vec<Validator> {
    let mut panel: Vec<Validator> = (0..2).map(|i| Validator::honest(format!("v{i}"))).collect();
    for i in 0..3 {
        panel.push(Validator::always_reject(format!("r{i}")));
    }
    panel
}

fn linked(content: &[u8]) -> (MemoryStore, Chain, AnchorReceipt) {
    let mut store = MemoryStore::new();
    let mut chain = Chain::new(T0);
    let receipt = link_off_chain_to_on_chain(
        &mut store,
        &mut chain,
        &honest_panel(),
        SERVER,
        "123",
        content,
        TTL,
        T0,
    )
    .unwrap();
    (store, chain, receipt)
}

#[test]
fn hash_file_contents_matches_reference_vector() {
    assert_eq!(
        hash_file_contents(b"").to_hex(),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}

#[test]
fn digest_size_is_fixed_regardless_of_input_size() {
    for size in [0usize, 1, 1024, 256 * 1024] {
        let content = vec![7u8; size];
        assert_eq!(hash_file_contents(&content).to_hex().len(), 64);
    }
}

#[test]
fn certificate_id_recomputes_from_body() {
    let certificate = issue_certificate(SERVER, "123", b"payroll.csv", TTL, T0).unwrap();
    assert_eq!(certificate.recompute_id(), certificate.certificate_id);
    assert_eq!(certificate.expiry, T0 + TTL);
    assert_eq!(
        certificate.file_content_hash,
        hash_file_contents(b"payroll.csv")
    );
}

#[test]
fn same_file_different_users_get_distinct_certificates() {
    let a = issue_certificate(SERVER, "123", b"shared", TTL, T0).unwrap();
    let b = issue_certificate(SERVER, "124", b"shared", TTL, T0).unwrap();
    assert_ne!(a.certificate_id, b.certificate_id);
}

#[test]
fn zero_ttl_is_rejected() {
    assert!(matches!(
        issue_certificate(SERVER, "123", b"x", 0, T0),
        Err(TrustError::NonPositiveTtl(0))
    ));
}

#[test]
fn upload_round_trip() {
    let mut store = MemoryStore::new();
    let certificate = issue_certificate(SERVER, "123", b"content", TTL, T0).unwrap();
    let hash = certificate.file_content_hash;
    upload_data(
        &mut store,
        &hash,
        b"content",
        &certificate.certificate_id,
        &certificate,
    )
    .unwrap();
    assert_eq!(store.get_file(&hash).unwrap().unwrap(), b"content");
    assert_eq!(
        store
            .get_certificate(&certificate.certificate_id)
            .unwrap()
            .unwrap(),
        certificate
    );
}

#[test]
fn upload_rejects_mismatched_hash() {
    let mut store = MemoryStore::new();
    let certificate = issue_certificate(SERVER, "123", b"actual", TTL, T0).unwrap();
    let wrong = hash_file_contents(b"something else");
    let err = upload_data(
        &mut store,
        &wrong,
        b"actual",
        &certificate.certificate_id,
        &certificate,
    )
    .unwrap_err();
    assert!(matches!(err, TrustError::Integrity(_)));
    assert_eq!(store.file_count(), 0);
    assert_eq!(store.certificate_count(), 0);
}

#[test]
fn upload_rejects_mismatched_certificate_id() {
    let mut store = MemoryStore::new();
    let certificate = issue_certificate(SERVER, "123", b"bytes", TTL, T0).unwrap();
    let hash = certificate.file_content_hash;
    let other = issue_certificate(SERVER, "999", b"bytes", TTL, T0).unwrap();
    let err = upload_data(
        &mut store,
        &hash,
        b"bytes",
        &other.certificate_id,
        &certificate,
    )
    .unwrap_err();
    assert!(matches!(err, TrustError::Integrity(_)));
    assert_eq!(store.certificate_count(), 0);
}

#[test]
fn double_upload_is_idempotent() {
    let mut store = MemoryStore::new();
    let certificate = issue_certificate(SERVER, "123", b"dup", TTL, T0).unwrap();
    let hash = certificate.file_content_hash;
    for _ in 0..2 {
        upload_data(
            &mut store,
            &hash,
            b"dup",
            &certificate.certificate_id,
            &certificate,
        )
        .unwrap();
    }
    assert_eq!(store.file_count(), 1);
    assert_eq!(store.certificate_count(), 1);
}

#[test]
fn link_commits_anchor_with_exact_field_set() {
    let (_store, chain, receipt) = linked(b"quarterly-report");
    assert_eq!(chain.len(), 2);
    assert_eq!(receipt.block_index, 1);

    let block = chain.get(1).unwrap();
    match &block.payload {
        BlockPayload::Anchor {
            file_content_hash,
            certificate_id,
            server_id,
            user_id,
            expiry,
        } => {
            assert_eq!(*file_content_hash, hash_file_contents(b"quarterly-report"));
            assert_eq!(*certificate_id, receipt.certificate_id);
            assert_eq!(server_id, SERVER);
            assert_eq!(user_id, "123");
            assert_eq!(*expiry, T0 + TTL);
        }
        other => panic!("expected Anchor payload, got {}", other.kind()),
    }
}

#[test]
fn rejected_anchor_keeps_upload_and_chain_unchanged() {
    let mut store = MemoryStore::new();
    let mut chain = Chain::new(T0);
    let err = link_off_chain_to_on_chain(
        &mut store,
        &mut chain,
        &rejecting_panel(),
        SERVER,
        "123",
        b"ignored by voters",
        TTL,
        T0,
    )
    .unwrap_err();
    match err {
        TrustError::Unanchored {
            file_content_hash,
            approvals,
            rejections,
        } => {
            assert_eq!(file_content_hash, hash_file_contents(b"ignored by voters"));
            assert_eq!((approvals, rejections), (2, 3));
            assert!(store.get_file(&file_content_hash).unwrap().is_some());
        }
        other => panic!("expected Unanchored, got {other:?}"),
    }
    assert_eq!(chain.len(), 1);
}

#[test]
fn relinking_same_content_dedups_storage_but_not_anchors() {
    let mut store = MemoryStore::new();
    let mut chain = Chain::new(T0);
    for i in 0..2 {
        link_off_chain_to_on_chain(
            &mut store,
            &mut chain,
            &honest_panel(),
            SERVER,
            "123",
            b"same bytes",
            TTL,
            T0 + i,
        )
        .unwrap();
    }
    assert_eq!(store.file_count(), 1);
    assert_eq!(chain.len(), 3, "append-only chain keeps both anchors");
}

#[test]
fn verify_trusted_before_expiry() {
    let (store, chain, receipt) = linked(b"intact");
    let report = verify(&receipt.file_content_hash, &chain, &store, T0 + 10);
    assert!(report.is_trusted());
    assert!(report.anchor_found && report.hash_matches && report.certificate_valid);
    assert!(!report.expired);
    assert!(report.reasons.is_empty());
}

#[test]
fn verify_expiry_boundary_is_exclusive() {
    let (store, chain, receipt) = linked(b"short-lived");
    assert!(verify(&receipt.file_content_hash, &chain, &store, T0 + TTL - 1).is_trusted());
    let report = verify(&receipt.file_content_hash, &chain, &store, T0 + TTL);
    assert!(report.expired);
    assert!(!report.is_trusted());
    assert_eq!(report.reasons, vec!["expired".to_string()]);
}

#[test]
fn verify_without_anchor_is_untrusted_even_with_stored_file() {
    let mut store = MemoryStore::new();
    let chain = Chain::new(T0);
    let hash = hash_file_contents(b"orphan");
    store.put_file(&hash, b"orphan").unwrap();
    let report = verify(&hash, &chain, &store, T0);
    assert!(!report.anchor_found);
    assert!(report.hash_matches, "the bytes themselves are fine");
    assert!(!report.is_trusted());
}

#[test]
fn verify_detects_certificate_substitution() {
    let (mut store, chain, receipt) = linked(b"certified");
    // Replace the stored document with one whose body differs.
    let forged = issue_certificate(SERVER, "intruder", b"certified", TTL, T0).unwrap();
    store.tamper_certificate(
        &receipt.certificate_id,
        DigitalCertificate {
            certificate_id: receipt.certificate_id,
            ..forged
        },
    );
    let report = verify(&receipt.file_content_hash, &chain, &store, T0 + 1);
    assert!(!report.certificate_valid);
    assert!(!report.is_trusted());
    assert_eq!(report.reasons, vec!["certificate invalid".to_string()]);
}

#[test]
fn verify_reports_missing_stored_file() {
    let (_store, chain, receipt) = linked(b"gone");
    let empty = MemoryStore::new();
    let report = verify(&receipt.file_content_hash, &chain, &empty, T0 + 1);
    assert!(report.anchor_found);
    assert!(!report.hash_matches);
    assert!(!report.is_trusted());
}

#[test]
fn anchor_payload_length_is_independent_of_content_size() {
    let mut lengths = Vec::new();
    for size in [1usize << 10, 64 << 10, 512 << 10] {
        let content = vec![0xA5u8; size];
        let (_, chain, receipt) = linked(&content);
        let payload = &chain.get(receipt.block_index).unwrap().payload;
        lengths.push(crate::ledger::canonical_encode(payload).unwrap().len());
    }
    assert_eq!(lengths[0], lengths[1]);
    assert_eq!(lengths[1], lengths[2]);
}

#[test]
fn dir_store_layout_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = DirStore::open(dir.path()).unwrap();
    let mut chain = Chain::new(T0);
    let receipt = link_off_chain_to_on_chain(
        &mut store,
        &mut chain,
        &honest_panel(),
        SERVER,
        "123",
        b"on disk",
        TTL,
        T0,
    )
    .unwrap();

    let hex = receipt.file_content_hash.to_hex();
    let file_path = dir.path().join("files").join(&hex[..2]).join(&hex);
    assert!(file_path.is_file(), "fan-out layout files/<first2>/<hash>");
    let cert_path = dir
        .path()
        .join("certs")
        .join(format!("{}.json", receipt.certificate_id.to_hex()));
    assert!(cert_path.is_file());

    assert!(verify(&receipt.file_content_hash, &chain, &store, T0 + 1).is_trusted());

    // On-disk tampering is caught at verify time.
    std::fs::write(&file_path, b"on disk, but changed").unwrap();
    let report = verify(&receipt.file_content_hash, &chain, &store, T0 + 1);
    assert!(!report.hash_matches);
    assert!(!report.is_trusted());
}

fn token_for(user_id: &str) -> SessionToken {
    SessionToken::issue(user_id, AuthorityRole::User, T0, 3600)
}

fn state_with_grant(user_id: &str, functionality: &str) -> PolicyState {
    let mut state = PolicyState::new();
    state
        .apply(&BlockPayload::OnboardUser {
            user_id: user_id.to_string(),
            authority_role: AuthorityRole::User,
            org_role: "HR".into(),
        })
        .unwrap();
    state
        .apply(&BlockPayload::CreatePolicy {
            functionality_name: functionality.to_string(),
        })
        .unwrap();
    state
        .apply(&BlockPayload::GrantPermission {
            user_id: user_id.to_string(),
            functionality_name: functionality.to_string(),
        })
        .unwrap();
    state
}

#[test]
fn gated_read_returns_content_and_certificate() {
    let (store, chain, receipt) = linked(b"the data");
    let state = state_with_grant("123", "HR Data Access");
    let (content, certificate) = get_file(
        &store,
        &chain,
        &token_for("123"),
        &state,
        &receipt.file_content_hash,
        "HR Data Access",
        T0 + 1,
    )
    .unwrap();
    assert_eq!(content, b"the data");
    assert_eq!(hash_file_contents(&content), receipt.file_content_hash);
    assert_eq!(certificate.certificate_id, receipt.certificate_id);
}

#[test]
fn gated_read_denies_unpermitted_user() {
    let (store, chain, receipt) = linked(b"the data");
    let state = state_with_grant("123", "HR Data Access");
    let err = get_file(
        &store,
        &chain,
        &token_for("124"),
        &state,
        &receipt.file_content_hash,
        "HR Data Access",
        T0 + 1,
    )
    .unwrap_err();
    assert!(matches!(err, AccessDenial::PermissionDenied { .. }));
}

#[test]
fn gated_read_refuses_tampered_store_before_delivery() {
    let (mut store, chain, receipt) = linked(b"the data");
    store.tamper_file(&receipt.file_content_hash, b"evil data".to_vec());
    let state = state_with_grant("123", "HR Data Access");
    let err = get_file(
        &store,
        &chain,
        &token_for("123"),
        &state,
        &receipt.file_content_hash,
        "HR Data Access",
        T0 + 1,
    )
    .unwrap_err();
    match err {
        AccessDenial::Untrusted(report) => assert!(!report.hash_matches),
        other => panic!("expected Untrusted, got {other:?}"),
    }
}

proptest! {
    /// Flipping any byte of the stored content makes verify report a hash
    /// mismatch.
    #[test]
    fn stored_byte_flip_is_always_detected(
        content in proptest::collection::vec(any::<u8>(), 1..512),
        pos in any::<proptest::sample::Index>(),
        flip in 1u8..=255,
    ) {
        let (mut store, chain, receipt) = linked(&content);
        let mut tampered = content.clone();
        let pos = pos.index(tampered.len());
        tampered[pos] ^= flip;
        store.tamper_file(&receipt.file_content_hash, tampered);

        let report = verify(&receipt.file_content_hash, &chain, &store, T0 + 1);
        prop_assert!(!report.hash_matches);
        prop_assert!(!report.is_trusted());
        prop_assert_eq!(&report.reasons, &vec!["hash mismatch".to_string()]);
    }

    /// Anchor fidelity: linked content verifies Trusted at any time before
    /// expiry, and the cross-module hash rule agrees with the ledger's.
    #[test]
    fn linked_content_verifies_until_expiry(
        content in proptest::collection::vec(any::<u8>(), 0..256),
        dt in 0i64..TTL,
    ) {
        prop_assert_eq!(hash_file_contents(&content), crate::ledger::hash_bytes(&content));
        let (store, chain, receipt) = linked(&content);
        let report = verify(&receipt.file_content_hash, &chain, &store, T0 + dt);
        prop_assert!(report.is_trusted());
    }
}
