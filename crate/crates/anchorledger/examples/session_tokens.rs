//! Register a credential, authenticate, and poke at the resulting session
//! token: round trip, single-character tamper, and the expiry boundary.
//!
//! ```bash
//! cargo run --example session_tokens
//! ```

use anchorledger::auth::{encode_token, validate_token, CredentialStore, SessionToken, TokenKey};
use anchorledger::ledger::{AuthorityRole, BlockPayload};
use anchorledger::policy::PolicyState;

fn main() {
    let now = 1_700_000_000;
    let key = TokenKey::from_hex(&"ab".repeat(32)).unwrap();

    // Credentials live off-chain: a salt and the hash of salt + secret.
    let mut state = PolicyState::new();
    state
        .apply(&BlockPayload::OnboardUser {
            user_id: "123".into(),
            authority_role: AuthorityRole::User,
            org_role: "HR".into(),
        })
        .unwrap();
    let mut credentials = CredentialStore::in_memory();
    let credential = credentials.register("123", b"hunter2", &state).unwrap();
    println!("stored verifier for 123: {}", credential.verifier);
    println!(
        "correct secret verifies: {}",
        credentials.verify("123", b"hunter2")
    );
    println!(
        "wrong secret verifies:   {}",
        credentials.verify("123", b"nope")
    );

    // Tokens carry the user id, role and validity window, MAC-sealed.
    let token = SessionToken::issue("123", AuthorityRole::User, now, 3600);
    let encoded = encode_token(&token, &key);
    println!();
    println!("encoded token: {encoded}");
    let claims = validate_token(&encoded, &key, now + 10).unwrap();
    println!(
        "claims round-trip: user={} role={} ttl={}s",
        claims.user_id,
        claims.role,
        claims.expires_at - claims.issued_at
    );

    // Any single-character change breaks it.
    let mut tampered: Vec<char> = encoded.chars().collect();
    let mid = tampered.len() / 2;
    tampered[mid] = if tampered[mid] == 'A' { 'B' } else { 'A' };
    let tampered: String = tampered.into_iter().collect();
    println!(
        "tampered token validates: {:?}",
        validate_token(&tampered, &key, now + 10)
    );

    // Valid strictly before expiry, rejected at the boundary.
    println!(
        "one second before expiry: {:?}",
        validate_token(&encoded, &key, now + 3599).map(|c| c.user_id)
    );
    println!(
        "at the expiry instant:    {:?}",
        validate_token(&encoded, &key, now + 3600)
    );
}
