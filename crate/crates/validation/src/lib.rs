//! Acceptance suite for the optosync crates; see `tests/acceptance.rs`.
