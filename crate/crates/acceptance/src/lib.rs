//! Acceptance checks for `orthombo` live in `tests/acceptance.rs`.
