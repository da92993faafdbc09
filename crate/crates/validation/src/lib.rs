//! Holds the `acceptance` test target, which checks the numerical
//! acceptance criteria of `bfamily` end to end. Run it with
//! `cargo test -p bfamily-validation --test acceptance`.
