//! Compatibility-witness algebra.
