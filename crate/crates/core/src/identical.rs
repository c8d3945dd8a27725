//! Identical particles.
