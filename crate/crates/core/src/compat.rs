//! Compatibility SDP orchestration.
