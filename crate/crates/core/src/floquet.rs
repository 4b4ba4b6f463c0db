//! Floquet (placeholder).
