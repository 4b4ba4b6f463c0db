//! Semiclassical (placeholder).
