//! Inequalities (placeholder).
