pub mod analyze;
pub mod simulate;
pub mod sweep;
pub mod transform;
