pub mod analyze;
pub mod fit;
pub mod predict;
pub mod report;
pub mod simulate;
