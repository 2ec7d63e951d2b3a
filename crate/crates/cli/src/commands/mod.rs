pub mod analyze;
pub mod bench;
pub mod ed;
pub mod run;
pub mod sweep;
