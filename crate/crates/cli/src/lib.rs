pub mod config;
pub mod experiments;
pub mod suite;
pub mod table;
