pub mod bench;
pub mod gen;
pub mod model;
