pub mod chains;
pub mod compression;
pub mod economics;
pub mod grid;
pub mod radio;
pub mod routing;
pub mod scenario;
