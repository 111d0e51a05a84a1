pub mod basis;
pub mod field;
pub mod geometry;
pub mod lifting;
pub mod oracle;
pub mod scenes_io;
pub mod service;
pub mod sim;
