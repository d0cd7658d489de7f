pub mod cover;
pub mod metric;
pub mod real;
pub mod snake;
pub mod hierarchy;
pub mod chains;
pub mod convex;
pub mod separating;
pub mod search;
pub mod io;
pub mod presets;
