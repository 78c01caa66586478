pub mod words;
pub mod stallings;
pub mod fatgraph;
pub mod builder;
pub mod model;
