pub mod analysis;
pub mod bgp;
pub mod ecmp;
pub mod inference;
pub mod io;
pub mod lg;
pub mod model;
pub mod sim;
