pub mod cayley;
pub mod circuit;
pub mod error;
pub mod haar_stats;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod reduction;
pub mod scalar;
