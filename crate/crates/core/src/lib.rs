pub mod battery;
pub mod complex;
pub mod curvature;
pub mod error;
pub mod estimates;
pub mod fd;
pub mod manifold;
pub mod oracle;
pub mod pq_metric;
pub mod sampling;
pub mod submanifold;

pub use error::{GeomError, Result};
