//! Real-time destructive mesh tearing with a soft-body particle layer.

pub mod geom;
pub mod mesh;
pub mod skinning;
pub mod tear;
pub mod particles;
pub mod shapes;
pub mod io;
pub mod bench;
pub mod protocol;
pub mod session;
pub mod api;
