//! Topological feature maps for ground-penetrating radar B-scans.
//!
//! The crate turns a B-scan image into a sublevel-set cubical complex,
//! computes its persistent homology over Z/2, and renders every surviving
//! one-dimensional class as a shape whose brightness is proportional to its
//! lifetime. Around that core sit the radar signal chain, a synthetic scene
//! generator, YOLO dataset export and detection metrics.

// `!(x >= 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cubical;
pub mod error;
pub mod export;
pub mod gpr;
pub mod image;
pub mod metrics;
pub mod persistence;
pub mod pipeline;
pub mod shape_map;
pub mod synth;

pub use cubical::{betti_oracle, build_sublevel_complex, FilteredComplex};
pub use error::{Error, Result};
pub use image::GrayImage;
pub use persistence::{betti_curve, compute_persistence, compute_persistence_with, PersistenceDiagram, PersistencePair, Reduction};
pub use shape_map::{fuse, render_shape_map, topo_pipeline, FusedImage, RenderMode, ShapeMap, TopoConfig};
