//! Contour-guided deformation of blendshape meshes.
//!
//! A rig is posed and rendered from the front; contours of a user sketch are
//! evolved as active contours ("snakes") over that render, and the distance
//! each snake point travels is turned into soft-select edits of the mesh so
//! that its rendered contours move toward the sketch.

pub mod deform;
pub mod fixtures;
pub mod image;
pub mod imageproc;
pub mod mesh;
pub mod pipeline;
pub mod raster;
pub mod snake;
pub mod tweakables;

pub use deform::{
    apply_soft_transforms, collect_deltas, resolve_vertex_displacements, DeltaCollection, DeltaField, DeformError,
    PointDelta, Rejection, VertexDisplacement,
};
pub use image::{BinaryImage, GrayImage, ImageError};
pub use imageproc::Contour;
pub use mesh::{ActivationVector, BlendshapeRig, BoundingBox, Mesh, MeshError};
pub use nalgebra::{Point2, Point3, Vector2, Vector3};
pub use pipeline::{AlignmentTransform, PipelineConfig, PipelineError, RunReport};
pub use raster::{CameraFront, RasterError, VertexPixelMap};
pub use snake::{Snake, SnakeError, SnakePair};
pub use tweakables::{ConfigError, FalloffCurve, SnakeMode, Tweakables};
