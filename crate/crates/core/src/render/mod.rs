//! Synthetic novel-view-synthesis bench.
//!
//! An analytic scene of Gaussian density blobs stands in for real captures.
//! Each source camera "encodes" the scene into a frustum-aligned
//! [`FeatureVolume`] holding `(r, g, b, σ)` latents for the cells it can
//! actually see. A target view is rendered by sampling every volume along
//! stratified camera rays, blending the latents with a weight vector, decoding
//! color and density, and compositing front to back.

mod camera;
mod image;
mod renderer;
mod scene;
mod volume;

pub use camera::{sample_close_view, CameraIntrinsics, CameraSampler, Frustum, MAX_CLOSE_VIEW_ATTEMPTS};
pub use image::Image;
pub use renderer::{
    decode, render_ground_truth, render_mean_view, render_novel_view, render_novel_view_with_grad,
    RenderGrad, RenderSettings, DECODER_VALIDITY_FLOOR,
};
pub use scene::{field_query, generate_scene, Blob, RadianceSample, Scene};
pub use volume::{encode_source_view, sample_volume, FeatureVolume, VolumeResolution, VISIBILITY_THRESHOLD};

/// Evaluates `f` for every row index, in parallel when the `parallel`
/// feature is on. Results are returned in row order either way.
pub(crate) fn map_rows<T, F>(rows: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..rows).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..rows).map(f).collect()
    }
}
