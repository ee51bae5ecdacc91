//! Sharp edges, the software rasterizer and the 5-channel refiner input.

mod crop;
mod edges;
mod grid;
mod input;
mod io;
mod raster;

pub use crop::{crop_and_resize, crop_and_resize_binary, square_window, Sample, CROP_SIZE};
pub use edges::{extract_sharp_edges, SharpEdgeSet, DEFAULT_SHARP_THRESHOLD};
pub use grid::{BinaryImage, ColorImage, DepthImage, Grid};
pub use input::{assemble_refiner_input, RefinerInput, CHANNELS, EDGE_CHANNEL, MASK_CHANNEL};
pub use io::{load_binary_png, load_color_png, save_binary_png, save_color_png};
pub use raster::{
    rasterize, render, render_edges, render_edges_with_width, RenderBuffers, EDGE_DEPTH_BIAS,
    NEAR_PLANE,
};
