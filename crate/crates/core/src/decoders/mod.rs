//! Instance decoders for dense network outputs.
//!
//! Each decoder turns a dense prediction (flow field, distance map, star
//! polygons, Fourier contours, tiled patches) into a [`LabelMap`](crate::LabelMap)
//! and can be driven from synthetic inputs without a trained model.

pub mod flow;
pub mod fourier;
pub mod modality;
pub mod raster;
pub mod region_grow;
pub mod star;
pub mod stitch;
pub mod watershed;

pub use flow::{decode_flow_field, encode_flow_field, FlowDecodeParams, FlowField};
pub use fourier::{decode_fourier_contours, FourierContour};
pub use modality::{classify_modality_group, ModalityGroup};
pub use region_grow::{region_grow_assign, RegionGrowOutcome};
pub use star::{polygon_nms, rasterize_star_polygons, StarPolygon};
pub use stitch::{stitch_sliding_window, tile_origins, Importance, Tile, TileSpec};
pub use watershed::{distance_transform, marker_watershed, watershed_from_maps, WatershedParams};
