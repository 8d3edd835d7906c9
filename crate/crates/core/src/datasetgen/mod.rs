//! Class enumeration, frame selection, augmentation, splits and manifests.

pub mod generate;
pub mod grid;
pub mod layout;
pub mod manifest;
pub mod paramfile;
pub mod select;
pub mod split;

pub use generate::{augmentation_for, episode_seed, generate_class, ClassOutput, GeneratedImage, GenerationContext};
pub use grid::{class_seed, enumerate_classes, ClassSpec, GridAxis, ParameterGrid};
pub use layout::{ensure_empty, generate_dataset, image_path, paramfile_path, DatasetConfig, PARAMS_DIR};
pub use manifest::{build_manifest, DatasetManifest, ManifestMeta, ManifestRow, MANIFEST_FILE, META_FILE};
pub use paramfile::{parse_paramfile, read_class_paramfile, render_paramfile, write_class_paramfile};
pub use select::{select_frames, select_steps, SelectionPolicy};
pub use split::{assign_splits, Split, SplitRatios};
