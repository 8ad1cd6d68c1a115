//! Dataset schema, on-disk layout, synthetic generation and subject splits.

mod io;
mod joints;
mod sample;
mod split;
pub mod synth;
mod volume;

pub use io::{
    load_dataset, read_frame_stream, read_hpv, read_skel_json, save_dataset, write_frame_stream, write_hpv,
    write_skel_json, LoadedDataset,
};
pub use joints::{JointId, DESIGNATED_JOINTS, NUM_JOINTS};
pub use sample::{Dataset, SampleKey, SignSample, SkeletonFrame};
pub use split::{audit_split, split_adaptation, split_cross_subject, Split};
pub use synth::{generate_synthetic, SynthConfig};
pub use volume::HandVolume;
