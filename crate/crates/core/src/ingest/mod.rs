//! Recording ingestion: EDF files, label files and synthetic EEG.

mod edf;
mod labels;
mod recording;
mod synth;

pub use edf::{parse_edf, write_edf, EdfError};
pub use labels::{parse_labels, LabelError, LabelEvent, LabelSet};
pub use recording::{ChannelSignal, Recording, RecordingError};
pub use synth::{
    generate_synthetic, BackgroundProfile, MontageBias, SeizureProfile, SynthConfig, SynthError,
    STANDARD_1020,
};
