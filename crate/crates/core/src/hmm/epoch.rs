use crate::features::FeatureSequence;
use crate::ingest::LabelSet;
use crate::EventClass;

/// Fixed-length run of feature frames carrying one reference label.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub channel_label: String,
    pub reference_class: EventClass,
    dims: usize,
    data: Vec<f64>,
}

impl Epoch {
    pub fn new(channel_label: impl Into<String>, reference_class: EventClass, dims: usize, data: Vec<f64>) -> Self {
        assert!(dims > 0 && data.len() % dims == 0, "data is not a whole number of frames");
        Epoch {
            channel_label: channel_label.into(),
            reference_class,
            dims,
            data,
        }
    }

    pub fn from_rows(reference_class: EventClass, rows: &[Vec<f64>]) -> Self {
        let dims = rows.first().map_or(1, Vec::len);
        Epoch::new("", reference_class, dims, rows.concat())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dims)
    }
}

/// Cuts `seq` into consecutive epochs of `epoch_frames` frames. Each epoch
/// takes the class with the largest overlap of its time span
/// `[e * k * frame_s, (e + 1) * k * frame_s)`; epochs no label overlaps and
/// a trailing partial epoch are dropped.
pub fn epochs_from_sequence(seq: &FeatureSequence, labels: &LabelSet, epoch_frames: usize) -> Vec<Epoch> {
    let k = epoch_frames.max(1);
    let span = k as f64 * seq.frame_s;
    (0..seq.len() / k)
        .filter_map(|e| {
            let start = e as f64 * span;
            let class = labels.majority_class(start, start + span)?;
            let data = seq.as_slice()[e * k * seq.dims()..(e + 1) * k * seq.dims()].to_vec();
            Some(Epoch::new(seq.channel_label.clone(), class, seq.dims(), data))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_labels;

    #[test]
    fn majority_labelling_and_trailing_drop() {
        let seq = FeatureSequence::from_rows("C3", 0.1, 1, (0..35).map(f64::from).collect());
        let labels = parse_labels("0 1.6 BCKG\n1.6 3.0 SEIZ").unwrap();
        let epochs = epochs_from_sequence(&seq, &labels, 10);
        assert_eq!(epochs.len(), 3);
        assert_eq!(epochs[0].reference_class, EventClass::Bckg);
        // 1.0..2.0 overlaps BCKG 0.6 s, SEIZ 0.4 s
        assert_eq!(epochs[1].reference_class, EventClass::Bckg);
        assert_eq!(epochs[2].reference_class, EventClass::Seiz);
        assert_eq!(epochs[2].frame(0), &[20.0]);
    }

    #[test]
    fn unlabelled_epochs_are_skipped() {
        let seq = FeatureSequence::from_rows("C3", 0.1, 1, vec![0.0; 30]);
        let labels = parse_labels("1.0 2.0 SEIZ").unwrap();
        let epochs = epochs_from_sequence(&seq, &labels, 10);
        assert_eq!(epochs.len(), 1);
    }
}
