//! Model files: a little-endian binary form (magic `HMM1`) and JSON.
//!
//! Binary layout after the 4-byte magic: `u32` version, `u8` class
//! (0 = SEIZ, 1 = BCKG), `u32` dims, `u32` states, one `u32` mixture size
//! per state, then `f64` initial probabilities, the row-major transition
//! matrix, and per state its weights, means and variances. A `u32`-prefixed
//! JSON blob with the training metadata closes the file.

use super::{DiagGmm, HmmError, HmmModel, TrainingMetadata};
use crate::EventClass;

const MAGIC: &[u8; 4] = b"HMM1";
const VERSION: u32 = 1;

pub fn model_to_bytes(model: &HmmModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match model.class_tag {
        EventClass::Seiz => 0,
        EventClass::Bckg => 1,
    });
    put_u32(&mut out, model.dims);
    put_u32(&mut out, model.num_states());
    for g in &model.states {
        put_u32(&mut out, g.components());
    }
    let mut put = |v: &f64| out.extend_from_slice(&v.to_le_bytes());
    model.initial.iter().for_each(&mut put);
    model.transitions.iter().flatten().for_each(&mut put);
    for g in &model.states {
        g.weights.iter().for_each(&mut put);
        g.means.iter().flatten().for_each(&mut put);
        g.variances.iter().flatten().for_each(&mut put);
    }
    let meta = serde_json::to_vec(&model.trained_on).expect("metadata serializes");
    put_u32(&mut out, meta.len());
    out.extend_from_slice(&meta);
    out
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HmmError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| HmmError::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, HmmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, HmmError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| HmmError::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn rows(&mut self, n: usize, width: usize) -> Result<Vec<Vec<f64>>, HmmError> {
        (0..n).map(|_| self.f64s(width)).collect()
    }
}

/// Parses a binary model. With `expected_dims` set, a model over a
/// different feature dimension is rejected.
pub fn model_from_bytes(bytes: &[u8], expected_dims: Option<usize>) -> Result<HmmModel, HmmError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(HmmError::Format("bad magic, expected HMM1".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(HmmError::Format(format!("unsupported version {version}")));
    }
    let class_tag = match r.take(1)?[0] {
        0 => EventClass::Seiz,
        1 => EventClass::Bckg,
        c => return Err(HmmError::Format(format!("unknown class code {c}"))),
    };
    let dims = r.u32()?;
    check_dims(dims, expected_dims)?;
    let s = r.u32()?;
    let mixtures = (0..s).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let initial = r.f64s(s)?;
    let transitions = r.rows(s, s)?;
    let mut states = Vec::with_capacity(s);
    for &m in &mixtures {
        states.push(DiagGmm {
            weights: r.f64s(m)?,
            means: r.rows(m, dims)?,
            variances: r.rows(m, dims)?,
        });
    }
    let len = r.u32()?;
    let trained_on: TrainingMetadata =
        serde_json::from_slice(r.take(len)?).map_err(|e| HmmError::Format(format!("metadata: {e}")))?;
    if r.pos != bytes.len() {
        return Err(HmmError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let mut model = HmmModel::new(class_tag, initial, transitions, states)?;
    if model.dims != dims {
        return Err(HmmError::Format(format!("header says {dims} dims, parameters have {}", model.dims)));
    }
    model.trained_on = trained_on;
    Ok(model)
}

pub fn model_to_json(model: &HmmModel) -> String {
    serde_json::to_string_pretty(model).expect("model serializes")
}

pub fn model_from_json(text: &str, expected_dims: Option<usize>) -> Result<HmmModel, HmmError> {
    let raw: HmmModel = serde_json::from_str(text).map_err(|e| HmmError::Format(e.to_string()))?;
    check_dims(raw.dims, expected_dims)?;
    let mut model = HmmModel::new(raw.class_tag, raw.initial, raw.transitions, raw.states)?;
    if model.dims != raw.dims {
        return Err(HmmError::Format(format!(
            "declared {} dims, parameters have {}",
            raw.dims, model.dims
        )));
    }
    model.trained_on = raw.trained_on;
    Ok(model)
}

fn check_dims(found: usize, expected: Option<usize>) -> Result<(), HmmError> {
    match expected {
        Some(expected) if expected != found => Err(HmmError::DimensionMismatch { expected, found }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> HmmModel {
        let mut m = HmmModel::new(
            EventClass::Bckg,
            vec![1.0, 0.0],
            vec![vec![0.75, 0.25], vec![0.0, 1.0]],
            vec![
                DiagGmm::single(vec![0.1, -0.2], vec![1.5, 0.5]),
                DiagGmm {
                    weights: vec![0.4, 0.6],
                    means: vec![vec![1.0, 2.0], vec![3.0, 1e-300]],
                    variances: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
                },
            ],
        )
        .unwrap();
        m.trained_on.montage_tags = vec!["LE".into()];
        m.trained_on.history = vec![vec![-10.0, -9.5]];
        m
    }

    #[test]
    fn binary_round_trip() {
        let m = model();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..4], b"HMM1");
        assert_eq!(model_from_bytes(&bytes, Some(2)).unwrap(), m);
    }

    #[test]
    fn json_round_trip() {
        let m = model();
        assert_eq!(model_from_json(&model_to_json(&m), None).unwrap(), m);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let m = model();
        assert_eq!(
            model_from_bytes(&model_to_bytes(&m), Some(26)),
            Err(HmmError::DimensionMismatch { expected: 26, found: 2 })
        );
        assert!(matches!(
            model_from_json(&model_to_json(&m), Some(26)),
            Err(HmmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_corruption() {
        let bytes = model_to_bytes(&model());
        assert!(matches!(model_from_bytes(&bytes[..bytes.len() - 3], None), Err(HmmError::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(model_from_bytes(&bad, None), Err(HmmError::Format(_))));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(model_from_bytes(&long, None), Err(HmmError::Format(_))));
    }
}
