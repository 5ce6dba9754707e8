use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::EventClass;

/// Probabilities are clamped to `[DEVIATE_CLAMP, 1 - DEVIATE_CLAMP]` before
/// conversion to normal deviates so the curve's endpoints stay finite.
pub const DEVIATE_CLAMP: f64 = 1e-6;

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9). Returns infinities at 0 and 1.
pub fn probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub p_fa: f64,
    pub p_miss: f64,
    /// Epochs with margin at or above the threshold are called SEIZ.
    pub threshold: f64,
}

impl DetPoint {
    pub fn deviate_fa(&self) -> f64 {
        probit(self.p_fa.clamp(DEVIATE_CLAMP, 1.0 - DEVIATE_CLAMP))
    }

    pub fn deviate_miss(&self) -> f64 {
        probit(self.p_miss.clamp(DEVIATE_CLAMP, 1.0 - DEVIATE_CLAMP))
    }
}

/// Detection error tradeoff curve, ordered by increasing threshold: false
/// alarms fall and misses rise along the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

impl DetCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p_fa,p_miss,deviate_fa,deviate_miss,threshold\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.p_fa,
                p.p_miss,
                p.deviate_fa(),
                p.deviate_miss(),
                p.threshold
            ));
        }
        out
    }

    /// Point where false-alarm and miss rates are closest.
    pub fn equal_error_point(&self) -> &DetPoint {
        self.points
            .iter()
            .min_by(|a, b| (a.p_fa - a.p_miss).abs().total_cmp(&(b.p_fa - b.p_miss).abs()))
            .expect("curve has endpoints")
    }
}

/// Sweeps every distinct margin as a threshold, then closes the curve with
/// a `+inf` threshold at `(0, 1)`.
pub fn det_curve(margins: &[(EventClass, f64)]) -> Result<DetCurve, EvalError> {
    if margins.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut seiz: Vec<f64> = margins.iter().filter(|m| m.0 == EventClass::Seiz).map(|m| m.1).collect();
    let mut bckg: Vec<f64> = margins.iter().filter(|m| m.0 == EventClass::Bckg).map(|m| m.1).collect();
    if seiz.is_empty() {
        return Err(EvalError::SingleClassInput(EventClass::Bckg));
    }
    if bckg.is_empty() {
        return Err(EvalError::SingleClassInput(EventClass::Seiz));
    }
    seiz.sort_by(f64::total_cmp);
    bckg.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = margins.iter().map(|m| m.1).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let (ns, nb) = (seiz.len() as f64, bckg.len() as f64);
    let points = thresholds
        .into_iter()
        .map(|th| {
            let missed = seiz.partition_point(|&m| m < th);
            let below = bckg.partition_point(|&m| m < th);
            DetPoint {
                p_fa: (bckg.len() - below) as f64 / nb,
                p_miss: missed as f64 / ns,
                threshold: th,
            }
        })
        .collect();
    Ok(DetCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};
    use EventClass::{Bckg, Seiz};

    #[test]
    fn probit_matches_reference_inverse_cdf() {
        let n = Normal::new(0.0, 1.0).unwrap();
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            assert!((probit(p) - n.inverse_cdf(p)).abs() < 1e-7, "p = {p}");
        }
        for p in [1e-9, 1e-6, 1e-3, 0.02425, 0.97575, 1.0 - 1e-6] {
            assert!((probit(p) - n.inverse_cdf(p)).abs() < 1e-7, "p = {p}");
        }
        assert_eq!(probit(0.5), 0.0);
        assert_eq!(probit(0.0), f64::NEG_INFINITY);
        assert!(probit(1.5).is_nan());
    }

    #[test]
    fn perfect_separation_touches_origin() {
        let m = [(Seiz, 3.0), (Seiz, 2.0), (Bckg, -1.0), (Bckg, 0.5)];
        let c = det_curve(&m).unwrap();
        assert!(c.points.iter().any(|p| p.p_fa == 0.0 && p.p_miss == 0.0));
    }

    #[test]
    fn equal_margins_give_two_points() {
        let m = [(Seiz, 1.0), (Bckg, 1.0), (Seiz, 1.0)];
        let c = det_curve(&m).unwrap();
        let pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.p_fa, p.p_miss)).collect();
        assert_eq!(pts, vec![(1.0, 0.0), (0.0, 1.0)]);
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(det_curve(&[(Seiz, 1.0)]), Err(EvalError::SingleClassInput(Seiz)));
    }

    #[test]
    fn monotone_and_matches_direct_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m: Vec<(EventClass, f64)> = (0..300)
            .map(|i| {
                let c = if i % 3 == 0 { Seiz } else { Bckg };
                (c, (rng.random::<f64>() * 20.0).round() / 4.0)
            })
            .collect();
        let c = det_curve(&m).unwrap();
        for w in c.points.windows(2) {
            assert!(w[1].p_fa <= w[0].p_fa && w[1].p_miss >= w[0].p_miss);
        }
        let ns = m.iter().filter(|x| x.0 == Seiz).count() as f64;
        let nb = m.len() as f64 - ns;
        for p in &c.points {
            let miss = m.iter().filter(|x| x.0 == Seiz && x.1 < p.threshold).count() as f64 / ns;
            let fa = m.iter().filter(|x| x.0 == Bckg && x.1 >= p.threshold).count() as f64 / nb;
            assert_eq!((p.p_fa, p.p_miss), (fa, miss));
        }
        assert_eq!((c.points[0].p_fa, c.points[0].p_miss), (1.0, 0.0));
        let last = c.points.last().unwrap();
        assert_eq!((last.p_fa, last.p_miss), (0.0, 1.0));
    }

    #[test]
    fn interleaved_margins_stay_near_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 2000;
        let m: Vec<(EventClass, f64)> = (0..n)
            .map(|i| (if i % 2 == 0 { Seiz } else { Bckg }, rng.random::<f64>()))
            .collect();
        let c = det_curve(&m).unwrap();
        // two-sample Kolmogorov-Smirnov critical value at alpha = 0.001
        let band = 1.95 * (2.0 / (n as f64 / 2.0)).sqrt();
        for p in &c.points {
            assert!((p.p_fa + p.p_miss - 1.0).abs() < band, "{p:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let c = det_curve(&[(Seiz, 1.0), (Bckg, 0.0)]).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "p_fa,p_miss,deviate_fa,deviate_miss,threshold");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",inf"));
    }

    #[test]
    fn order_invariant() {
        let m = vec![(Seiz, 0.3), (Bckg, 0.1), (Seiz, -0.2), (Bckg, 0.7)];
        let mut r = m.clone();
        r.reverse();
        assert_eq!(det_curve(&m), det_curve(&r));
    }
}
