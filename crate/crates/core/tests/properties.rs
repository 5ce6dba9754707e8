use approx::assert_relative_eq;
use proptest::prelude::*;

use montage_core::features::{deltas, parse_binary, parse_csv, to_binary, to_csv, FeatureConfig, FeatureSequence};
use montage_core::hmm::{model_from_bytes, model_to_bytes, DiagGmm, HmmModel};
use montage_core::ingest::{parse_edf, parse_labels, write_edf, ChannelSignal, LabelEvent, LabelSet, Recording};
use montage_core::normalize::{normalize, NormalizationConfig};
use montage_core::{EventClass, ReferenceScheme};

fn recording(channels: Vec<Vec<f64>>) -> Recording {
    let chans = channels
        .into_iter()
        .enumerate()
        .map(|(i, s)| ChannelSignal::new(format!("EEG {i}"), s))
        .collect();
    Recording::new("prop", 8.0, chans, ReferenceScheme::Unknown).unwrap()
}

prop_compose! {
    fn signals()(ns in 1usize..6, records in 1usize..8)
        (data in prop::collection::vec(prop::collection::vec(-500.0f64..500.0, records * 8), ns)) -> Vec<Vec<f64>> {
        data
    }
}

proptest! {
    #[test]
    fn edf_quantisation_is_stable(data in signals()) {
        let rec = recording(data.clone());
        let once = parse_edf(&write_edf(&rec, 1.0).unwrap()).unwrap();
        let twice = parse_edf(&write_edf(&once, 1.0).unwrap()).unwrap();
        for ((orig, a), b) in data.iter().zip(once.channels()).zip(twice.channels()) {
            prop_assert_eq!(&a.samples, &b.samples);
            let (lo, hi) = orig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let step = (hi - lo).max(1e-9) / 65535.0;
            for (x, y) in orig.iter().zip(&a.samples) {
                prop_assert!((x - y).abs() <= step + 1e-6 * (hi - lo).abs().max(1.0));
            }
        }
    }

    #[test]
    fn deltas_are_linear(a in prop::collection::vec(-10.0f64..10.0, 1..40), k in -3.0f64..3.0, n in 1usize..4) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + i as f64).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| k * x + y).collect();
        let (da, db, dc) = (deltas(&a, n), deltas(&b, n), deltas(&combo, n));
        for t in 0..a.len() {
            assert_relative_eq!(dc[t], k * da[t] + db[t], epsilon = 1e-9);
        }
    }

    #[test]
    fn cmvn_gives_unit_variance(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 26), 3..60)) {
        let seq = FeatureSequence::from_rows("x", 0.1, 26, rows.concat());
        let out = normalize(&seq, &NormalizationConfig::cmvn()).unwrap();
        for j in FeatureConfig::default().layout().spectral_dims() {
            let col: Vec<f64> = seq.column(j).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            if var > 1e-6 {
                let o: Vec<f64> = out.column(j).collect();
                let ov = o.iter().map(|v| v * v).sum::<f64>() / o.len() as f64;
                assert_relative_eq!(ov, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn feature_dumps_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 26), 1..20)) {
        let seq = FeatureSequence::from_rows("FP1-F7", 0.1, 26, rows.concat());
        let bin = parse_binary("FP1-F7", 0.1, &to_binary(&seq)).unwrap();
        let single: Vec<f64> = seq.as_slice().iter().map(|&v| v as f32 as f64).collect();
        prop_assert_eq!(bin.as_slice(), &single[..]);
        let csv = parse_csv("FP1-F7", &to_csv(&seq, &FeatureConfig::default().layout())).unwrap();
        prop_assert_eq!(csv.as_slice(), seq.as_slice());
    }

    #[test]
    fn label_text_round_trips(cuts in prop::collection::btree_set(0u32..600, 2..12)) {
        let cuts: Vec<f64> = cuts.into_iter().map(|c| c as f64 * 0.5).collect();
        let events = cuts
            .windows(2)
            .enumerate()
            .map(|(i, w)| LabelEvent {
                start_s: w[0],
                stop_s: w[1],
                class: if i % 2 == 0 { EventClass::Bckg } else { EventClass::Seiz },
            })
            .collect();
        let set = LabelSet::new("r", events).unwrap();
        let back = parse_labels(&set.to_text()).unwrap();
        prop_assert_eq!(back.events(), set.events());
    }

    #[test]
    fn model_bytes_round_trip(mean in -5.0f64..5.0, var in 0.01f64..4.0, stay in 0.05f64..0.95) {
        let gmm = || DiagGmm {
            weights: vec![0.3, 0.7],
            means: vec![vec![mean, -mean], vec![0.0, 1.0]],
            variances: vec![vec![var, 1.0], vec![0.5, var]],
        };
        let model = HmmModel::new(
            EventClass::Bckg,
            vec![1.0, 0.0],
            vec![vec![stay, 1.0 - stay], vec![0.0, 1.0]],
            vec![gmm(), gmm()],
        )
        .unwrap();
        let back = model_from_bytes(&model_to_bytes(&model), Some(2)).unwrap();
        prop_assert_eq!(back, model);
    }
}
