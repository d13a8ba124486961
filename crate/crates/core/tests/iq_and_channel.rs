use lora_psr::channel::{mix, Channel, ChannelConfig, TrafficModel, TrafficPreset};
use lora_psr::iq::{read_iq, to_c32, to_c64, write_iq, IqFileHeader};
use lora_psr::{upchirp_for, LoraParams};
use num_complex::{Complex32, Complex64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iq_round_trip(sf in 7u8..=12, samples in proptest::collection::vec((any::<f32>(), any::<f32>()), 0..300)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let samples: Vec<Complex32> = samples.into_iter().map(|(re, im)| Complex32::new(re, im)).collect();
        let header = IqFileHeader::new(sf, samples.len());
        write_iq(&path, &header, &samples).unwrap();
        let (h, back) = read_iq(&path).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back.len(), samples.len());
        for (a, b) in back.iter().zip(&samples) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn channel_is_deterministic(seed in any::<u64>(), snr in -20.0f64..10.0) {
        let p = LoraParams::new(7).unwrap();
        let signal: Vec<Complex64> = (0..6).flat_map(|s| upchirp_for(&p, s * 11).unwrap().into_inner()).collect();
        let cfg = ChannelConfig { snr_db: snr, traffic: TrafficModel::preset(TrafficPreset::High), seed };
        let a = Channel::new(cfg.clone(), p).unwrap().apply(&signal);
        let b = Channel::new(cfg, p).unwrap().apply(&signal);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mask_is_union_of_nonzero_extents(bursts in proptest::collection::vec((0usize..200, 1usize..80), 0..5)) {
        use lora_psr::channel::{BurstEvent, BurstKind};
        let signal = vec![Complex64::new(0.0, 0.0); 160];
        let rendered: Vec<_> = bursts
            .iter()
            .map(|&(start, len)| {
                let e = BurstEvent { start_chip: start, duration_chips: len, inr_db: 0.0, kind: BurstKind::WifiLike };
                (e, vec![Complex64::new(1.0, 0.0); len])
            })
            .collect();
        let (_, mask) = mix(&signal, &rendered);
        for (k, m) in mask.iter().enumerate() {
            let covered = bursts.iter().any(|&(s, l)| k >= s && k < s + l);
            prop_assert_eq!(*m, covered);
        }
    }
}

#[test]
fn f64_samples_survive_the_f32_file_to_single_precision() {
    let p = LoraParams::new(9).unwrap();
    let x = upchirp_for(&p, 100).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sym.iq");
    write_iq(&path, &IqFileHeader::new(9, x.len()), &to_c32(&x)).unwrap();
    let back = to_c64(&read_iq(&path).unwrap().1);
    for (a, b) in back.iter().zip(x.iter()) {
        assert!((a - b).norm() < 1e-6);
    }
}
