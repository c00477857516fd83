use advscape_core::attacks::{fgsm, AttackConfig, AttackKind};
use advscape_core::data::{synth, LabeledDataset, Provenance, SynthConfig};
use advscape_core::metrics::{evaluate, mean_ssim_distance, ssim, top1_accuracy, EvalReport, SsimConfig};
use advscape_core::nn::{LayerSpec, ModelSpec, Network};
use advscape_core::Tensor;
use proptest::prelude::*;

fn image(c: usize, h: usize, w: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(0.0f64..1.0, c * h * w).prop_map(move |v| Tensor::new(vec![c, h, w], v).unwrap())
}

fn pair() -> impl Strategy<Value = (Tensor, Tensor)> {
    (1usize..3, 1usize..12, 1usize..12).prop_flat_map(|(c, h, w)| (image(c, h, w), image(c, h, w)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn identity_and_symmetry((a, b) in pair()) {
        let cfg = SsimConfig::default();
        prop_assert!((ssim(&a, &a, &cfg).unwrap() - 1.0).abs() <= 1e-12);
        let (ab, ba) = (ssim(&a, &b, &cfg).unwrap(), ssim(&b, &a, &cfg).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn constant_images_have_a_closed_form(x in 0.0f64..1.0, y in 0.0f64..1.0, h in 1usize..10, w in 1usize..10) {
        let cfg = SsimConfig::default();
        let a = Tensor::filled(vec![1, h, w], x);
        let b = Tensor::filled(vec![1, h, w], y);
        let c1 = cfg.c1();
        let want = (2.0 * x * y + c1) / (x * x + y * y + c1);
        prop_assert!((ssim(&a, &b, &cfg).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn top1_matches_a_hand_tally() {
    // Identity logits: the prediction is the brightest of the four pixels.
    let spec = ModelSpec::new([1, 1, 4], vec![LayerSpec::dense(4)]).unwrap();
    let mut w = vec![0.0; 20];
    for k in 0..4 {
        w[k * 4 + k] = 1.0;
    }
    let net = Network::new(spec.clone(), spec.init(0).with_values(&w).unwrap()).unwrap();
    let rows: [[f64; 4]; 10] = [
        [0.9, 0.1, 0.1, 0.1],
        [0.1, 0.8, 0.2, 0.0],
        [0.0, 0.0, 0.7, 0.1],
        [0.3, 0.2, 0.1, 0.6],
        [0.5, 0.4, 0.0, 0.0],
        [0.1, 0.2, 0.3, 0.4],
        [0.6, 0.9, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.2, 0.2, 0.9, 0.2],
        [0.4, 0.3, 0.2, 0.1],
    ];
    let labels = vec![0, 1, 2, 0, 0, 3, 0, 3, 1, 2];
    // Predictions 0 1 2 3 0 3 1 3 2 0 → hits at 0, 1, 2, 4, 5, 7.
    let data = LabeledDataset::clean(
        Tensor::new(vec![10, 1, 1, 4], rows.concat()).unwrap(),
        labels,
    )
    .unwrap();
    assert_eq!(top1_accuracy(&net, &data).unwrap(), 0.6);
}

#[test]
fn constant_predictor_scores_zero_or_one() {
    let spec = ModelSpec::new([1, 2, 2], vec![LayerSpec::dense(3)]).unwrap();
    let mut v = vec![0.0; 15];
    v[13] = 5.0;
    let net = Network::new(spec.clone(), spec.init(0).with_values(&v).unwrap()).unwrap();
    let imgs = Tensor::filled(vec![4, 1, 2, 2], 0.3);
    let all = LabeledDataset::clean(imgs.clone(), vec![1; 4]).unwrap();
    let none = LabeledDataset::clean(imgs, vec![2; 4]).unwrap();
    assert_eq!(top1_accuracy(&net, &all).unwrap(), 1.0);
    assert_eq!(top1_accuracy(&net, &none).unwrap(), 0.0);
}

#[test]
fn fgsm_distance_grows_with_radius() {
    let data = synth::generate(&SynthConfig { n: 16, size: 16, seed: 2, ..SynthConfig::default() }).unwrap();
    let net = Network::init(ModelSpec::desk_cnn([1, 16, 16], 4).unwrap(), 3);
    let mut last = 0.0;
    for k in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let cfg = AttackConfig::fgsm().with_epsilon(k / 255.0);
        let adv = fgsm(&net, data.images(), data.labels(), &cfg).unwrap();
        let adv = LabeledDataset::new(adv, data.labels().to_vec(), Provenance::Attack(cfg)).unwrap();
        let d = mean_ssim_distance(&data, &adv, &SsimConfig::default()).unwrap();
        assert!(d > last, "ε = {k}/255: {d} <= {last}");
        last = d;
    }
}

#[test]
fn report_round_trips_through_text() {
    let data = synth::generate(&SynthConfig { n: 8, size: 8, ..SynthConfig::default() }).unwrap();
    let net = Network::init(ModelSpec::desk_cnn([1, 8, 8], 4).unwrap(), 1);
    let cfgs: Vec<_> = AttackKind::ALL.iter().map(|&k| AttackConfig::default_for(k)).collect();
    let mut report = evaluate(&net, &data, &cfgs, &SsimConfig::default()).unwrap();
    report.model = "m".into();
    assert_eq!(EvalReport::from_key_values(&report.to_key_values()).unwrap(), report);
    assert!(report.to_table().contains("STADV"));
}
