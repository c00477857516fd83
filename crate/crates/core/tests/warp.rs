use advscape_core::attacks::{bilinear_warp, FlowField};
use advscape_core::Tensor;
use proptest::prelude::*;

/// Sum over every integer neighbour `q` of `x(q)·max(0, 1−|u−q_u|)·max(0, 1−|v−q_v|)`,
/// with out-of-range `q` replicating the border.
fn oracle(image: &Tensor, flow: &FlowField) -> Vec<f64> {
    let [c, h, w] = [image.shape()[0], image.shape()[1], image.shape()[2]];
    let mut out = vec![0.0; c * h * w];
    let reach = 8isize;
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let (du, dv) = flow.get(i, j);
                let (u, v) = (i as f64 + du, j as f64 + dv);
                let mut acc = 0.0;
                for qu in -reach..h as isize + reach {
                    let wu = (1.0 - (u - qu as f64).abs()).max(0.0);
                    if wu == 0.0 {
                        continue;
                    }
                    for qv in -reach..w as isize + reach {
                        let wv = (1.0 - (v - qv as f64).abs()).max(0.0);
                        if wv == 0.0 {
                            continue;
                        }
                        let r = qu.clamp(0, h as isize - 1) as usize;
                        let s = qv.clamp(0, w as isize - 1) as usize;
                        acc += image.data()[(ch * h + r) * w + s] * wu * wv;
                    }
                }
                out[(ch * h + i) * w + j] = acc;
            }
        }
    }
    out
}

fn image_and_flow() -> impl Strategy<Value = (Tensor, FlowField)> {
    (1usize..3, 1usize..7, 1usize..7).prop_flat_map(|(c, h, w)| {
        (
            prop::collection::vec(0.0f64..1.0, c * h * w),
            prop::collection::vec(-3.0f64..3.0, h * w * 2),
        )
            .prop_map(move |(px, fl)| {
                (
                    Tensor::new(vec![c, h, w], px).unwrap(),
                    FlowField::new(h, w, fl).unwrap(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_the_neighbour_sum((image, flow) in image_and_flow()) {
        let warped = bilinear_warp(&image, &flow).unwrap();
        for (a, b) in warped.data().iter().zip(oracle(&image, &flow)) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_flow_is_identity((image, flow) in image_and_flow()) {
        let zero = FlowField::zeros(flow.height(), flow.width());
        prop_assert_eq!(bilinear_warp(&image, &zero).unwrap(), image);
    }

    #[test]
    fn integer_flow_shifts_pixels((image, _) in image_and_flow()) {
        let [c, h, w] = [image.shape()[0], image.shape()[1], image.shape()[2]];
        let flow = FlowField::new(h, w, [1.0, -1.0].repeat(h * w)).unwrap();
        let warped = bilinear_warp(&image, &flow).unwrap();
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let src = (ch * h + (i + 1).min(h - 1)) * w + j.saturating_sub(1);
                    prop_assert_eq!(warped.data()[(ch * h + i) * w + j], image.data()[src]);
                }
            }
        }
    }
}

#[test]
fn mismatched_flow_is_rejected() {
    let image = Tensor::zeros(vec![1, 4, 4]);
    assert!(bilinear_warp(&image, &FlowField::zeros(4, 3)).is_err());
}
