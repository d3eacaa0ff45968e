mod support;

use candle_core::{DType, Device, Tensor};
use pf_core::data::{EmbeddingMatrix, Vocabulary};
use pf_core::tpn::{masked_softmax, ConditioningSequence, DecoderState, TpnConfig, TpnModel};
use proptest::prelude::*;

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.to_dtype(DType::F64).unwrap().to_vec2::<f64>().unwrap()
}

/// Scores plus a mask with at least one valid position per row.
fn scored_rows() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    (1usize..5, 1usize..9).prop_flat_map(|(batch, len)| {
        (
            prop::collection::vec(prop::collection::vec(-30.0..30.0f64, len), batch),
            prop::collection::vec((0..len, prop::collection::vec(any::<bool>(), len)), batch),
        )
            .prop_map(|(scores, masks)| {
                let masks = masks
                    .into_iter()
                    .map(|(keep, mut m)| {
                        m[keep] = true;
                        m
                    })
                    .collect();
                (scores, masks)
            })
    })
}

fn to_tensor(v: &[Vec<f64>]) -> Tensor {
    let flat: Vec<f64> = v.iter().flatten().copied().collect();
    Tensor::from_vec(flat, (v.len(), v[0].len()), &Device::Cpu).unwrap()
}

fn mask_tensor(m: &[Vec<bool>]) -> Tensor {
    to_tensor(&m.iter().map(|r| r.iter().map(|&b| b as u8 as f64).collect()).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn weights_form_a_distribution_over_valid_tokens((scores, masks) in scored_rows()) {
        let alpha = rows(&masked_softmax(&to_tensor(&scores), &mask_tensor(&masks)).unwrap());
        for (row, mask) in alpha.iter().zip(&masks) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            for (a, &valid) in row.iter().zip(mask) {
                if valid {
                    prop_assert!(*a >= 0.0);
                } else {
                    prop_assert_eq!(*a, 0.0);
                }
            }
        }
    }

    #[test]
    fn equal_scores_give_uniform_weights((scores, masks) in scored_rows(), level in -20.0..20.0f64) {
        let flat: Vec<Vec<f64>> = scores.iter().map(|r| vec![level; r.len()]).collect();
        let alpha = rows(&masked_softmax(&to_tensor(&flat), &mask_tensor(&masks)).unwrap());
        for (row, mask) in alpha.iter().zip(&masks) {
            let valid = mask.iter().filter(|&&v| v).count() as f64;
            for (a, &v) in row.iter().zip(mask) {
                let want = if v { 1.0 / valid } else { 0.0 };
                prop_assert!((a - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn seeded_random_cases() {
    support::attention::random_masked_softmax(1000, 31);
}

fn unit_model(config: TpnConfig) -> TpnModel {
    let vocab = Vocabulary::from_texts(["first second third"]);
    let rows = vocab.len();
    TpnModel::new(config, vocab, &EmbeddingMatrix::zeros(rows), DType::F64).unwrap()
}

fn set(model: &TpnModel, name: &str, values: &[f64], shape: &[usize]) {
    let t = Tensor::from_slice(values, shape, &Device::Cpu).unwrap();
    model.generator_params().get(name).unwrap().var.set(&t).unwrap();
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn hand_set_two_token_attention() {
    let model = unit_model(TpnConfig {
        encoder_hidden: 1,
        condition_dim: 1,
        decoder_hidden: 1,
        attention_dim: 1,
        discriminator_hidden: vec![],
    });
    let (a, b, c) = (0.8, -0.3, 1.7);
    set(&model, "attention.state.weight", &[a], &[1, 1]);
    set(&model, "attention.state.bias", &[b], &[1]);
    set(&model, "attention.condition.weight", &[c], &[1, 1]);
    set(&model, "attention.score.weight", &[2.5], &[1, 1]);

    let c_hat = Tensor::from_slice(&[1.0, -1.0], (1, 2, 1), &Device::Cpu).unwrap();
    let mask = Tensor::from_slice(&[1.0, 1.0], (1, 2), &Device::Cpu).unwrap();
    let cond = ConditioningSequence {
        c_bar: c_hat.mean(1).unwrap(),
        c_hat,
        mask,
    };
    let s = 0.5;
    let state = DecoderState {
        s: Tensor::from_slice(&[s], (1, 1), &Device::Cpu).unwrap(),
        last_color: Tensor::zeros((1, 3), DType::F64, &Device::Cpu).unwrap(),
        step: 0,
    };
    let (context, alpha) = model.attention(&state, &cond).unwrap();
    let e = [1.0, -1.0].map(|cj| 2.5 * sigmoid(a * s + b + c * cj));
    let z = e[0].exp() + e[1].exp();
    let want = [e[0].exp() / z, e[1].exp() / z];
    let got = rows(&alpha)[0].clone();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
    }
    let ctx = context.to_vec2::<f64>().unwrap()[0][0];
    assert!((ctx - (want[0] - want[1])).abs() < 1e-12);
}

#[test]
fn zero_score_vector_attends_uniformly_inside_the_model() {
    let model = unit_model(TpnConfig {
        encoder_hidden: 4,
        condition_dim: 3,
        decoder_hidden: 5,
        attention_dim: 6,
        discriminator_hidden: vec![],
    });
    model.init_weights(0.3, 9).unwrap();
    set(&model, "attention.score.weight", &[0.0; 6], &[1, 6]);
    let ids = vec![vec![1, 2, 3], vec![2]];
    let (x, mask) = model.embed_ids(&ids).unwrap();
    let eps = model.zero_noise(2, 3).unwrap();
    let out = model.generate(&x, &mask, &eps).unwrap();
    let alpha = out.attention.to_vec3::<f64>().unwrap();
    for step in &alpha[0] {
        assert!(step.iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-12), "{step:?}");
    }
    for step in &alpha[1] {
        assert_eq!(step[0], 1.0);
        assert_eq!(&step[1..], &[0.0, 0.0]);
    }
}
