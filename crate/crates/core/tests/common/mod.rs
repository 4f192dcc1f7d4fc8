//! Checks shared by the acceptance suite and the focused integration tests.
#![allow(dead_code)]

use driftcl::data::{build_stream, generate_samples, DriftGenConfig, Sample, TaskStream};
use driftcl::eval::{run_strategy, AccuracyMatrix, TrainConfig};
use driftcl::nn::{Mlp, ModelConfig};
use driftcl::strategies::{
    agem_project, build, ewc_penalty, ewc_penalty_grad, BuildContext, EwcAnchor, GDumbMemory, GssBuffer,
    GssConfig, SiState, StrategyKind, StrategyParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn sample(features: Vec<f64>, label: usize, task_id: u32) -> Sample {
    Sample {
        features,
        target_raw: (label as f64 + 0.5) / 10.0,
        label,
        task_id,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error of the analytic gradient against central
/// differences (h = 1e-5) on a [10, 8, 8, 10] net: 20 random parameter
/// probes for each of 5 random batches.
pub fn gradient_check_max_rel_err() -> f64 {
    let h = 1e-5;
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for batch_no in 0..5u64 {
        let mut model = Mlp::new(&ModelConfig {
            input_dim: 10,
            hidden_sizes: vec![8, 8],
            n_classes: 10,
            seed: 100 + batch_no,
        })
        .unwrap();
        // random biases keep pre-activations away from the ReLU kink at 0
        for p in model.params_mut() {
            *p += 0.05 * r.sample::<f64, _>(StandardNormal);
        }
        let bsize = 1 + batch_no as usize;
        let xs: Vec<Vec<f64>> = (0..bsize).map(|_| normal_vec(&mut r, 10)).collect();
        let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let labels: Vec<usize> = (0..bsize).map(|_| r.random_range(0..10)).collect();
        let (_, grad) = model.data_gradient(&inputs, &labels).unwrap();
        for _ in 0..20 {
            let i = r.random_range(0..model.param_count());
            let orig = model.params()[i];
            model.params_mut()[i] = orig + h;
            let up = model.data_gradient(&inputs, &labels).unwrap().0;
            model.params_mut()[i] = orig - h;
            let down = model.data_gradient(&inputs, &labels).unwrap().0;
            model.params_mut()[i] = orig;
            worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * h)));
        }
    }
    worst
}

/// Count of A-GEM property violations over `n` random pairs per dimension.
pub fn agem_violations(n: usize) -> usize {
    let mut r = rng(22);
    let mut bad = 0;
    for dim in [2usize, 10, 512] {
        for _ in 0..n {
            let g = normal_vec(&mut r, dim);
            let g_ref = normal_vec(&mut r, dim);
            let v = agem_project(&g, &g_ref).unwrap();
            let d: f64 = v.iter().zip(&g_ref).map(|(a, b)| a * b).sum();
            let agree: f64 = g.iter().zip(&g_ref).map(|(a, b)| a * b).sum();
            if d < -1e-10 || (agree >= 0.0 && v != g) {
                bad += 1;
            }
        }
    }
    bad
}

pub fn random_lower_triangular(r: &mut ChaCha8Rng, t: usize) -> AccuracyMatrix {
    let rows = (1..=t)
        .map(|i| (0..i).map(|_| r.random::<f64>()).collect())
        .collect();
    AccuracyMatrix::from_rows(rows).unwrap()
}

/// Average accuracy straight from its definition, 1-based.
pub fn brute_avg_acc(a: &[Vec<f64>], t: usize) -> f64 {
    let mut s = 0.0;
    for j in 1..=t {
        s += a[t - 1][j - 1];
    }
    s / t as f64
}

/// Average forgetting straight from its definition, 1-based:
/// mean over j < t of max_{j <= l < t} a[l][j] - a[t][j].
pub fn brute_avg_forgetting(a: &[Vec<f64>], t: usize) -> f64 {
    if t == 1 {
        return 0.0;
    }
    let mut s = 0.0;
    for j in 1..t {
        let mut best = f64::NEG_INFINITY;
        for l in j..t {
            if a[l - 1][j - 1] > best {
                best = a[l - 1][j - 1];
            }
        }
        s += best - a[t - 1][j - 1];
    }
    s / (t - 1) as f64
}

/// Largest metric discrepancy against the brute-force sums over `n` random
/// matrices, plus whether forgetting at t = 1 was always exactly 0.
pub fn metric_oracle(n: usize) -> (f64, bool) {
    use driftcl::eval::{avg_accuracy, avg_forgetting};
    let mut r = rng(33);
    let mut worst: f64 = 0.0;
    let mut first_zero = true;
    for _ in 0..n {
        let t = r.random_range(1..=8);
        let m = random_lower_triangular(&mut r, t);
        for k in 1..=t {
            worst = worst.max((avg_accuracy(&m, k).unwrap() - brute_avg_acc(m.rows(), k)).abs());
            worst = worst.max((avg_forgetting(&m, k).unwrap() - brute_avg_forgetting(m.rows(), k)).abs());
        }
        first_zero &= avg_forgetting(&m, 1).unwrap() == 0.0;
    }
    (worst, first_zero)
}

pub struct PenaltyReport {
    pub ewc_zero_at_anchor: bool,
    pub si_zero_at_anchor: bool,
    pub ewc_positive_off_anchor: bool,
    pub si_positive_off_anchor: bool,
    pub ewc_grad_max_abs_err: f64,
}

pub fn penalty_checks() -> PenaltyReport {
    let mut r = rng(44);
    let n = 30;
    let anchors: Vec<EwcAnchor> = (0..2)
        .map(|_| EwcAnchor {
            params: normal_vec(&mut r, n),
            fisher: (0..n)
                .map(|i| if i % 7 == 3 { 0.0 } else { r.random::<f64>() })
                .collect(),
        })
        .collect();
    let lambda = 0.5;

    // single anchor: zero exactly at θ*
    let one = std::slice::from_ref(&anchors[0]);
    let ewc_zero_at_anchor = ewc_penalty(one, lambda, &anchors[0].params).unwrap() == 0.0;
    let mut ewc_positive_off_anchor = true;
    for i in 0..n {
        if anchors[0].fisher[i] > 0.0 {
            let mut p = anchors[0].params.clone();
            p[i] += 1e-3;
            ewc_positive_off_anchor &= ewc_penalty(one, lambda, &p).unwrap() > 0.0;
        }
    }

    let mut si = SiState::new(&normal_vec(&mut r, n), 1.0, 1e-7);
    for _ in 0..10 {
        let g = normal_vec(&mut r, n);
        let d: Vec<f64> = g.iter().map(|x| -0.01 * x).collect();
        si.on_step(&g, &d).unwrap();
    }
    let end: Vec<f64> = si.theta_task_start.iter().map(|x| x + 0.1).collect();
    si.consolidate(&end).unwrap();
    let si_zero_at_anchor = si.penalty(&end).unwrap() == 0.0;
    let mut si_positive_off_anchor = true;
    for i in 0..n {
        if si.importance[i] > 0.0 {
            let mut p = end.clone();
            p[i] -= 1e-3;
            si_positive_off_anchor &= si.penalty(&p).unwrap() > 0.0;
        }
    }

    let theta = normal_vec(&mut r, n);
    let mut grad = vec![0.0; n];
    ewc_penalty_grad(&anchors, lambda, &theta, &mut grad);
    let h = 1e-5;
    let mut ewc_grad_max_abs_err: f64 = 0.0;
    for i in 0..n {
        let mut up = theta.clone();
        up[i] += h;
        let mut down = theta.clone();
        down[i] -= h;
        let fd = (ewc_penalty(&anchors, lambda, &up).unwrap()
            - ewc_penalty(&anchors, lambda, &down).unwrap())
            / (2.0 * h);
        ewc_grad_max_abs_err = ewc_grad_max_abs_err.max((fd - grad[i]).abs());
    }
    PenaltyReport {
        ewc_zero_at_anchor,
        si_zero_at_anchor,
        ewc_positive_off_anchor,
        si_positive_off_anchor,
        ewc_grad_max_abs_err,
    }
}

/// Run `n` random GDumb inserts; returns (max size seen, evictions from a
/// non-maximal bucket).
pub fn gdumb_insert_stress(n: usize, mem_size: usize, seed: u64) -> (usize, usize) {
    let mut r = rng(seed);
    let mut mem = GDumbMemory::new(mem_size, rng(seed + 1));
    let mut max_len = 0;
    let mut bad = 0;
    for _ in 0..n {
        // skewed class frequencies exercise unequal buckets
        let label = (r.random::<f64>().powi(2) * 10.0) as usize;
        let sizes: Vec<usize> = (0..10).map(|c| mem.size_of(c)).collect();
        let largest = *sizes.iter().max().unwrap();
        if let Some(c) = mem.insert(sample(vec![0.0], label, 0)) {
            if sizes[c] != largest {
                bad += 1;
            }
        }
        max_len = max_len.max(mem.len());
    }
    (max_len, bad)
}

/// Run `n` random GSS inserts; returns (max size seen, any score outside [0, 2]).
pub fn gss_insert_stress(n: usize, mem_size: usize, seed: u64) -> (usize, bool) {
    let mut r = rng(seed);
    let mut model = Mlp::new(&ModelConfig {
        input_dim: 4,
        hidden_sizes: vec![6],
        n_classes: 10,
        seed,
    })
    .unwrap();
    let mut buffer = GssBuffer::new(
        GssConfig {
            mem_size,
            ..GssConfig::default()
        },
        rng(seed + 1),
    );
    let mut max_len = 0;
    let mut out_of_range = false;
    for i in 0..n {
        if i % 50 == 0 {
            // the model moves during training, so scores see changing gradients
            for p in model.params_mut() {
                *p += 0.05 * r.sample::<f64, _>(StandardNormal);
            }
        }
        let s = sample(normal_vec(&mut r, 4), r.random_range(0..10), 0);
        buffer.insert(&s, &model).unwrap();
        max_len = max_len.max(buffer.len());
        out_of_range |= buffer.entries.iter().any(|(_, sc)| !(0.0..=2.0).contains(sc));
    }
    (max_len, out_of_range)
}

pub fn small_stream(seed: u64) -> TaskStream {
    let cfg = DriftGenConfig {
        samples_per_task: 150,
        seed,
        ..DriftGenConfig::default()
    };
    build_stream(generate_samples(&cfg).unwrap(), 0.8, seed).unwrap()
}

/// Strategies configured so that they cannot act, each paired with its name.
pub fn zero_strength_params() -> Vec<(StrategyKind, StrategyParams)> {
    let base = StrategyParams::default();
    let mut out = Vec::new();
    let mut p = base.clone();
    p.ewc.lambda = 0.0;
    out.push((StrategyKind::Ewc, p));
    let mut p = base.clone();
    p.si.lambda = 0.0;
    out.push((StrategyKind::Si, p));
    let mut p = base.clone();
    p.lwf.alpha = 0.0;
    out.push((StrategyKind::Lwf, p));
    let mut p = base.clone();
    p.agem.patterns_per_exp = 0;
    out.push((StrategyKind::Agem, p));
    let mut p = base.clone();
    p.gss.mem_size = 0;
    out.push((StrategyKind::Gss, p));
    let mut p = base;
    p.gdumb.mem_size = 0;
    out.push((StrategyKind::Gdumb, p));
    out
}

/// Strategies whose accuracy matrix differs (bitwise) from Naive's on a
/// small stream with a [10, 16, 16, 10] net and 5 epochs.
pub fn zero_strength_mismatches() -> Vec<StrategyKind> {
    let stream = small_stream(5);
    let model = ModelConfig {
        hidden_sizes: vec![16, 16],
        seed: 77,
        ..ModelConfig::default()
    };
    let train = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let ctx = BuildContext {
        model: model.clone(),
        train: train.clone(),
        seed: 9,
    };
    let run = |kind, params: &StrategyParams| {
        let mut s = build(kind, params, &ctx).unwrap();
        run_strategy(&stream, s.as_mut(), &model, &train, 9)
            .unwrap()
            .matrix
    };
    let naive = run(StrategyKind::Naive, &StrategyParams::default());
    let bits = |m: &AccuracyMatrix| -> Vec<u64> { m.rows().iter().flatten().map(|v| v.to_bits()).collect() };
    zero_strength_params()
        .into_iter()
        .filter(|(kind, params)| bits(&run(*kind, params)) != bits(&naive))
        .map(|(kind, _)| kind)
        .collect()
}
