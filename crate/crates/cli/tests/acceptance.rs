//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p looptex-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use looptex::kernels::{
    kirsch_responses, lbp_code, ldp_code, ldp_ri_code, loop_code, rank_exponents, Encoder, KirschResponses,
    Patch3, RankKey,
};
use looptex::oracle;
use looptex::stats::{binom_one_tail_exact, read_results_csv};
use looptex::synth::{self, write_paired_dataset, DatasetSpec, TextureClass};
use looptex::{binom_one_tail, bonferroni, describe, sign_test, AccuracyRecord, DescriptorKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn tie_free(m: &KirschResponses) -> bool {
    let mut v = m.0;
    v.sort_unstable();
    v.windows(2).all(|w| w[0] != w[1])
}

fn random_patch(rng: &mut ChaCha8Rng) -> Patch3 {
    Patch3::new(rng.random(), std::array::from_fn(|_| rng.random()))
}

fn tie_free_patches(n: usize, seed: u64) -> Vec<Patch3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = random_patch(&mut rng);
        if tie_free(&kirsch_responses(&p)) {
            out.push(p);
        }
    }
    out
}

fn tie_free_responses(n: usize, seed: u64) -> Vec<KirschResponses> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let m = KirschResponses(std::array::from_fn(|_| rng.random_range(-3825..=3825)));
        if tie_free(&m) {
            out.push(m);
        }
    }
    out
}

fn record(classifier: &str, fold: usize, accuracy: f64) -> AccuracyRecord {
    AccuracyRecord {
        descriptor: String::new(),
        classifier: classifier.into(),
        dataset: "fixture".into(),
        fold,
        accuracy,
        n_test: 10,
        seed: 42,
    }
}

fn sign_test_golden() -> Check {
    let p = binom_one_tail(30, 22).map_err(|e| e.to_string())?;
    ensure((p - 0.008063).abs() <= 5e-5, format!("binom_one_tail(30, 22) = {p}"))?;
    let exact = binom_one_tail_exact(30, 22).map_err(|e| e.to_string())?;
    ensure(
        exact.numer().to_string() == "8656937" && exact.denom().to_string() == (1u64 << 30).to_string(),
        format!("exact tail {exact}"),
    )?;
    ensure((p - oracle::binom_one_tail(30, 22)).abs() < 1e-15, "disagrees with Pascal-triangle oracle")?;
    let a = bonferroni(0.05, 6).map_err(|e| e.to_string())?;
    ensure((a - 0.008333).abs() <= 1e-6, format!("bonferroni(0.05, 6) = {a}"))?;
    // 22 wins and 8 losses over 30 paired folds
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    for i in 0..30 {
        let win = i < 22;
        ra.push(record("nn", i, if win { 90.0 } else { 80.0 }));
        rb.push(record("nn", i, if win { 85.0 } else { 88.0 }));
    }
    let t = sign_test(&ra, &rb, 0.05, 6).map_err(|e| e.to_string())?;
    ensure(t.n == 30 && t.wins == 22, format!("n={} wins={}", t.n, t.wins))?;
    ensure(t.verdict() == "significant", format!("verdict {}", t.verdict()))?;
    Ok(format!("p = {p:.6}, alpha/m = {a:.6}, verdict {}", t.verdict()))
}

fn loop_rotation_invariance() -> Check {
    let patches = tie_free_patches(10_000, 42);
    let mut bad = 0;
    for p in &patches {
        let c = loop_code(p, RankKey::Signed);
        for q in 1..4 {
            bad += (loop_code(&p.rotated(q), RankKey::Signed) != c) as usize;
        }
    }
    ensure(bad == 0, format!("{bad} of 30000 rotations changed the code"))?;
    Ok(format!("{} tie-free patches x 3 rotations, all equal", patches.len()))
}

fn lbp_rotation_witness() -> Check {
    let patches = tie_free_patches(1_000, 7);
    let changed = patches.iter().filter(|p| lbp_code(&p.rotated(1)) != lbp_code(p)).count();
    ensure(changed > 0, "no patch changed its LBP code under 90 degree rotation")?;
    let witness = patches.iter().find(|p| lbp_code(&p.rotated(1)) != lbp_code(p)).unwrap();
    Ok(format!(
        "{changed}/1000 patches change; e.g. code {} -> {}",
        lbp_code(witness).value(),
        lbp_code(&witness.rotated(1)).value()
    ))
}

fn ldp_ri_structure() -> Check {
    let ms = tie_free_responses(5_000, 3);
    for k in 1..=8u8 {
        for m in &ms {
            let c = ldp_ri_code(m, k, RankKey::Signed).map_err(|e| e.to_string())?.value();
            ensure(c & 0x80 != 0, format!("MSB clear for k={k}, m={:?}", m.0))?;
            for s in 1..8 {
                let shifted = ldp_ri_code(&m.rotated(s), k, RankKey::Signed).map_err(|e| e.to_string())?.value();
                ensure(shifted == c, format!("shift {s} changed the code for k={k}, m={:?}", m.0))?;
            }
        }
    }
    Ok(format!("{} response vectors x k=1..8 x 8 shifts", ms.len()))
}

fn ldp_popcount() -> Check {
    for k in 1..=8u8 {
        for m in tie_free_responses(1_000, 100 + k as u64) {
            let c = ldp_code(&m, k, RankKey::Signed).map_err(|e| e.to_string())?;
            ensure(c.value().count_ones() == k as u32, format!("k={k}: popcount {}", c.value().count_ones()))?;
        }
    }
    Ok("1000 trials for each k in 1..=8".into())
}

fn oracle_equivalence() -> Check {
    let mut checked = 0usize;
    for p in oracle::three_level_patches() {
        let m = kirsch_responses(&p);
        ensure(m.0 == oracle::kirsch_responses(&p), format!("kirsch mismatch at {p:?}"))?;
        for kind in DescriptorKind::ALL {
            for key in [RankKey::Signed, RankKey::Absolute] {
                let enc = Encoder::new(kind, 3, key).map_err(|e| e.to_string())?;
                let got = enc.encode(&p).value();
                let want = oracle::code_of(kind, &p, 3, key);
                ensure(got == want, format!("{kind} ({key}) at {p:?}: {got} vs oracle {want}"))?;
                checked += 1;
            }
        }
        for k in 1..=8u8 {
            let got = ldp_code(&m, k, RankKey::Signed).map_err(|e| e.to_string())?.value();
            ensure(got == oracle::ldp_code(&m.0, k, RankKey::Signed), format!("ldp k={k} at {p:?}"))?;
        }
    }
    Ok(format!("19683 patches, {checked} code comparisons plus Kirsch and LDP k=1..8"))
}

fn tie_break_fixture() -> Check {
    // responses -275 -2155 -2155 -2035 -131 1709 3469 1573: directions 1 and 2
    // tie; direction 1 differs more from its neighbors (1880 vs 120)
    let p = Patch3::new(100, [1, 0, 0, 1, 15, 238, 231, 235]);
    let m = kirsch_responses(&p);
    ensure(m.0 == [-275, -2155, -2155, -2035, -131, 1709, 3469, 1573], format!("responses {:?}", m.0))?;
    let w = rank_exponents(&m, RankKey::Signed).exponents;
    ensure(w == [3, 1, 0, 2, 4, 6, 7, 5], format!("exponents {w:?}"))?;
    ensure(w == oracle::rank_exponents(&m.0, RankKey::Signed), "disagrees with counting oracle")?;
    ensure(oracle::tie_order_by_enumeration(&m.0, &[1, 2]) == vec![2, 1], "enumeration oracle order")?;
    Ok(format!("tied pair (1, 2) gets exponents ({}, {})", w[1], w[2]))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_looptex")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("looptex {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn mean_accuracy(path: &Path, classifier: &str) -> Result<f64, String> {
    let file = std::fs::File::open(path).map_err(|e| e.to_string())?;
    let recs: Vec<_> = read_results_csv(file)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|r| r.classifier == classifier)
        .collect();
    ensure(recs.len() == 5, format!("{} {classifier} records in {}", recs.len(), path.display()))?;
    Ok(recs.iter().map(|r| r.accuracy).sum::<f64>() / recs.len() as f64)
}

fn pipeline_benchmark(dir: &Path) -> Check {
    let start = Instant::now();
    let root = dir.join("bench");
    write_paired_dataset(&root, &DatasetSpec { per_class: 40, size: 64, seed: 42, rotate: true })
        .map_err(|e| e.to_string())?;
    let (train, test) = (root.join("train"), root.join("test"));
    let mut means = Vec::new();
    for kind in ["lbp", "loop"] {
        let out = dir.join(format!("{kind}.csv"));
        run_cli(&[
            "classify",
            train.to_str().unwrap(),
            "--test-root",
            test.to_str().unwrap(),
            "--kind",
            kind,
            "--classifier",
            "both",
            "--folds",
            "5",
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ])?;
        means.push((mean_accuracy(&out, "nn")?, mean_accuracy(&out, "crc")?));
    }
    let ((lbp_nn, lbp_crc), (loop_nn, loop_crc)) = (means[0], means[1]);
    let summary = format!("nn: loop {loop_nn:.2} vs lbp {lbp_nn:.2}; crc: loop {loop_crc:.2} vs lbp {lbp_crc:.2}");
    ensure(loop_nn >= lbp_nn && loop_crc >= lbp_crc, format!("LOOP below LBP ({summary})"))?;
    ensure(loop_nn - lbp_nn >= 5.0 || loop_crc - lbp_crc >= 5.0, format!("margin under 5 points ({summary})"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!("{summary} ({:.1}s)", elapsed.as_secs_f64()))
}

fn determinism(dir: &Path) -> Check {
    let root = dir.join("det");
    write_paired_dataset(&root, &DatasetSpec { per_class: 12, size: 40, seed: 9, rotate: true })
        .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = dir.join(format!("det_{threads}_{}.csv", outputs.len()));
        let stdout = run_cli(&[
            "--threads",
            threads,
            "classify",
            root.join("train").to_str().unwrap(),
            "--test-root",
            root.join("test").to_str().unwrap(),
            "--kind",
            "all",
            "--classifier",
            "both",
            "--out",
            out.to_str().unwrap(),
        ])?;
        outputs.push((std::fs::read(&out).map_err(|e| e.to_string())?, stdout));
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), "CSV or summary differs between runs")?;
    Ok(format!("3 runs (threads 1, 4, 1), {} CSV bytes identical", outputs[0].0.len()))
}

fn histogram_invariants() -> Check {
    let images = [
        synth::noise_image(70, 53, 1),
        synth::texture_image(TextureClass::Bricks, 64, 2),
        synth::texture_image(TextureClass::Ridges, 48, 3),
    ];
    let mut count = 0;
    for img in &images {
        for kind in DescriptorKind::ALL {
            for levels in 1..=3 {
                let d = describe(img, &Encoder::with_defaults(kind), levels).map_err(|e| e.to_string())?;
                ensure(d.vector.len() == levels * kind.bins(), format!("{kind} levels={levels}: length {}", d.vector.len()))?;
                for l in 0..levels {
                    let s: f64 = d.segment(l).iter().sum();
                    ensure((s - 1.0).abs() <= 1e-9, format!("{kind} level {l} sums to {s}"))?;
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} descriptors checked"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("sign-test golden values", Box::new(sign_test_golden)),
        ("LOOP rotation invariance", Box::new(loop_rotation_invariance)),
        ("LBP rotation-variance witness", Box::new(lbp_rotation_witness)),
        ("LDP-ri leading one and shift invariance", Box::new(ldp_ri_structure)),
        ("LDP popcount equals k", Box::new(ldp_popcount)),
        ("oracle equivalence on {0,128,255}^9", Box::new(oracle_equivalence)),
        ("tie-break fixture", Box::new(tie_break_fixture)),
        ("pipeline smoke benchmark", Box::new(|| pipeline_benchmark(dir.path()))),
        ("classify determinism across thread counts", Box::new(|| determinism(dir.path()))),
        ("histogram and descriptor invariants", Box::new(histogram_invariants)),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
