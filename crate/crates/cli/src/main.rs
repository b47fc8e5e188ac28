//! `looptex` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use looptex::classify::{is_pgm_path, DEFAULT_LAMBDA};
use looptex::descriptor::write_descriptor_csv;
use looptex::stats::{read_results_csv, write_results_csv};
use looptex::synth::{write_paired_dataset, DatasetSpec};
use looptex::{
    code_map, cross_validate_views, describe, load_dataset, load_pgm, save_pgm, sign_test, AccuracyRecord,
    Classifier, CodeMap, DescriptorKind, Encoder, FoldPlan, RankKey, DEFAULT_LEVELS,
};

#[derive(Parser, Debug)]
#[command(name = "looptex", version, about = "LOOP and related local texture descriptors")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the code map of one image.
    Encode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "loop")]
        kind: DescriptorKind,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Multi-scale descriptor CSV for an image or a directory tree of images.
    Describe {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "loop")]
        kind: DescriptorKind,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        levels: usize,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Stratified k-fold cross-validation over a `root/<class>/*.pgm` dataset.
    Classify(ClassifyArgs),
    /// Sign test between two results CSVs.
    Stats {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Number of comparisons for the Bonferroni correction.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// CSV copy of the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-descriptor code-map throughput in megapixels per second.
    Bench {
        root: PathBuf,
        /// Comma-separated kinds or `all`.
        #[arg(long, default_value = "all", value_parser = parse_kinds)]
        kind: Kinds,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Generate the synthetic rotated-texture dataset (`train/` upright, `test/` rotated).
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Keep test images upright.
        #[arg(long)]
        no_rotate: bool,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct CodeArgs {
    /// LDP threshold: the k strongest directions are set.
    #[arg(long, default_value_t = 3)]
    k: u8,
    #[arg(long, default_value = "signed")]
    rank_key: RankKey,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Training view; also the query view unless --test-root is given.
    root: PathBuf,
    /// Query view aligned file-by-file with ROOT.
    #[arg(long)]
    test_root: Option<PathBuf>,
    /// Dataset label in the results (default: name of ROOT).
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "loop", value_parser = parse_kinds)]
    kind: Kinds,
    /// `nn`, `crc`, `both` or a comma list.
    #[arg(long, default_value = "nn", value_parser = parse_classifiers)]
    classifier: ClassifierNames,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[command(flatten)]
    code: CodeArgs,
}

#[derive(Debug, Clone)]
struct Kinds(Vec<DescriptorKind>);

fn parse_kinds(s: &str) -> Result<Kinds, String> {
    if s == "all" {
        return Ok(Kinds(DescriptorKind::ALL.to_vec()));
    }
    let kinds = s.split(',').map(|k| k.trim().parse::<DescriptorKind>().map_err(|e| e.to_string()));
    Ok(Kinds(kinds.collect::<Result<_, _>>()?))
}

/// Classifier names; lambda is attached once all flags are known.
#[derive(Debug, Clone)]
struct ClassifierNames(Vec<String>);

fn parse_classifiers(s: &str) -> Result<ClassifierNames, String> {
    let names: Vec<String> = match s {
        "both" => vec!["nn".into(), "crc".into()],
        _ => s.split(',').map(|c| c.trim().to_string()).collect(),
    };
    for n in &names {
        if n != "nn" && n != "crc" {
            return Err(format!("unknown classifier {n:?} (expected nn, crc or both)"));
        }
    }
    Ok(ClassifierNames(names))
}

/// Collects error lines; the exit status is nonzero iff any were printed.
#[derive(Default)]
struct Errors(usize);

impl Errors {
    fn report(&mut self, msg: impl std::fmt::Display) {
        eprintln!("error: {msg}");
        self.0 += 1;
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut errors = Errors::default();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            errors.report(e);
        }
    }
    if errors.0 == 0 {
        if let Err(e) = run(cli.command, &mut errors) {
            errors.report(format!("{e:#}"));
        }
    }
    if errors.0 == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(command: Command, errors: &mut Errors) -> Result<()> {
    match command {
        Command::Encode { input, out, kind, code } => cmd_encode(&input, &out, encoder(kind, code)?),
        Command::Describe { input, out, kind, levels, code } => {
            cmd_describe(&input, &out, encoder(kind, code)?, levels, errors)
        }
        Command::Classify(args) => cmd_classify(&args),
        Command::Stats { a, b, alpha, m, out } => cmd_stats(&a, &b, alpha, m, out.as_deref()),
        Command::Bench { root, kind, reps, code } => cmd_bench(&root, &kind.0, reps, code),
        Command::Synth { out, per_class, size, seed, no_rotate } => {
            let spec = DatasetSpec { per_class, size, seed, rotate: !no_rotate };
            write_paired_dataset(&out, &spec)?;
            println!("wrote {} images per view under {}", per_class * 4, out.display());
            Ok(())
        }
    }
}

fn encoder(kind: DescriptorKind, code: CodeArgs) -> Result<Encoder> {
    Ok(Encoder::new(kind, code.k, code.rank_key)?)
}

fn cmd_encode(input: &Path, out: &Path, enc: Encoder) -> Result<()> {
    let img = load_pgm(input)?;
    let map = code_map(&img, &enc)?;
    if map.bits == 8 {
        save_pgm(&map.to_gray_image()?, out)?;
    } else {
        write_raw16(&map, out)?;
    }
    println!("{} code map: {}x{} ({} bits)", enc.kind(), map.width, map.height, map.bits);
    let bins = 1usize << map.bits;
    let mut coarse = [0usize; 16];
    for &c in &map.data {
        coarse[c as usize * 16 / bins] += 1;
    }
    let total = map.data.len() as f64;
    let cells: Vec<String> = coarse.iter().map(|&n| format!("{:.4}", n as f64 / total)).collect();
    println!("coarse histogram (16 bins): {}", cells.join(" "));
    Ok(())
}

/// Little-endian u16 codes, row-major, plus a `<out>.hdr` text sidecar.
fn write_raw16(map: &CodeMap, out: &Path) -> Result<()> {
    let bytes: Vec<u8> = map.data.iter().flat_map(|c| c.to_le_bytes()).collect();
    fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    let mut hdr = out.as_os_str().to_owned();
    hdr.push(".hdr");
    let text = format!("format raw16le\nwidth {}\nheight {}\nbits {}\n", map.width, map.height, map.bits);
    fs::write(&hdr, text).with_context(|| format!("writing {}", Path::new(&hdr).display()))?;
    Ok(())
}

/// `.pgm` files under `root` in sorted path order (or `root` itself).
fn collect_images(root: &Path) -> Result<Vec<PathBuf>> {
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))?;
        for entry in entries {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if is_pgm_path(&path) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_describe(input: &Path, out: &Path, enc: Encoder, levels: usize, errors: &mut Errors) -> Result<()> {
    if levels == 0 {
        bail!("--levels must be at least 1");
    }
    let paths = collect_images(input)?;
    if paths.is_empty() {
        bail!("no .pgm images under {}", input.display());
    }
    let results: Vec<_> = {
        use rayon::prelude::*;
        paths.par_iter().map(|p| load_pgm(p).and_then(|img| describe(&img, &enc, levels))).collect()
    };
    let mut rows = Vec::new();
    for (path, res) in paths.iter().zip(results) {
        match res {
            Ok(d) => rows.push((path.display().to_string(), d)),
            Err(e) => errors.report(format!("{}: {e}", path.display())),
        }
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_descriptor_csv(BufWriter::new(file), &rows)?;
    println!("{} rows written to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    if args.levels == 0 {
        bail!("--levels must be at least 1");
    }
    let classifiers: Vec<Classifier> = args
        .classifier
        .0
        .iter()
        .map(|c| if c == "nn" { Classifier::NearestNeighbor } else { Classifier::Crc { lambda: args.lambda } })
        .collect();
    let mut records: Vec<AccuracyRecord> = Vec::new();
    for &kind in &args.kind.0 {
        let enc = encoder(kind, args.code)?;
        let (mut train, _) = load_dataset(&args.root, &enc, args.levels)?;
        if let Some(name) = &args.name {
            train.name = name.clone();
        }
        let test = match &args.test_root {
            Some(root) => Some(load_dataset(root, &enc, args.levels)?.0),
            None => None,
        };
        let plan = FoldPlan::stratified(&train, args.folds, args.seed)?;
        for &clf in &classifiers {
            records.extend(cross_validate_views(&train, test.as_ref().unwrap_or(&train), &plan, clf)?);
        }
    }
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_results_csv(BufWriter::new(file), &records)?;
    print!("{}", summary_table(&records));
    Ok(())
}

/// Mean and sample standard deviation per (descriptor, classifier, dataset).
fn summary_table(records: &[AccuracyRecord]) -> String {
    let mut groups: Vec<((String, String, String), Vec<f64>)> = Vec::new();
    for r in records {
        let key = (r.descriptor.clone(), r.classifier.clone(), r.dataset.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.accuracy),
            None => groups.push((key, vec![r.accuracy])),
        }
    }
    let mut out = format!("{:<8} {:<4} {:<16} {:>5} {:>16}\n", "kind", "clf", "dataset", "folds", "accuracy %");
    for ((d, c, ds), acc) in groups {
        let n = acc.len() as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let std = if acc.len() > 1 {
            (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        out += &format!("{d:<8} {c:<4} {ds:<16} {:>5} {:>16}\n", acc.len(), format!("{mean:.2} ± {std:.2}"));
    }
    out
}

fn read_results(path: &Path) -> Result<Vec<AccuracyRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_results_csv(file).with_context(|| format!("reading {}", path.display()))
}

/// The single descriptor named in a results file, else the file stem.
fn method_name(records: &[AccuracyRecord], path: &Path) -> String {
    match records.first() {
        Some(first) if records.iter().all(|r| r.descriptor == first.descriptor) => first.descriptor.clone(),
        _ => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    }
}

fn cmd_stats(a: &Path, b: &Path, alpha: f64, m: u32, out: Option<&Path>) -> Result<()> {
    let (ra, rb) = (read_results(a)?, read_results(b)?);
    let (mut name_a, mut name_b) = (method_name(&ra, a), method_name(&rb, b));
    if name_a == name_b {
        name_a = a.display().to_string();
        name_b = b.display().to_string();
    }
    let result = sign_test(&ra, &rb, alpha, m)?;
    print!("{}", result.report(&name_a, &name_b));
    if let Some(out) = out {
        let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
        result.write_csv(BufWriter::new(file), &name_a, &name_b)?;
    }
    Ok(())
}

fn cmd_bench(root: &Path, kinds: &[DescriptorKind], reps: usize, code: CodeArgs) -> Result<()> {
    if reps < 3 {
        bail!("--reps must be at least 3 (got {reps})");
    }
    let paths = collect_images(root)?;
    if paths.is_empty() {
        bail!("no .pgm images under {}", root.display());
    }
    let images = paths.iter().map(load_pgm).collect::<Result<Vec<_>, _>>()?;
    let pixels: usize = images.iter().map(|i| (i.width() - 2) * (i.height() - 2)).sum();
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{} images, {:.3} MP per pass, {reps} reps (median)", images.len(), pixels as f64 / 1e6)?;
    for &kind in kinds {
        let enc = encoder(kind, code)?;
        let pass = || -> Result<f64> {
            let t = Instant::now();
            for img in &images {
                std::hint::black_box(code_map(img, &enc)?);
            }
            Ok(t.elapsed().as_secs_f64())
        };
        pass()?; // warm-up
        let mut times = (0..reps).map(|_| pass()).collect::<Result<Vec<_>>>()?;
        times.sort_by(f64::total_cmp);
        let median = times[reps / 2];
        writeln!(w, "{:<8} {:>10.2} MP/s", kind.name(), pixels as f64 / 1e6 / median.max(1e-12))?;
    }
    Ok(())
}
