use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rand::Rng;
use serde::Deserialize;

use optotact::calibration::io::{load_log, load_matrix, save_log, save_matrix, write_report};
use optotact::calibration::{estimate_wrench, evaluate as evaluate_log, fit_calibration, paper_matrix as published_matrix, tare, CalibrationLog, FitReport, LogRow, AXES};
use optotact::classifier::{read_model, train as train_model, write_confusion, write_model, ConfusionMatrix, FeatureExtractor, TrainConfig};
use optotact::fusion::{
    read_scenario, run_pipeline, run_wall_clock, write_fused, write_image_log, OftRecord, OftWriter, PipelineOutput, Scenario,
    SensorSetup,
};
use optotact::physics::{check_deflection_range, rated_range, simulate_reading, Adc, AdcModel};
use optotact::rng::{derive_seed, substream};
use optotact::tactile::{generate_dataset, load_dataset, load_ppm, save_dataset, split_indices};
use optotact::{CalibrationMatrix, Config, FusionMode, Wrench};

use crate::manifest::{beside, Run, DIR_MANIFEST};
use crate::Common;

/// Zero-load frames recorded ahead of every simulated schedule.
const TARE_FRAMES: usize = 20;

fn load_config(c: &Common) -> Result<Config> {
    let cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    Ok(match c.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn print_report(title: &str, r: &FitReport<f64>) {
    println!("{title} ({} rows)", r.rows);
    for (i, (axis, unit)) in AXES.iter().enumerate() {
        let r2 = r.r_squared[i].map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into());
        println!("  {axis}: rmse {:.4e} {unit}, r2 {r2}, max residual {:.4e} {unit}", r.rmse[i], r.residual_max[i]);
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// CSV with header `fz,mx,my`, one row per force frame.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub schedule: Option<PathBuf>,
    /// Draw this many wrenches uniformly from the rated box instead.
    #[arg(long)]
    pub random: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Force frame rate in Hz.
    #[arg(long = "rate-force")]
    pub rate_force: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    fz: f64,
    mx: f64,
    my: f64,
}

fn read_schedule(path: &Path) -> Result<Vec<Wrench<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<ScheduleRow>().enumerate() {
        let r = rec.with_context(|| format!("{}: schedule row {}", path.display(), i + 1))?;
        let w = Wrench::new(r.fz, r.mx, r.my);
        if !w.is_finite() {
            bail!("{}: schedule row {} is not finite", path.display(), i + 1);
        }
        out.push(w);
    }
    Ok(out)
}

fn write_schedule(path: &Path, rows: &[Wrench<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fz", "mx", "my"])?;
    for r in rows {
        w.write_record([r.fz, r.mx, r.my].map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(c: &Common, a: &SimulateArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("simulate", c.config.as_deref(), cfg.seed);
    create_dir(&a.out)?;
    let schedule = match (&a.schedule, a.random) {
        (Some(p), _) => {
            run.input(p);
            read_schedule(p)?
        }
        (None, Some(n)) => {
            let b = rated_range::<f64>();
            let mut rng = substream(cfg.seed, "simulate-schedule");
            let rows: Vec<_> = (0..n)
                .map(|_| {
                    Wrench::new(
                        rng.random_range(-b.fz..=b.fz),
                        rng.random_range(-b.mx..=b.mx),
                        rng.random_range(-b.my..=b.my),
                    )
                })
                .collect();
            let p = a.out.join("schedule.csv");
            write_schedule(&p, &rows)?;
            run.output(p);
            rows
        }
        (None, None) => bail!("either --schedule or --random is required"),
    };

    let rate = a.rate_force.unwrap_or(cfg.fusion.force_rate);
    if !(rate.is_finite() && rate > 0.0) {
        bail!("force rate must be positive, got {rate}");
    }
    let period = 1e9 / rate;
    let stamp = |i: usize| (i as f64 * period).round() as u64;
    let s = &cfg.structure;
    let mut adc = Adc::new(AdcModel { rng_seed: derive_seed(cfg.seed, "simulate-adc"), ..cfg.adc })?;

    let mut tare_rows = Vec::with_capacity(TARE_FRAMES);
    for i in 0..TARE_FRAMES {
        let r = simulate_reading(&Wrench::zero(), s, &mut adc, stamp(i))?;
        tare_rows.push(LogRow { timestamp_ns: r.reading.timestamp_ns, counts: r.reading.counts, wrench: Wrench::zero() });
    }
    let tare_log = CalibrationLog::new(tare_rows);
    let baseline = tare::<f64>(&tare_log.readings())?;
    let ideal = CalibrationMatrix { baseline, ..CalibrationMatrix::from_structure(s, cfg.adc.bits)? };

    let oft_path = a.out.join("force.oft");
    let mut oft = OftWriter::new(BufWriter::new(File::create(&oft_path)?))?;
    let mut rows = Vec::with_capacity(schedule.len());
    let mut saturated = Vec::new();
    for (i, w) in schedule.iter().enumerate() {
        let r = simulate_reading(w, s, &mut adc, stamp(TARE_FRAMES + i))?;
        if r.saturated() {
            saturated.push(i + 1);
        }
        let est = estimate_wrench(&r.reading, &ideal);
        oft.write(&OftRecord { timestamp_ns: r.reading.timestamp_ns, counts: r.reading.counts, wrench: est.to_array() })?;
        rows.push(LogRow { timestamp_ns: r.reading.timestamp_ns, counts: r.reading.counts, wrench: *w });
    }
    oft.finish()?;
    if !saturated.is_empty() {
        let list: Vec<String> = saturated.iter().map(usize::to_string).collect();
        eprintln!("warning: {} schedule rows saturate a gap sensor: rows {}", saturated.len(), list.join(", "));
    }

    let log_path = a.out.join("log.csv");
    let tare_path = a.out.join("tare.csv");
    save_log(&log_path, &CalibrationLog::new(rows))?;
    save_log(&tare_path, &tare_log)?;
    println!("simulated {} frames ({} saturated) into {}", schedule.len(), saturated.len(), a.out.display());
    for p in [oft_path, log_path, tare_path] {
        run.output(p);
    }
    run.finish(&a.out.join(DIR_MANIFEST))
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Calibration log CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// Zero-load log used for the baseline. Defaults to the zero-load rows
    /// of the main log.
    #[arg(long)]
    pub tare: Option<PathBuf>,
    /// Fit on this fraction of rows and evaluate on the rest.
    #[arg(long)]
    pub split: Option<f64>,
    /// Matrix CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn calibrate(c: &Common, a: &CalibrateArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("calibrate", c.config.as_deref(), cfg.seed);
    run.input(&a.log);
    let log = load_log(&a.log).with_context(|| format!("reading {}", a.log.display()))?;
    let tare_readings = match &a.tare {
        Some(p) => {
            run.input(p);
            load_log(p).with_context(|| format!("reading {}", p.display()))?.readings()
        }
        None => log.zero_load_readings(),
    };
    if tare_readings.is_empty() {
        bail!("no zero-load readings to tare against; pass --tare");
    }
    let baseline = tare::<f64>(&tare_readings)?;

    let (fit_log, held_out) = match a.split {
        Some(r) if !(r > 0.0 && r < 1.0) => bail!("--split must lie in (0, 1), got {r}"),
        Some(r) => {
            let (t, h) = log.split(r, &mut substream(cfg.seed, "calibration-split"));
            (t, Some(h))
        }
        None => (log, None),
    };
    let (cal, fit) = fit_calibration(&fit_log, baseline)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_matrix(&a.out, &cal)?;
    run.output(&a.out);
    print_report("fit", &fit);
    println!("  condition number {:.3e}", fit.condition_number);

    let report_path = a.out.with_extension("report.csv");
    let shown = match held_out {
        Some(h) => {
            let rep = evaluate_log(&cal, &h)?;
            print_report("held-out", &rep);
            let p = a.out.with_extension("heldout.csv");
            save_log(&p, &h)?;
            run.output(p);
            rep
        }
        None => fit,
    };
    write_report(File::create(&report_path)?, &shown)?;
    run.output(report_path);
    run.finish(&beside(&a.out))
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Matrix CSV.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Log CSV to evaluate on.
    #[arg(long)]
    pub log: PathBuf,
    /// Optional report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn evaluate(c: &Common, a: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("evaluate", c.config.as_deref(), cfg.seed);
    run.input(&a.matrix);
    run.input(&a.log);
    let cal = load_matrix(&a.matrix).with_context(|| format!("reading {}", a.matrix.display()))?;
    let log = load_log(&a.log).with_context(|| format!("reading {}", a.log.display()))?;
    if log.is_empty() {
        bail!("{} has no rows to evaluate", a.log.display());
    }
    let rep = evaluate_log(&cal, &log)?;
    print_report("evaluation", &rep);
    if let Some(out) = &a.out {
        write_report(File::create(out)?, &rep)?;
        run.output(out);
        run.finish(&beside(out))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PaperMatrixArgs {
    /// Matrix CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn paper_matrix(c: &Common, a: &PaperMatrixArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("paper-matrix", c.config.as_deref(), cfg.seed);
    save_matrix(&a.out, &published_matrix::<f64>())?;
    run.output(&a.out);
    run.finish(&beside(&a.out))
}

pub fn check_range(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let rep = check_deflection_range(&rated_range(), &cfg.structure)?;
    for k in &rep.corners {
        let d = k.deflections;
        println!(
            "fz {:+.1} N  mx {:+.2} N·m  my {:+.2} N·m  ->  δ ({:+.3e}, {:+.3e}, {:+.3e}) m",
            k.wrench.fz, k.wrench.mx, k.wrench.my, d[0], d[1], d[2]
        );
    }
    println!("worst |δ| {:.3e} m, limit {:.3e} m", rep.worst, rep.limit);
    if !rep.pass {
        bail!("rated load exceeds the sensing window by {:.3e} m", rep.worst - rep.limit);
    }
    println!("pass");
    Ok(())
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Images per shape class.
    #[arg(long = "per-class", default_value_t = 200)]
    pub per_class: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn render(c: &Common, a: &RenderArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("render", c.config.as_deref(), cfg.seed);
    create_dir(&a.out)?;
    let samples = generate_dataset(a.per_class, cfg.seed, cfg.grid)?;
    let manifest = save_dataset(&a.out, &samples)?;
    println!("rendered {} images into {}", samples.len(), a.out.display());
    run.output(manifest);
    run.output(a.out.join("images"));
    run.finish(&a.out.join(DIR_MANIFEST))
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset manifest written by `render`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the model and confusion matrix.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training fraction of the stratified split.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Exit nonzero when held-out accuracy is below this.
    #[arg(long = "min-accuracy", default_value_t = 0.95)]
    pub min_accuracy: f64,
}

pub fn train(c: &Common, a: &TrainArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("train", c.config.as_deref(), cfg.seed);
    run.input(&a.manifest);
    if !a.manifest.is_file() {
        bail!("manifest {} not found", a.manifest.display());
    }
    let data = load_dataset(&a.manifest).with_context(|| format!("loading {}", a.manifest.display()))?;
    let ex = FeatureExtractor::default();
    let imgs: Vec<_> = data.iter().map(|(img, _)| img).collect();
    let feats = ex
        .extract_all(&imgs)
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("dataset image {i}")))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<_> = data.iter().map(|(_, l)| *l).collect();
    let (tr, va) = split_indices(&labels, a.split, cfg.seed)?;

    let d = TrainConfig::default();
    let tc = TrainConfig {
        epochs: a.epochs.unwrap_or(d.epochs),
        batch: a.batch.unwrap_or(d.batch),
        learning_rate: a.lr.unwrap_or(d.learning_rate),
        seed: cfg.seed,
        ..d
    };
    let xt: Vec<_> = tr.iter().map(|&i| feats[i]).collect();
    let yt: Vec<_> = tr.iter().map(|&i| labels[i]).collect();
    let model = train_model(&xt, &yt, &tc)?;
    let cm = ConfusionMatrix::from_pairs(va.iter().map(|&i| (labels[i], model.predict_features(&feats[i]).label)));
    let acc = cm.accuracy();

    create_dir(&a.out)?;
    let model_path = a.out.join("model.csv");
    let cm_path = a.out.join("confusion.csv");
    write_model(BufWriter::new(File::create(&model_path)?), &model)?;
    write_confusion(BufWriter::new(File::create(&cm_path)?), &cm)?;
    if let Some(m) = &model.meta {
        println!("loss {:.4} -> {:.4} over {} epochs", m.initial_loss, m.final_loss(), m.epochs);
    }
    println!("accuracy {acc:.4} on {} held-out images", cm.total());
    run.output(model_path);
    run.output(cm_path);
    run.finish(&a.out.join(DIR_MANIFEST))?;
    if acc < a.min_accuracy {
        bail!("held-out accuracy {acc:.4} is below the {:.4} gate", a.min_accuracy);
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Model CSV written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// PPM image.
    #[arg(long)]
    pub image: PathBuf,
}

pub fn classify(_c: &Common, a: &ClassifyArgs) -> Result<()> {
    let model = read_model(File::open(&a.model).with_context(|| format!("opening {}", a.model.display()))?)?;
    let img = load_ppm(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let p = model.predict(&FeatureExtractor::default(), &img)?;
    println!("label {}", p.label.name());
    let names = optotact::SoftmaxModel::class_names();
    for (n, q) in names.iter().zip(p.probabilities) {
        println!("  {n} {q:.6}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// Scenario CSV. Defaults to a cycle through every shape.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// ForceOnly, TextureOnly or Combined.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "rate-force")]
    pub rate_force: Option<f64>,
    #[arg(long = "rate-image")]
    pub rate_image: Option<f64>,
    /// Seconds of simulated time.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    /// Processing time per image frame, in seconds.
    #[arg(long = "image-cost")]
    pub image_cost: Option<f64>,
    /// Label frames with a trained model instead of the scenario truth.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Run on real threads and the real clock.
    #[arg(long = "wall-clock")]
    pub wall_clock: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn fuse(c: &Common, a: &FuseArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut run = Run::start("fuse", c.config.as_deref(), cfg.seed);
    let mut fc = cfg.fusion;
    if let Some(m) = &a.mode {
        fc.mode = m.parse::<FusionMode>().map_err(|e| anyhow!("{e}"))?;
    }
    fc.force_rate = a.rate_force.unwrap_or(fc.force_rate);
    fc.image_rate = a.rate_image.unwrap_or(fc.image_rate);
    fc.image_cost_s = a.image_cost.unwrap_or(fc.image_cost_s);

    let mut setup = SensorSetup::ideal(cfg.structure, cfg.adc, cfg.grid)?;
    if let Some(p) = &a.model {
        run.input(p);
        let model = read_model(File::open(p).with_context(|| format!("opening {}", p.display()))?)?;
        setup = setup.with_classifier(model, FeatureExtractor::default());
    }
    let scenario = match &a.scenario {
        Some(p) => {
            run.input(p);
            read_scenario(File::open(p).with_context(|| format!("opening {}", p.display()))?)?
        }
        None => Scenario::demo(a.duration, cfg.grid),
    };
    let out: PipelineOutput = if a.wall_clock {
        run_wall_clock(&fc, &setup, &scenario, a.duration)?
    } else {
        run_pipeline(&fc, &setup, &scenario, a.duration)?
    };

    create_dir(&a.out)?;
    if fc.mode.force_enabled() {
        let p = a.out.join("force.oft");
        let mut w = OftWriter::new(BufWriter::new(File::create(&p)?))?;
        for f in &out.force {
            w.write(&f.oft_record())?;
        }
        w.finish()?;
        run.output(p);
    }
    if fc.mode.texture_enabled() {
        write_image_log(&a.out, &out.images)?;
        run.output(a.out.join("images.csv"));
    }
    let fused = a.out.join("fused.csv");
    write_fused(BufWriter::new(File::create(&fused)?), &out.fused)?;
    run.output(&fused);
    let stats = a.out.join("stats.json");
    fs::write(&stats, serde_json::to_string_pretty(&out.stats)? + "\n")?;
    run.output(&stats);

    let s = out.stats;
    println!(
        "mode {}: {} force frames, {} images ({} dropped), {} fused, max |dt| {} ns",
        fc.mode.name(),
        s.force_frames,
        s.image_frames,
        s.image_drops,
        s.fused,
        s.max_abs_delta_ns
    );
    run.finish(&a.out.join(DIR_MANIFEST))
}

