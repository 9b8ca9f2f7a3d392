use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use ctilab::cnn::{self, history_csv, infer_batch, load_model, save_model, ArchSpec, TrainConfig};
use ctilab::dataset::{
    generate_dataset, read_dataset, write_dataset, ClassLabel, Dataset, DatasetManifest, TechClass,
};
use ctilab::eval::{self, build_ru106_map, build_ru_map, ru_location_accuracy_from_predictions};
use ctilab::schedsim::{run_scenario, DetectorModel, Scheduler, SimReport, SimScenario, VerdictPool};
use ctilab::signalgen::RuLayout;

use crate::error::{CliError, Context};
use crate::{resolve_seed, EvalArgs, GenArgs, ReportArgs, SimArgs, TrainArgs};

const TRAIN_FILE: &str = "train.ctid";
const VAL_FILE: &str = "val.ctid";
const MODEL_FILE: &str = "model.ctim";
const SUMMARY_FILE: &str = "summary.json";
const SIM_JSON: &str = "sim.json";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn load_manifest(args: &GenArgs) -> Result<DatasetManifest, CliError> {
    let mut m = match &args.manifest {
        Some(p) => DatasetManifest::load(p).with_context(|| format!("loading manifest {}", p.display()))?,
        None => DatasetManifest::desk_default(0),
    };
    m.seed = resolve_seed(args.seed, args.manifest.as_ref().map(|_| m.seed))?;
    if let Some(l) = args.ru_layout {
        m.ru_layout = l.into();
    }
    m.validate()?;
    Ok(m)
}

pub fn gen(args: GenArgs) -> Result<(), CliError> {
    let mut m = load_manifest(&args)?;
    let total = m.sample_count();
    let groups = total / m.samples_per_cell;
    let train = groups * m.train_per_group();
    println!("seed: {}", m.seed);
    println!("samples: {total} (train {train}, val {}) in {groups} cells, {} subcarriers", total - train, m.ru_layout.width());
    if args.dry_run {
        return Ok(());
    }
    let out = args.out.ok_or_else(|| CliError::Usage("gen needs --out unless --dry-run is given".into()))?;
    let g = generate_dataset(&m)?;
    create_dir(&out)?;
    write_dataset(&out.join(TRAIN_FILE), &g.train).with_context(|| format!("writing {}", out.join(TRAIN_FILE).display()))?;
    write_dataset(&out.join(VAL_FILE), &g.val).with_context(|| format!("writing {}", out.join(VAL_FILE).display()))?;
    // Echo the resolved manifest, including the calibrated scale, so the
    // output directory alone regenerates the same files.
    m.quant_scale = Some(g.scale);
    write_file(out.join("manifest.toml"), m.to_toml_string()?)?;
    println!("quantization scale: {:.6}", g.scale);
    println!("wrote {} and {}", out.join(TRAIN_FILE).display(), out.join(VAL_FILE).display());
    Ok(())
}

fn read_split(dir: &Path, name: &str) -> Result<Dataset, CliError> {
    let p = dir.join(name);
    read_dataset(&p).with_context(|| format!("reading {}", p.display()))
}

#[derive(Serialize)]
struct TrainEcho {
    seed: u64,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    ru_layout: RuLayout,
    input_width: usize,
    param_count: usize,
    train_samples: usize,
    val_samples: usize,
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed, None)?;
    let (train_set, val_set) = match &args.data {
        Some(dir) => (read_split(dir, TRAIN_FILE)?, read_split(dir, VAL_FILE)?),
        None => {
            let mut m = DatasetManifest::desk_default(seed);
            if let Some(l) = args.ru_layout {
                m.ru_layout = l.into();
            }
            info!("generating desk-scale dataset ({} samples)", m.sample_count());
            let g = generate_dataset(&m)?;
            (g.train, g.val)
        }
    };
    if let Some(l) = args.ru_layout {
        let want: RuLayout = l.into();
        if train_set.layout != want {
            return Err(CliError::data(format!("dataset layout is {:?}, --ru-layout asks for {want:?}", train_set.layout)));
        }
    }
    let arch = ArchSpec::for_width(train_set.layout.width());
    let cfg = TrainConfig { epochs: args.epochs, batch_size: args.batch_size, lr: args.lr, seed };
    let (model, history) = cnn::train_with(&arch, &train_set, &val_set, &cfg, |r| {
        info!("epoch {} loss {:.5} val_acc {:?}", r.epoch, r.train_loss, r.val_acc);
    })?;
    create_dir(&args.out)?;
    let model_path = args.out.join(MODEL_FILE);
    save_model(&model_path, &model).with_context(|| format!("writing {}", model_path.display()))?;
    write_file(args.out.join("history.csv"), history_csv(&history))?;
    let echo = TrainEcho {
        seed,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        ru_layout: train_set.layout,
        input_width: arch.input_len,
        param_count: model.param_count(),
        train_samples: train_set.len(),
        val_samples: val_set.len(),
    };
    write_file(args.out.join("train_config.toml"), toml::to_string(&echo)?)?;
    println!("seed: {seed}");
    println!("model: {} ({} parameters, {} subcarriers)", model_path.display(), model.param_count(), arch.input_len);
    match history.last().and_then(|r| r.val_acc) {
        Some(acc) => println!("final val_acc: {acc:.4}"),
        None => println!("final val_acc: n/a"),
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let model = load_model(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    let ds = read_dataset(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let csis: Vec<_> = ds.samples.iter().map(|s| &s.csi).collect();
    let preds = infer_batch(&model, &csis)?;
    let summary = eval::summarize(&ds.samples, &preds)?;

    let mut ru_csv = String::from("snr,ru_location_accuracy\n");
    for &snr in &summary.grid.snr_list {
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.samples[i].snr_db == snr).collect();
        let s: Vec<_> = idx.iter().map(|&i| ds.samples[i].clone()).collect();
        let p: Vec<_> = idx.iter().map(|&i| preds[i]).collect();
        let acc = ru_location_accuracy_from_predictions(&s, &p, &build_ru_map())?;
        writeln!(ru_csv, "{snr},{}", acc.map(|a| format!("{a:.6}")).unwrap_or_default()).unwrap();
    }

    let peak = summary
        .grid
        .snr_list
        .iter()
        .flat_map(|&snr| summary.grid.sir_list.iter().map(move |&sir| (snr, sir)))
        .filter_map(|(snr, sir)| summary.grid.cell(snr, sir).and_then(|c| c.filtered_accuracy).map(|a| (a, snr, sir)))
        .fold(None, |best: Option<(f64, i8, i8)>, c| match best {
            Some(b) if b.0 >= c.0 => Some(b),
            _ => Some(c),
        });

    create_dir(&args.out)?;
    write_file(args.out.join("grid.csv"), summary.grid.to_csv())?;
    write_file(args.out.join("confusion.csv"), summary.tech_confusion.to_csv())?;
    write_file(args.out.join("ru_location.csv"), ru_csv)?;
    let doc = json!({
        "summary": summary,
        "peak_filtered": peak.map(|(a, snr, sir)| json!({"accuracy": a, "snr": snr, "sir": sir})),
    });
    write_file(args.out.join(SUMMARY_FILE), to_json(&doc)?)?;

    let column = if args.filtered { "filtered" } else { "raw" };
    println!("{column} accuracy (rows SNR dB, columns SIR dB)");
    let mut header = String::from("snr\\sir");
    for sir in &summary.grid.sir_list {
        write!(header, "\t{sir}").unwrap();
    }
    println!("{header}");
    for &snr in &summary.grid.snr_list {
        let mut row = format!("{snr}");
        for &sir in &summary.grid.sir_list {
            let v = summary.grid.cell(snr, sir).and_then(|c| if args.filtered { c.filtered_accuracy } else { Some(c.raw_accuracy) });
            match v {
                Some(v) => write!(row, "\t{v:.3}").unwrap(),
                None => row.push_str("\t-"),
            }
        }
        println!("{row}");
    }
    if let Some((a, snr, sir)) = peak {
        println!("peak filtered accuracy {a:.4} at SNR {snr} dB, SIR {sir} dB");
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Resamples the model's verdicts on fresh two-RU snapshots: LR-WPAN
/// channel 14 for interfered PPDUs, clean snapshots otherwise.
fn model_detector(path: &Path, seed: u64) -> Result<DetectorModel, CliError> {
    let model = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    if model.input_len() != RuLayout::Dual106.width() {
        return Err(CliError::data(format!(
            "detector model has {} inputs; a {}-wide model trained on dual106 data is required",
            model.input_len(),
            RuLayout::Dual106.width()
        )));
    }
    let c5 = ClassLabel::new(5).expect("valid class");
    let m = DatasetManifest {
        ru_layout: RuLayout::Dual106,
        snr_list: vec![24],
        sir_list: vec![8],
        samples_per_cell: 256,
        classes: vec![ClassLabel::NO_CTI, c5],
        split_ratio: 1.0,
        ..DatasetManifest::desk_default(seed ^ 0xDE7E_C70B)
    };
    let data = generate_dataset(&m)?.train;
    let preds = infer_batch(&model, &data.samples.iter().map(|s| &s.csi).collect::<Vec<_>>())?;
    let pick = |label: ClassLabel| -> Vec<ClassLabel> {
        data.samples.iter().zip(&preds).filter(|(s, _)| s.label == label).map(|(_, p)| *p).collect()
    };
    Ok(DetectorModel::ModelDriven { pool: VerdictPool::from_predictions(&pick(c5), &pick(ClassLabel::NO_CTI), &build_ru106_map()) })
}

#[derive(Serialize)]
struct SimRun {
    interference: bool,
    report: SimReport,
}

pub fn sim(args: SimArgs) -> Result<(), CliError> {
    let mut base = match &args.scenario {
        Some(p) => SimScenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => SimScenario::new(Scheduler::NaiveMu, 0),
    };
    base.seed = resolve_seed(args.seed, args.scenario.as_ref().map(|_| base.seed))?;
    if let Some(d) = args.duration {
        base.duration_s = d;
    }
    if let Some(r) = args.repetitions {
        base.repetitions = r;
    }
    if let Some(p) = &args.detector_model {
        base.detector = model_detector(p, base.seed)?;
    }
    let schedulers = match args.scheduler.as_str() {
        "all" => Scheduler::ALL.to_vec(),
        s => vec![Scheduler::parse(s).ok_or_else(|| {
            CliError::Usage(format!("unknown scheduler {s:?}; use su_only, naive_mu, cti_aware_mu or all"))
        })?],
    };
    base.validate()?;

    let mut runs = Vec::new();
    for s in schedulers {
        let sc = SimScenario { scheduler: s, ..base.clone() };
        runs.push(SimRun { interference: false, report: run_scenario(&sc.without_cti())? });
        if !args.no_cti {
            runs.push(SimRun { interference: true, report: run_scenario(&sc)? });
        }
    }

    create_dir(&args.out)?;
    let mut csv = format!("{}\n", SimReport::CSV_HEADER);
    for r in &runs {
        csv.push_str(&r.report.csv_rows());
    }
    write_file(args.out.join("sim.csv"), csv)?;
    write_file(args.out.join(SIM_JSON), to_json(&json!({ "seed": base.seed, "scenario": base, "runs": runs }))?)?;

    println!("seed: {}", base.seed);
    println!("scheduler\tcti\tSTA1 Mb/s\tSTA2 Mb/s\tduty");
    for r in &runs {
        println!(
            "{}\t{}\t{:.2}\t{:.2}\t{:.3}",
            r.report.scheduler.name(),
            if r.interference { "on" } else { "off" },
            r.report.sta(1).mean_mbps,
            r.report.sta(2).mean_mbps,
            r.report.duty_cycle
        );
    }
    Ok(())
}

fn read_json(path: &Path, producer: &str) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|_| format!("{} (run `ctilab {producer}` first)", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reference values the desk results are compared against.
const REF_TECH_DIAGONAL: [f64; 3] = [85.53, 95.82, 97.03];
const REF_STA2_DROP: [(Scheduler, f64); 3] =
    [(Scheduler::SuOnly, 33.0), (Scheduler::NaiveMu, 35.0), (Scheduler::CtiAwareMu, 0.0)];

fn mean_mbps(report: &Value, sta: usize) -> Option<f64> {
    report["report"]["per_sta"][sta]["mean_mbps"].as_f64()
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let eval_doc = read_json(&args.eval.join(SUMMARY_FILE), "eval");
    let sim_doc = read_json(&args.sim.join(SIM_JSON), "sim");
    let missing: Vec<String> = [&eval_doc, &sim_doc].iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!("missing inputs: {}", missing.join("; "))));
    }
    let (eval_doc, sim_doc) = (eval_doc.unwrap(), sim_doc.unwrap());
    let summary = &eval_doc["summary"];

    let tech: Vec<Option<Vec<f64>>> = (0..3)
        .map(|i| summary["tech_percentages"][i].as_array().map(|r| r.iter().filter_map(Value::as_f64).collect()))
        .collect();

    let runs = sim_doc["runs"].as_array().cloned().unwrap_or_default();
    let mut throughput = Vec::new();
    for s in Scheduler::ALL {
        let find = |cti: bool| runs.iter().find(|r| r["report"]["scheduler"] == s.name() && r["interference"] == cti);
        let (Some(base), cti) = (find(false), find(true)) else { continue };
        for sta in 0..2 {
            let b = mean_mbps(base, sta);
            let c = cti.and_then(|r| mean_mbps(r, sta));
            let change = b.zip(c).map(|(b, c)| if b > 0.0 { 100.0 * (c - b) / b } else { 0.0 });
            throughput.push(json!({
                "scheduler": s.name(), "sta": sta + 1, "baseline_mbps": b, "cti_mbps": c, "change_pct": change,
                "reference_drop_pct": if sta == 1 { REF_STA2_DROP.iter().find(|r| r.0 == s).map(|r| r.1) } else { Some(0.0) },
            }));
        }
    }

    let text = if args.json {
        to_json(&json!({
            "tech_confusion_pct": TechClass::ALL.iter().zip(&tech).map(|(t, r)| json!({
                "actual": t.name(), "row": r, "reference_diagonal": REF_TECH_DIAGONAL[t.index()],
            })).collect::<Vec<_>>(),
            "raw_accuracy": summary["raw_accuracy"],
            "filtered_accuracy": summary["filtered_accuracy"],
            "peak_filtered": eval_doc["peak_filtered"],
            "ru_location_accuracy": summary["ru_location_accuracy"],
            "throughput": throughput,
        }))?
    } else {
        let mut md = String::from("# CTI lab report\n\n## Technology confusion (filtered, %)\n\n");
        md.push_str("| actual \\ predicted | No CTI | LR-WPAN | BLE | reference diagonal |\n|---|---|---|---|---|\n");
        for (t, row) in TechClass::ALL.iter().zip(&tech) {
            match row {
                Some(r) if r.len() == 3 => writeln!(
                    md,
                    "| {} | {:.2} | {:.2} | {:.2} | {:.2} |",
                    t.name(),
                    r[0],
                    r[1],
                    r[2],
                    REF_TECH_DIAGONAL[t.index()]
                )
                .unwrap(),
                _ => writeln!(md, "| {} | - | - | - | {:.2} |", t.name(), REF_TECH_DIAGONAL[t.index()]).unwrap(),
            }
        }
        let fmt = |v: &Value| v.as_f64().map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        md.push_str("\n## Accuracy\n\n");
        writeln!(md, "- raw accuracy: {}", fmt(&summary["raw_accuracy"])).unwrap();
        writeln!(md, "- filtered accuracy: {}", fmt(&summary["filtered_accuracy"])).unwrap();
        let pk = &eval_doc["peak_filtered"];
        if pk.is_object() {
            writeln!(md, "- peak filtered accuracy: {} at SNR {} dB, SIR {} dB", fmt(&pk["accuracy"]), pk["snr"], pk["sir"]).unwrap();
        }
        writeln!(md, "- 52-tone RU location accuracy: {}", fmt(&summary["ru_location_accuracy"])).unwrap();
        md.push_str("\n## Downlink throughput (Mb/s)\n\n");
        md.push_str("| scheduler | STA | no CTI | CTI | change % | reference drop % |\n|---|---|---|---|---|---|\n");
        for t in &throughput {
            writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                t["scheduler"].as_str().unwrap_or("-"),
                t["sta"],
                t["baseline_mbps"].as_f64().map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
                t["cti_mbps"].as_f64().map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
                t["change_pct"].as_f64().map(|v| format!("{v:+.1}")).unwrap_or_else(|| "-".into()),
                t["reference_drop_pct"].as_f64().map(|v| format!("{v:.0}")).unwrap_or_else(|| "-".into()),
            )
            .unwrap();
        }
        md
    };
    match &args.out {
        Some(p) => write_file(p.clone(), text)?,
        None => print!("{text}"),
    }
    Ok(())
}
