use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use amgenc_core::io::{load_charge_table, load_run_config, parse_vector, read_extxyz, read_weights, ExtXyzRecord};
use amgenc_core::noise::{derive_seed, sample_element_noise, sample_position_noise};
use amgenc_core::sampler::generate_with_count;
use amgenc_core::{
    charge_report, discrete_project, ghost_padded_count, hard_charge, Egnn, EgnnConfig, ElementTable, GenerationConfig, Generated,
    Lattice, TeacherField, VelocityField,
};
use rayon::prelude::*;

use crate::{CliResult, Failure, FlowArgs, GenerateArgs, TraceArgs};

const DEFAULT_EDGE: f64 = 18.0;
const TEACHER_LOGIT_SCALE: f64 = 10.0;
// child index reserved for drawing the built-in teacher target
const TEACHER_SEED_INDEX: u64 = u64::MAX;

/// Everything needed to run generations.
struct Setup {
    table: ElementTable,
    lattice: Lattice,
    slots: usize,
    cfg: GenerationConfig,
    field: Box<dyn VelocityField>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn setup(args: &FlowArgs) -> CliResult<Setup> {
    let table = load_charge_table(&args.table)?.table;
    let mut cfg = GenerationConfig::default();
    let mut edge = DEFAULT_EDGE;
    if let Some(path) = &args.config {
        let file = load_run_config(path)?;
        file.apply(&mut cfg);
        if let Some(e) = file.edge {
            edge = e;
        }
    }
    if let Some(v) = args.steps {
        cfg.steps = v as usize;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.tau {
        cfg.tau = v;
    }
    if let Some(v) = args.r_cut {
        cfg.r_cut = v;
    }
    if let Some(v) = args.rho {
        cfg.max_density = v;
    }
    if let Some(v) = &args.target {
        cfg.target = parse_vector(v).map_err(|e| usage(format!("--target: {e}")))?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.edge {
        edge = v;
    }
    cfg.validate()?;
    if !(edge.is_finite() && edge > 0.0) {
        return Err(usage(format!("cell edge must be positive, got {edge}")));
    }
    let mut lattice = Lattice::cubic(edge)?;
    let mut slots = ghost_padded_count(&lattice, cfg.max_density);

    let field: Box<dyn VelocityField> = if let Some(path) = &args.weights {
        let w = read_weights(BufReader::new(File::open(path)?))?;
        let net_cfg = EgnnConfig::infer(&w, cfg.r_cut, args.n_norm)?;
        fit_target(&mut cfg, net_cfg.n_y)?;
        Box::new(Egnn::from_weights(net_cfg, &w)?)
    } else if let Some(seed) = args.random_weights {
        let n_y = cfg.target.len().max(1);
        fit_target(&mut cfg, n_y)?;
        let net_cfg = EgnnConfig {
            layers: args.layers,
            hidden_dim: args.hidden,
            vector_channels: args.channels,
            r_cut: cfg.r_cut,
            n_norm: args.n_norm,
            attention_dim: args.attention,
            n_y,
            n_elements: table.len(),
        };
        Box::new(Egnn::random(net_cfg, seed).map_err(Failure::from)?)
    } else if let Some(teacher) = &args.teacher {
        if let Some(path) = teacher {
            let rec = read_extxyz(BufReader::new(File::open(path)?))?;
            let assignments = rec.assignments(&table)?;
            lattice = rec.lattice.clone();
            slots = rec.len();
            Box::new(TeacherField::from_assignments(
                rec.positions,
                &assignments,
                table.len(),
                TEACHER_LOGIT_SCALE,
            )?)
        } else {
            Box::new(seeded_teacher(&table, &lattice, slots, cfg.seed)?)
        }
    } else {
        return Err(usage("one of --weights, --teacher or --random-weights is required"));
    };
    Ok(Setup {
        table,
        lattice,
        slots,
        cfg,
        field,
    })
}

/// Pads an empty target with zeros; any other length must match the network.
fn fit_target(cfg: &mut GenerationConfig, n_y: usize) -> CliResult {
    if cfg.target.is_empty() {
        cfg.target = vec![0.0; n_y];
    }
    if cfg.target.len() != n_y {
        return Err(usage(format!(
            "--target has {} values but the network expects {n_y}",
            cfg.target.len()
        )));
    }
    Ok(())
}

/// Teacher toward uniform positions with frequency-weighted species, drawn
/// from the base seed and repaired to zero charge.
fn seeded_teacher(table: &ElementTable, lattice: &Lattice, slots: usize, seed: u64) -> CliResult<TeacherField> {
    let s = derive_seed(seed, TEACHER_SEED_INDEX);
    let positions = sample_position_noise(slots, lattice, s);
    let drawn = sample_element_noise(slots, table, 0.0, s)?.logits;
    let species = discrete_project(&drawn, table)?.assignments;
    Ok(TeacherField::from_assignments(positions, &species, table.len(), TEACHER_LOGIT_SCALE)?)
}

fn run_one(setup: &Setup, index: u64) -> CliResult<Generated> {
    let cfg = GenerationConfig {
        seed: derive_seed(setup.cfg.seed, index),
        ..setup.cfg.clone()
    };
    Ok(generate_with_count(&cfg, &setup.table, &setup.lattice, setup.slots, setup.field.as_ref())?)
}

pub fn run_generate(args: GenerateArgs) -> CliResult {
    let setup = setup(&args.flow)?;
    eprintln!(
        "generating {} samples: {} atom slots, {} steps, seed {}",
        args.n_samples, setup.slots, setup.cfg.steps, setup.cfg.seed
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let results: Vec<CliResult<Generated>> =
        pool.install(|| (0..args.n_samples).into_par_iter().map(|k| run_one(&setup, k)).collect());

    fs::create_dir_all(&args.out_dir)?;
    let mut traces = BufWriter::new(File::create(args.out_dir.join("traces.tsv"))?);
    writeln!(traces, "sample\tstep\tt\tcharge\tprojected\tgrad_norm_sq")?;
    let mut charges = Vec::with_capacity(results.len());
    for (k, result) in results.into_iter().enumerate() {
        let g = result?;
        let species = g.sample.assignments()?;
        charges.push(hard_charge(species, &setup.table)?);
        let path = args.out_dir.join(format!("sample_{k:04}.xyz"));
        write_sample(&path, &g, &setup.table)?;
        write_trace_rows(&mut traces, k, &g)?;
        eprintln!(
            "sample {k}: {} atoms kept of {}, {} repair swaps",
            g.sample.len(),
            g.trace.slots,
            g.trace.repair.swaps.len()
        );
    }
    traces.flush()?;
    let report = charge_report(charges)?;
    eprintln!(
        "charge balance: P(Q=0) = {:.1}%, mean |Q| = {}, std Q = {}",
        100.0 * report.p_balanced,
        report.mean_abs_charge,
        report.std_charge
    );
    Ok(())
}

fn write_sample(path: &Path, g: &Generated, table: &ElementTable) -> CliResult {
    let mut rec = ExtXyzRecord::from_sample(&g.sample, table, false)?;
    rec.info.push(("slots".into(), g.trace.slots.to_string()));
    let mut out = BufWriter::new(File::create(path)?);
    rec.write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn write_trace_rows(w: &mut impl Write, sample: usize, g: &Generated) -> io::Result<()> {
    let mut buf = Vec::new();
    g.trace.write_table(&mut buf)?;
    let text = String::from_utf8_lossy(&buf);
    for line in text.lines().skip(1) {
        writeln!(w, "{sample}\t{line}")?;
    }
    Ok(())
}

pub fn run_trace(args: TraceArgs) -> CliResult {
    let setup = setup(&args.flow)?;
    let g = run_one(&setup, args.sample)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    g.trace.write_table(&mut out)?;
    eprintln!(
        "{} slots, charge before repair {}, {} swaps, repair cost {}",
        g.trace.slots,
        g.trace.repair.charge_before,
        g.trace.repair.swaps.len(),
        g.trace.repair.total_cost
    );
    Ok(())
}
