use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use amgenc_core::analysis::{
    build_bond_graph, cumulative_cn, molar_concentration, partial_rdf, regression_metrics, ring_statistics,
};
use amgenc_core::io::{load_charge_table, read_extxyz, ExtXyzRecord};
use amgenc_core::{discrete_project, hard_charge, ElementState, ElementTable, MaterialSample};

use crate::{AnalyzeArgs, CliResult, Failure, MetricsArgs, ProjectArgs};

const DEFAULT_RMAX: f64 = 6.0;

fn read_record(path: &Path) -> CliResult<ExtXyzRecord> {
    let file = File::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(read_extxyz(BufReader::new(file))?)
}

fn species(table: &ElementTable, symbol: &str) -> CliResult<usize> {
    table
        .index_of(symbol)
        .ok_or_else(|| Failure::Usage(format!("element `{symbol}` is not in the table")))
}

fn species_pair(table: &ElementTable, pair: &str) -> CliResult<(usize, usize)> {
    let (a, b) = pair
        .split_once('-')
        .ok_or_else(|| Failure::Usage(format!("expected a pair like Si-O, got `{pair}`")))?;
    Ok((species(table, a.trim())?, species(table, b.trim())?))
}

pub fn run_project(args: ProjectArgs) -> CliResult {
    let table = load_charge_table(&args.table)?.table;
    let record = read_record(&args.input)?;
    let sample = record.to_logit_sample()?;
    let logits = sample.logits()?;
    let repair = discrete_project(logits, &table)?;

    let repaired = MaterialSample::new(
        sample.lattice.clone(),
        sample.positions.clone(),
        ElementState::Assignments(repair.assignments.clone()),
    )?;
    let mut out_rec = ExtXyzRecord::from_sample(&repaired, &table, args.include_ghosts)?;
    out_rec.info.push(("repair_cost".into(), format!("{:?}", repair.total_cost)));
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            out_rec.write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            out_rec.write(stdout.lock())?;
        }
    }

    eprintln!("charge before repair: {}", repair.charge_before);
    eprintln!("swaps: {}", repair.swaps.len());
    for s in &repair.swaps {
        let row = logits.row(s.atom);
        eprintln!(
            "  atom {}: {} -> {} (cost {})",
            s.atom,
            table.name(s.from),
            table.name(s.to),
            row[s.from] - row[s.to]
        );
    }
    eprintln!("total cost: {}", repair.total_cost);
    Ok(())
}

pub fn run_analyze(args: AnalyzeArgs) -> CliResult {
    let charge_table = load_charge_table(&args.table)?;
    let table = &charge_table.table;
    let sample = read_record(&args.input)?.to_sample(table)?;
    let rmax = args
        .rmax
        .unwrap_or_else(|| DEFAULT_RMAX.min(sample.lattice.half_min_width()));
    let bins = args.bins as usize;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut any = false;

    if let Some(pair) = &args.rdf {
        let (a, b) = species_pair(table, pair)?;
        let rdf = partial_rdf(&sample, a, b, rmax, bins)?;
        writeln!(out, "# rdf {pair}: r g(r)")?;
        for (r, g) in rdf.r.iter().zip(&rdf.g) {
            writeln!(out, "{r:.6}\t{g:.6}")?;
        }
        any = true;
    }
    if let Some(pair) = &args.cn {
        let (a, b) = species_pair(table, pair)?;
        writeln!(out, "# cn {pair}: r n(r)")?;
        match cumulative_cn(&sample, a, b, rmax, bins)? {
            Some(curve) => {
                for (r, n) in curve.r.iter().zip(&curve.n) {
                    writeln!(out, "{r:.6}\t{n:.6}")?;
                }
            }
            None => eprintln!("no {} atoms; coordination is undefined", table.name(a)),
        }
        any = true;
    }
    if let Some(symbol) = &args.rings {
        let counted = species(table, symbol)?;
        let graph = build_bond_graph(&sample, table, &charge_table.radii, args.bond_factor)?;
        let stats = ring_statistics(&graph, sample.assignments()?, counted, args.max_ring);
        writeln!(out, "# rings: {symbol} per ring, count")?;
        for (size, count) in &stats.histogram {
            writeln!(out, "{size}\t{count}")?;
        }
        match stats.mean {
            Some(m) => writeln!(out, "mean\t{m:.6}")?,
            None => writeln!(out, "mean\tnone")?,
        }
        any = true;
    }
    if let Some(symbol) = &args.concentration {
        let s = species(table, symbol)?;
        let c = molar_concentration(sample.assignments()?, table, s)?;
        writeln!(out, "# concentration {symbol}")?;
        writeln!(out, "{c:.6}")?;
        any = true;
    }
    if args.charge {
        writeln!(out, "# charge")?;
        writeln!(out, "{}", hard_charge(sample.assignments()?, table)?)?;
        any = true;
    }
    out.flush()?;
    if !any {
        return Err(Failure::Usage(
            "nothing to do: pass --rdf, --cn, --rings, --concentration or --charge".into(),
        ));
    }
    Ok(())
}

fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| {
                Failure::Runtime(format!("{}:{}: not a number: `{tok}`", path.display(), n + 1))
            })?;
            if !v.is_finite() {
                return Err(Failure::Runtime(format!("{}:{}: non-finite value", path.display(), n + 1)));
            }
            values.push(v);
        }
    }
    Ok(values)
}

pub fn run_metrics(args: MetricsArgs) -> CliResult {
    let targets = read_values(&args.targets)?;
    let generated = read_values(&args.generated)?;
    let r = regression_metrics(&targets, &generated)?;
    println!("mae\t{:.6}", r.mae);
    println!("rmse\t{:.6}", r.rmse);
    println!("mape_percent\t{:.6}", r.mape);
    Ok(())
}
