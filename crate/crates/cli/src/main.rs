use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use steiner_core::cover::{from_km, solve, solve_parallel, CoverMode};
use steiner_core::design::{
    admissible_field_orders, designs_isomorphic, is_additive, least_order_per_prime, p_rank, verify_resolution,
    Resolution,
};
use steiner_core::family::{develop, paper_family, PAPER_FAMILY_NAMES};
use steiner_core::pg28::{
    cache_dir, fano_orbits, imprint_cover_count, is_perfect_cover, search_perfect_cover, sublines, CyclicPlane,
    Pg28Error, SearchInput, POINTS, SUBLINES,
};
use steiner_core::subspace::{gaussian_binomial, km_matrix};
use steiner_core::{verify_design, Design};

#[derive(Parser)]
#[command(name = "steiner", version, about = "Additive Steiner 2-designs: construction, verification and searches")]
struct Cli {
    /// Size of the worker pool (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Develop a stored difference family and write the design as JSON.
    BuildDesign {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PAPER_FAMILY_NAMES))]
        family: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kramer-Mesner matrix for Singer-invariant 2-(v,k,1) subspace designs, solved as an exact cover.
    Km {
        #[arg(long)]
        v: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value_t = Mode::Count)]
        mode: Mode,
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Fano-subplane imprints on a line of PG(2,8) and the perfect-cover search.
    Imprints {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
        /// Inject twelve artificial orbits that tile the line (harness check).
        #[arg(long, hide = true, requires = "full")]
        planted: bool,
    },
    /// Check a design file.
    Verify {
        path: PathBuf,
        #[arg(long)]
        additive: bool,
        #[arg(long)]
        resolution: Option<PathBuf>,
        #[arg(long)]
        rank: Option<u32>,
        /// Fail unless the p-rank equals this value.
        #[arg(long, requires = "rank")]
        expect_rank: Option<usize>,
    },
    /// Field orders q = 1 (mod `mod`) whose characteristic allows an additive (v,k,1)-design.
    Admissible {
        #[arg(long)]
        v: u64,
        #[arg(long)]
        k: u64,
        #[arg(long = "mod")]
        modulus: u64,
        #[arg(long, default_value_t = 30)]
        max_exp: u32,
    },
    /// Decide isomorphism of two design files.
    Iso { a: PathBuf, b: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Count,
    First,
    All,
}

impl From<Mode> for CoverMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Count => CoverMode::Count,
            Mode::First => CoverMode::First,
            Mode::All => CoverMode::All,
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    version: String,
    parameters: Value,
    outcome: Value,
    checks: Vec<Check>,
    passed: usize,
    failed: usize,
    wall_ms: u64,
    artifacts: Vec<String>,
}

struct Report {
    command: &'static str,
    parameters: Value,
    outcome: Value,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

impl Report {
    fn new(command: &'static str, parameters: Value) -> Self {
        Self { command, parameters, outcome: Value::Null, checks: Vec::new(), artifacts: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        eprintln!("[{}] {name}: {detail}", if passed { "pass" } else { "FAIL" });
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    fn finish(self, start: Instant) -> RunReport {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        RunReport {
            command: self.command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            parameters: self.parameters,
            outcome: self.outcome,
            passed: self.checks.len() - failed,
            failed,
            checks: self.checks,
            wall_ms: start.elapsed().as_millis() as u64,
            artifacts: self.artifacts,
        }
    }
}

fn read_design(path: &Path) -> Result<Design> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let d: Design = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    d.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(d)
}

fn build_design(family: &str, out: &Path) -> Result<Report> {
    let mut r = Report::new("build-design", json!({ "family": family, "out": out }));
    let pf = paper_family(family)?;
    let d = develop(&pf.family, pf.mode)?;
    let v = verify_design(&d)?;
    r.check("pair coverage", v.is_2_design, format!("lambda in [{}, {}]", v.lambda_min, v.lambda_max));
    r.check("additive", is_additive(&d)?, pf.family.field.to_string());
    if let Some(res) = &pf.resolution {
        r.check("resolution", verify_resolution(&d, res)?, format!("{} classes", res.classes.len()));
    }
    std::fs::write(out, serde_json::to_string_pretty(&d)?).with_context(|| format!("writing {}", out.display()))?;
    if let Some(res) = &pf.resolution {
        let path = out.with_extension("resolution.json");
        std::fs::write(&path, serde_json::to_string_pretty(res)?)?;
        r.artifacts.push(path.display().to_string());
    }
    r.artifacts.insert(0, out.display().to_string());
    r.outcome = json!({
        "v": d.v, "k": d.k, "blocks": d.block_count(), "mode": pf.mode.to_string(), "field": pf.family.field.to_string(),
    });
    Ok(r)
}

fn km(v: u32, k: u32, mode: Mode, dump: Option<&Path>, parallel: bool) -> Result<Report> {
    let mut r = Report::new("km", json!({ "v": v, "k": k, "mode": CoverMode::from(mode), "dump": dump }));
    if k <= 2 {
        bail!("k must exceed 2, got {k}");
    }
    let inst = km_matrix(v, k)?;
    let short = inst.col_orbits.iter().filter(|o| o.size != (1 << v) - 1).count();
    let total = |orbits: &[steiner_core::subspace::SubspaceOrbit]| orbits.iter().map(|o| o.size as u128).sum::<u128>();
    let (rows, cols) = (gaussian_binomial(v, 2, 2), gaussian_binomial(v, k, 2));
    r.check("row orbits partition", total(&inst.row_orbits) == rows, format!("{} orbits over {rows} subspaces", inst.rows()));
    r.check("column orbits partition", total(&inst.col_orbits) == cols, format!("{} orbits over {cols} subspaces", inst.cols()));
    if let Some(path) = dump {
        std::fs::write(path, inst.dump()).with_context(|| format!("writing {}", path.display()))?;
        r.artifacts.push(path.display().to_string());
    }
    let cover = from_km(&inst);
    let out = if parallel { solve_parallel(&cover, mode.into()) } else { solve(&cover, mode.into()) };
    r.outcome = json!({
        "field": inst.field.to_string(),
        "row_orbits": inst.rows(),
        "col_orbits": inst.cols(),
        "short_col_orbits": short,
        "compatible": inst.compatible_cols.len(),
        "solutions": out.count,
        "nodes": out.nodes_explored,
        "solve_ms": out.wall_ms,
        "first": out.solutions.first(),
    });
    eprintln!("{} x {} orbits, {} compatible, {} solutions", inst.rows(), inst.cols(), inst.compatible_cols.len(), out.count);
    Ok(r)
}

fn imprints(full: bool, planted: bool) -> Result<Report> {
    let mut r = Report::new("imprints", json!({ "full": full, "planted": planted }));
    let start = Instant::now();
    let reference = match CyclicPlane::build_reference() {
        Ok(_) => "reachable".to_string(),
        Err(e @ Pg28Error::LabelingMismatch { .. }) => e.to_string(),
        Err(e) => return Err(e.into()),
    };
    let plane = CyclicPlane::build()?;
    let dir = cache_dir();
    let table = fano_orbits(&plane, dir.as_deref())?;
    if let Some(d) = &dir {
        r.artifacts.push(d.join("pg28_orbits.txt").display().to_string());
    }
    let subs = sublines(&plane, 0);
    let through = subs.iter().filter(|t| t[0] == 1 && t[1] == 2).count();
    r.check("sublines on the line", subs.len() == SUBLINES, format!("{}", subs.len()));
    r.check("sublines through {1,2}", through == 7, format!("{through}"));
    let sizes_ok = table.orbits.iter().all(|o| o.members().collect::<std::collections::HashSet<_>>().len() == POINTS);
    r.check("orbit sizes", sizes_ok, format!("{} orbits of size 73", table.orbits.len()));
    let input = SearchInput::from_table(&plane, &table);
    let lens: Vec<usize> = input.anchor_lists().iter().map(Vec::len).collect();
    r.check("anchor lists", lens.iter().all(|&n| n == 105), format!("{lens:?}"));
    let mut outcome = json!({
        "field": plane.field.spec().to_string(),
        "line": plane.lines[0],
        "normalization": plane.norm.to_string(),
        "reference_line": reference,
        "orbits": table.orbits.len(),
        "full_imprints": input.candidates.len(),
        "setup_ms": start.elapsed().as_millis() as u64,
    });
    if full {
        let (input, planted_ids) = if planted { input.with_planted_family() } else { (input, Vec::new()) };
        let report = search_perfect_cover(&input);
        r.check("audit balanced", report.audit.balanced(), format!("{:?}", report.audit));
        if planted {
            let mut found = report.solution.clone().unwrap_or_default();
            found.sort_unstable();
            let masks: Vec<u128> = found
                .iter()
                .filter_map(|id| input.candidates.iter().find(|c| c.orbit == *id).map(|c| c.mask))
                .collect();
            r.check(
                "planted family recovered",
                found == planted_ids && is_perfect_cover(&masks, SUBLINES),
                format!("{found:?}"),
            );
        } else {
            r.check("no perfect cover", report.solution.is_none(), format!("{:?}", report.solution));
            let dlx = imprint_cover_count(&input);
            r.check("exact-cover cross-check", dlx.count == 0, format!("{} covers, {} nodes", dlx.count, dlx.nodes_explored));
        }
        outcome["search"] = serde_json::to_value(&report)?;
        outcome["outcome"] = json!(if report.solution.is_some() { "solution" } else { "none" });
    }
    r.outcome = outcome;
    Ok(r)
}

fn verify(path: &Path, additive: bool, resolution: Option<&Path>, rank: Option<u32>, expect: Option<usize>) -> Result<Report> {
    let mut r = Report::new(
        "verify",
        json!({ "path": path, "additive": additive, "resolution": resolution, "rank": rank, "expect_rank": expect }),
    );
    let d = read_design(path)?;
    let v = verify_design(&d)?;
    let detail = if v.is_2_design {
        format!("lambda = {}", v.lambda_min)
    } else {
        let shown: Vec<String> = v.failures.iter().take(10).map(|f| format!("{f:?}")).collect();
        format!("{} bad pairs: {}", v.failures.len(), shown.join(", "))
    };
    r.check("pair coverage", v.is_2_design, detail);
    if additive {
        let field = d.embedding.as_ref().map(|e| e.field.to_string()).unwrap_or_else(|| "no embedding".into());
        r.check("additive", is_additive(&d)?, field);
    }
    if let Some(rp) = resolution {
        let res: Resolution = serde_json::from_str(&std::fs::read_to_string(rp)?)?;
        r.check("resolution", verify_resolution(&d, &res)?, format!("{} classes", res.classes.len()));
    }
    let mut outcome = json!({ "v": d.v, "k": d.k, "blocks": d.block_count(), "report": v });
    if let Some(p) = rank {
        let got = p_rank(&d, p)?;
        outcome["rank"] = json!({ "p": p, "value": got });
        if let Some(want) = expect {
            r.check("rank", got == want, format!("{p}-rank {got}, expected {want}"));
        } else {
            eprintln!("{p}-rank {got}");
        }
    }
    r.outcome = outcome;
    Ok(r)
}

fn admissible(v: u64, k: u64, modulus: u64, max_exp: u32) -> Result<Report> {
    let mut r = Report::new("admissible", json!({ "v": v, "k": k, "mod": modulus, "max_exp": max_exp }));
    let orders = admissible_field_orders(v, k, modulus, max_exp)?;
    let least = least_order_per_prime(&orders);
    let show = |o: &[steiner_core::design::PrimePower]| o.iter().map(ToString::to_string).collect::<Vec<_>>();
    eprintln!("least per prime: {{{}}}", show(&least).join(", "));
    r.outcome = json!({ "orders": show(&orders), "least_per_prime": show(&least) });
    Ok(r)
}

fn iso(a: &Path, b: &Path) -> Result<Report> {
    let mut r = Report::new("iso", json!({ "a": a, "b": b }));
    let (da, db) = (read_design(a)?, read_design(b)?);
    let out = designs_isomorphic(&da, &db)?;
    eprintln!("{}", if out.isomorphic { "isomorphic" } else { "not isomorphic" });
    r.outcome = serde_json::to_value(&out)?;
    Ok(r)
}

fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::BuildDesign { family, out } => build_design(&family, &out),
        Command::Km { v, k, mode, dump } => km(v, k, mode, dump.as_deref(), cli.workers != Some(1)),
        Command::Imprints { quick, full, planted } => {
            if !quick && !full {
                bail!("pass --quick or --full");
            }
            imprints(full, planted)
        }
        Command::Verify { path, additive, resolution, rank, expect_rank } => {
            verify(&path, additive, resolution.as_deref(), rank, expect_rank)
        }
        Command::Admissible { v, k, modulus, max_exp } => admissible(v, k, modulus, max_exp),
        Command::Iso { a, b } => iso(&a, &b),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    match run(cli) {
        Ok(report) => {
            let report = report.finish(start);
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if report.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
