use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use polybilliard::billiard::TimeDirection;
use polybilliard::certify::{
    certify_level, robustness_demo, verify_report, CertificationReport, CoverCell, QuadSelection, WitnessBudget,
    WitnessOutcome, WitnessReport,
};
use polybilliard::iet::{Iet, IetJson};
use polybilliard::polygon::PolygonFile;
use polybilliard::rational::{directional_iet, find_periodic_orbit, saddle_connections, RationalError};
use polybilliard::symbolic::{code, periodic_code_locus, Word};
use polybilliard::{Billiard, PhasePoint, Polygon, Tolerances};

use crate::config::{invalid, FileConfig, Report, Resolver, ToleranceConfig};
use crate::{Cli, Command, Format};

/// Shared state of one invocation.
struct Ctx<'a> {
    cli: &'a Cli,
    file: FileConfig,
    section: &'static str,
    seed: u64,
    tol: ToleranceConfig,
}

impl Ctx<'_> {
    fn r(&self) -> Resolver<'_> {
        Resolver { file: &self.file, section: self.section }
    }

    /// Loads the polygon and returns it with its file form (embedded in reports).
    fn polygon(&self) -> Result<(Polygon<f64>, PolygonFile)> {
        let path: std::path::PathBuf = self.r().req(self.cli.global.polygon.clone(), "polygon")?;
        let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let file = PolygonFile::parse(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut poly = file.build().map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if let Some(den) = self.r().opt(self.cli.global.snap_angles, "snap_angles")? {
            if poly.exact_angles().is_none() {
                poly = poly.with_snapped_angles(den).map_err(|e| invalid(format!("--snap-angles: {e}")))?;
            }
        }
        let embedded = PolygonFile::from_polygon(&poly);
        Ok((poly, embedded))
    }

    fn billiard<'p>(&self, poly: &'p Polygon<f64>) -> Billiard<'p, f64> {
        let tol = Tolerances { corner: self.tol.eps_corner, ..Tolerances::default() };
        Billiard::with_tolerances(poly, tol)
    }

    fn emit<R: Serialize>(&self, config: serde_json::Value, result: R) -> Result<()> {
        let report = Report::new(self.section, self.seed, self.tol, config, result);
        let text = serde_json::to_string_pretty(&report)? + "\n";
        match &self.cli.global.out {
            Some(path) => write_file(path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn csv(&self, text: &str) -> Result<()> {
        match &self.cli.global.csv {
            Some(p) => write_file(p, text),
            None => Ok(()),
        }
    }

    fn plot(&self, text: &str) -> Result<()> {
        match &self.cli.global.plot {
            Some(p) => write_file(p, text),
            None => Ok(()),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn section(cmd: &Command) -> &'static str {
    match cmd {
        Command::Orbit { .. } => "orbit",
        Command::Code { .. } => "code",
        Command::Locus { .. } => "locus",
        Command::Saddles { .. } => "saddles",
        Command::Iet { .. } => "iet",
        Command::Periodic { .. } => "periodic",
        Command::Density { .. } => "density",
        Command::Certify { .. } => "certify",
        Command::Robust { .. } => "robust",
        Command::Np => "np",
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = FileConfig::load(cli.global.config.as_deref())?;
    let sec = section(&cli.command);
    let r = Resolver { file: &file, section: sec };
    let d = ToleranceConfig::DEFAULT;
    let tol = ToleranceConfig {
        eps_corner: r.or(cli.global.eps_corner, "eps_corner", d.eps_corner)?,
        eps_iet: r.or(cli.global.eps_iet, "eps_iet", d.eps_iet)?,
        membership_tol: r.or(cli.global.membership_tol, "membership_tol", d.membership_tol)?,
    };
    tol.validate()?;
    let seed = r.or(cli.global.seed, "seed", 0u64)?;
    eprintln!("seed: {seed}");
    let ctx = Ctx { cli, file, section: sec, seed, tol };
    match &cli.command {
        Command::Orbit { side, s, theta, steps, backward, format } => orbit(&ctx, *side, *s, *theta, *steps, *backward, *format),
        Command::Code { start, steps, back } => code_cmd(&ctx, start.clone(), *steps, *back),
        Command::Locus { word } => locus(&ctx, word.clone()),
        Command::Saddles { lmax } => saddles(&ctx, *lmax),
        Command::Iet { xi, input, horizon } => iet(&ctx, *xi, input.clone(), *horizon),
        Command::Periodic { cell, budget } => periodic(&ctx, cell.clone(), *budget),
        Command::Density { level, trials } => density(&ctx, *level, *trials),
        Command::Certify { level, quads, budget_l, budget_m, budget_j } => certify(&ctx, *level, quads.clone(), [*budget_l, *budget_m, *budget_j]),
        Command::Robust { level, delta, quads } => robust(&ctx, *level, delta.clone(), quads.clone()),
        Command::Np => np(&ctx),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| invalid(format!("{what}: cannot parse {t:?}"))))
        .collect()
}

fn side_index(label: usize, poly: &Polygon<f64>) -> Result<usize> {
    if label == 0 || label > poly.k() {
        bail!(invalid(format!("side label {label} outside 1..={}", poly.k())));
    }
    Ok(label - 1)
}

fn start_point(poly: &Polygon<f64>, side: usize, s: f64, theta: f64) -> Result<PhasePoint<f64>> {
    let p = PhasePoint::new(side_index(side, poly)?, s, theta);
    if !p.is_valid(poly) {
        bail!(invalid(format!("start point ({side}, {s}, {theta}) is outside the phase space")));
    }
    Ok(p)
}

fn orbit(ctx: &Ctx, side: Option<usize>, s: Option<f64>, theta: Option<f64>, steps: Option<usize>, backward: bool, format: Option<Format>) -> Result<()> {
    let r = ctx.r();
    let side: usize = r.req(side, "side")?;
    let s: f64 = r.req(s, "s")?;
    let theta: f64 = r.req(theta, "theta")?;
    let steps: usize = r.or(steps, "steps", 100)?;
    let backward = r.flag(backward, "backward")?;
    let format = r.or(format, "format", Format::Json)?;
    let (poly, pfile) = ctx.polygon()?;
    let b = ctx.billiard(&poly);
    let start = start_point(&poly, side, s, theta)?;
    let dir = if backward { TimeDirection::Backward } else { TimeDirection::Forward };
    let res = b.orbit(&start, steps, dir);

    let mut table = String::from("step,side,s,theta\n");
    let mut trace = String::from("t,x,y\n");
    for (k, p) in std::iter::once(&res.start).chain(&res.points).enumerate() {
        writeln!(table, "{k},{},{},{}", p.label(), p.s, p.theta)?;
        let xy = p.position(&poly);
        writeln!(trace, "{k},{},{}", xy.x, xy.y)?;
    }
    ctx.csv(&table)?;
    ctx.plot(&trace)?;
    let config = json!({ "polygon": pfile, "side": side, "s": s, "theta": theta, "steps": steps, "backward": backward });
    match format {
        Format::Csv => {
            print!("{table}");
            Ok(())
        }
        Format::Json => ctx.emit(config, &res),
    }
}

fn code_cmd(ctx: &Ctx, start: Option<String>, steps: Option<usize>, back: Option<usize>) -> Result<()> {
    let r = ctx.r();
    let start: String = r.req(start, "start")?;
    let steps: usize = r.or(steps, "steps", 20)?;
    let back: usize = r.or(back, "back", 0)?;
    let parts: Vec<f64> = parse_list(&start, "--start")?;
    if parts.len() != 3 || parts[0].fract() != 0.0 || parts[0] < 1.0 {
        bail!(invalid("--start expects SIDE,S,THETA"));
    }
    let (poly, pfile) = ctx.polygon()?;
    let b = ctx.billiard(&poly);
    let u = start_point(&poly, parts[0] as usize, parts[1], parts[2])?;
    let c = code(&b, &u, steps, back);
    println!("{}", c.word);
    if ctx.cli.global.out.is_some() {
        let config = json!({ "polygon": pfile, "start": start, "steps": steps, "back": back });
        ctx.emit(config, &c)?;
    }
    Ok(())
}

fn locus(ctx: &Ctx, word: Option<String>) -> Result<()> {
    let word: String = ctx.r().req(word, "word")?;
    let (poly, pfile) = ctx.polygon()?;
    let w = Word::parse(&word, poly.k()).map_err(|e| invalid(format!("--word: {e}")))?;
    let b = ctx.billiard(&poly);
    let l = periodic_code_locus(&b, &w)?;
    ctx.emit(json!({ "polygon": pfile, "word": word }), &l)
}

fn saddles(ctx: &Ctx, lmax: Option<f64>) -> Result<()> {
    let lmax: f64 = ctx.r().req(lmax, "lmax")?;
    if !(lmax > 0.0) {
        bail!(invalid("--lmax must be positive"));
    }
    let (poly, _) = ctx.polygon()?;
    let list = saddle_connections(&poly, lmax);
    let mut out = String::from("start,end,dirx,diry,length,bounces\n");
    for c in &list {
        writeln!(out, "{},{},{},{},{},{}", c.start_corner + 1, c.end_corner + 1, c.direction.x, c.direction.y, c.length, c.bounce_count)?;
    }
    print!("{out}");
    ctx.csv(&out)
}

fn iet(ctx: &Ctx, xi: Option<f64>, input: Option<std::path::PathBuf>, horizon: Option<usize>) -> Result<()> {
    let r = ctx.r();
    let horizon: usize = r.or(horizon, "horizon", 0)?;
    let input: Option<std::path::PathBuf> = r.opt(input, "input")?;
    let (t, config) = match input {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let j: IetJson = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let t = Iet::from_json(&j).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            (t, json!({ "input": j, "horizon": horizon }))
        }
        None => {
            let xi: f64 = r.req(xi, "xi")?;
            let (poly, pfile) = ctx.polygon()?;
            let d = directional_iet(&poly, xi).map_err(|e| match e {
                RationalError::NotRational(_) | RationalError::DegenerateDirection(_) => invalid(e.to_string()),
                other => other.into(),
            })?;
            (d.iet, json!({ "polygon": pfile, "xi": xi, "horizon": horizon }))
        }
    };
    if horizon == 0 && ctx.cli.global.out.is_none() {
        println!("{}", serde_json::to_string_pretty(&t.to_json())?);
        return Ok(());
    }
    let saddle = (horizon > 0).then(|| t.has_saddle_connection_two_sided(horizon, ctx.tol.eps_iet));
    ctx.emit(config, json!({ "iet": t.to_json(), "saddle_connection": saddle }))
}

fn parse_cell(text: &str, poly: &Polygon<f64>) -> Result<CoverCell> {
    let v: Vec<u32> = parse_list(text, "--cell")?;
    if v.len() != 4 || v[3] == 0 {
        bail!(invalid("--cell expects SIDE,I,J,M with M >= 1"));
    }
    let side = side_index(v[0] as usize, poly)?;
    let max = 2 * v[3] - 2;
    if v[1] > max || v[2] > max {
        bail!(invalid(format!("cell indices must lie in 0..={max}")));
    }
    Ok(CoverCell::new(side, v[1], v[2], v[3]))
}

fn periodic(ctx: &Ctx, cell: Option<String>, budget: Option<usize>) -> Result<()> {
    let r = ctx.r();
    let cell: String = r.req(cell, "cell")?;
    let budget: usize = r.or(budget, "budget", 1000)?;
    let (poly, pfile) = ctx.polygon()?;
    let c = parse_cell(&cell, &poly)?;
    let orbit = find_periodic_orbit(&poly, &c.rect(), budget).map_err(|e| match e {
        RationalError::NotRational(_) => invalid(e.to_string()),
        other => other.into(),
    })?;
    ctx.emit(json!({ "polygon": pfile, "cell": cell, "budget": budget }), &orbit)
}

fn rational(poly: &Polygon<f64>) -> Result<u64> {
    poly.n_p().ok_or_else(|| invalid("polygon carries no exact rational angles (add \"angles\" or use --snap-angles)"))
}

fn density(ctx: &Ctx, level: Option<u32>, trials: Option<usize>) -> Result<()> {
    let r = ctx.r();
    let level: u32 = r.req(level, "M")?;
    let trials: usize = r.or(trials, "trials", 100)?;
    let (poly, pfile) = ctx.polygon()?;
    rational(&poly)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::with_capacity(trials);
    let mut out = String::from("trial,xi,all_hit,missed\n");
    while rows.len() < trials {
        let xi = rng.gen::<f64>() * std::f64::consts::TAU;
        match polybilliard::certify::density_check(&poly, xi, level) {
            Ok(v) => {
                let missed = match &v {
                    polybilliard::certify::DensityVerdict::AllCellsHit => 0,
                    polybilliard::certify::DensityVerdict::MissedCells { cells } => cells.len(),
                };
                writeln!(out, "{},{xi},{},{missed}", rows.len(), v.all_hit())?;
                rows.push(json!({ "xi": xi, "verdict": v }));
            }
            Err(RationalError::DegenerateDirection(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    ctx.csv(&out)?;
    let hits = rows.iter().filter(|r| r["verdict"]["verdict"] == "all_cells_hit").count();
    ctx.emit(json!({ "polygon": pfile, "M": level, "trials": trials }), json!({ "all_hit": hits, "trials": trials, "results": rows }))
}

fn parse_quads(text: &str) -> Result<QuadSelection> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(QuadSelection::All);
    }
    text.parse::<usize>()
        .map(QuadSelection::Sample)
        .map_err(|_| invalid(format!("--quads expects `all` or a count, got {text:?}")))
}

#[derive(Serialize)]
struct CertifyResult<'a> {
    verified: usize,
    report: &'a CertificationReport,
}

fn run_certify(ctx: &Ctx, poly: &Polygon<f64>, level: u32, quads: QuadSelection, budget: &WitnessBudget) -> Result<CertificationReport> {
    if level == 0 {
        bail!(invalid("--M must be at least 1"));
    }
    let cells = poly.k() as u128 * (2 * level as u128 - 1).pow(2);
    if cells.pow(4) > u64::MAX as u128 {
        bail!(invalid("too many quadruples to index"));
    }
    Ok(certify_level(poly, level, quads, budget, ctx.seed))
}

fn found(report: &CertificationReport) -> Vec<WitnessReport> {
    report.results.iter().filter_map(|r| r.outcome.report().cloned()).collect()
}

fn certify(ctx: &Ctx, level: Option<u32>, quads: Option<String>, budgets: [Option<usize>; 3]) -> Result<()> {
    let r = ctx.r();
    let level: u32 = r.req(level, "M")?;
    let quads_text: String = r.or(quads, "quads", "all".to_string())?;
    let quads = parse_quads(&quads_text)?;
    let mut budget = WitnessBudget::default();
    budget.ell = r.or(budgets[0], "budget_l", budget.ell)?;
    budget.m = r.or(budgets[1], "budget_m", budget.m)?;
    budget.j = r.or(budgets[2], "budget_j", budget.j)?;
    let (poly, pfile) = ctx.polygon()?;
    let report = run_certify(ctx, &poly, level, quads, &budget)?;

    let mut verified = 0;
    let mut table = String::from("quad,n,ell,m,j,status\n");
    let mut hist = String::from("quad_id,n\n");
    for q in &report.results {
        match &q.outcome {
            WitnessOutcome::Found(w) => {
                let ok = verify_report(&poly, w, ctx.tol.membership_tol);
                verified += usize::from(ok);
                let status = if ok { "verified" } else { "unverified" };
                writeln!(table, "{},{},{},{},{},{status}", q.index, w.n, w.ell, w.m, w.j)?;
                writeln!(hist, "{},{}", q.index, w.n)?;
            }
            WitnessOutcome::NotFound { .. } => writeln!(table, "{},,,,,not_found", q.index)?,
        }
    }
    ctx.csv(&table)?;
    ctx.plot(&hist)?;
    let config = json!({ "polygon": pfile, "M": level, "quads": quads_text, "budget": budget });
    ctx.emit(config, CertifyResult { verified, report: &report })?;
    if report.summary.certified < report.summary.run || verified < report.summary.certified {
        eprintln!("certified {}/{} (verified {verified})", report.summary.certified, report.summary.run);
    }
    Ok(())
}

fn robust(ctx: &Ctx, level: Option<u32>, delta: Option<String>, quads: Option<String>) -> Result<()> {
    let r = ctx.r();
    let level: u32 = r.req(level, "M")?;
    let delta_text: String = r.or(delta, "delta", "0,1e-6,1e-4,1e-2".to_string())?;
    let deltas: Vec<f64> = parse_list(&delta_text, "--delta")?;
    if deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        bail!(invalid("--delta values must be finite and non-negative"));
    }
    let quads_text: String = r.or(quads, "quads", "200".to_string())?;
    let quads = parse_quads(&quads_text)?;
    let (poly, pfile) = ctx.polygon()?;
    let budget = WitnessBudget::default();
    let cert = run_certify(ctx, &poly, level, quads, &budget)?;
    let witnesses = found(&cert);
    let rep = robustness_demo(&poly, &witnesses, &deltas, ctx.seed);

    let mut curve = String::from("delta,survival_rate,exact_rate\n");
    for row in &rep.rows {
        writeln!(curve, "{},{},{}", row.delta, row.rate, row.exact_rate)?;
    }
    ctx.csv(&curve)?;
    ctx.plot(&curve)?;
    let config = json!({ "polygon": pfile, "M": level, "delta": deltas, "quads": quads_text, "budget": budget });
    ctx.emit(config, json!({ "certification": cert.summary, "robustness": rep }))
}

fn np(ctx: &Ctx) -> Result<()> {
    let (poly, pfile) = ctx.polygon()?;
    let data = poly.rationality().map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("{}", data.n);
    if ctx.cli.global.out.is_some() {
        ctx.emit(json!({ "polygon": pfile }), &data)?;
    }
    Ok(())
}
