use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use twistlab::dds::{z_pure, CorrectedEngine, EvalOrder, TruncationSpec};
use twistlab::error::{Error, Result};
use twistlab::fegroup::{box_coverage, check_relations, continuation_pipeline, fe_group, prop56_boundary_check, q, region_r1};
use twistlab::quadchar::{class_of_int, ClassChar};
use twistlab::residues::{dedekind_residue_factor_check, hypothesis_probe, monotonicity_scan, residue_report, DedekindSetup};
use twistlab_cli::config::ExperimentConfig;
use twistlab_cli::experiments::{self, context};
use twistlab_cli::table::{provenance, ResultTable};
use twistlab_cli::suite;

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Quadratic twists of GL(3) L-functions: checks and desk-scale experiments")]
struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Whitespace-separated columns for gnuplot instead of CSV
    #[arg(long, global = true)]
    plot_data: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// χ_D(N), χ_N(D), η and the decomposition of D
    Symbols {
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Twisted central values of sym²Δ
    Lfun {
        #[command(subcommand)]
        cmd: LfunCmd,
    },
    /// Double Dirichlet series evaluations
    Dds {
        #[command(subcommand)]
        cmd: DdsCmd,
    },
    /// Tube-domain regions
    Region {
        #[command(subcommand)]
        cmd: RegionCmd,
    },
    /// The group generated by the two functional equations
    Fegroup {
        #[command(subcommand)]
        cmd: FegroupCmd,
    },
    /// Residue components at the poles w = 3/4 − s and w = 1/2
    Residue {
        #[command(subcommand)]
        cmd: ResidueCmd,
    },
    Exp {
        #[command(subcommand)]
        cmd: ExpCmd,
    },
    /// Acceptance checks; `all` or criterion numbers
    Suite { names: Vec<String> },
}

#[derive(Subcommand)]
enum LfunCmd {
    /// L(1/2) and L^S(1/2) for the given odd squarefree D
    Central {
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u64>,
    },
    /// Every odd squarefree D up to a bound
    Scan {
        #[arg(long)]
        max_d: u64,
    },
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, num_args = 2, value_names = ["S", "W"], default_values_t = [2.5, 2.5])]
    point: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    cutoff: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    DFirst,
    NFirst,
}

#[derive(Subcommand)]
enum DdsCmd {
    /// Z_pure(s, w) on a square truncation
    Pure {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, value_enum, default_value = "d-first")]
        order: Order,
    },
    /// Both sides of the corrected identity and their residual
    IdentityCheck {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, default_value_t = 100_000)]
        euler_bound: u64,
    },
}

#[derive(Subcommand)]
enum RegionCmd {
    /// R1, R2, R3, final and the box-coverage verdict
    Pipeline,
    /// The boundary point shared by the two region pieces
    Boundary,
}

#[derive(Subcommand)]
enum FegroupCmd {
    Verify,
}

#[derive(Subcommand)]
enum ResidueCmd {
    /// ResidueReport components at every s in `s_set`, class E = 1
    Report {
        #[arg(long, value_delimiter = ',', default_values_t = [3u64, 5, 101])]
        r: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        x: u64,
    },
    /// Partial Euler products of the hypothesis probe along `probe_ladder`
    Probe {
        #[arg(long, default_value_t = 0.75)]
        s: f64,
    },
    /// Rr(1/2) against the coefficient a(r)
    Scan {
        #[arg(long, default_value_t = 101)]
        r: u64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Dedekind residue identity for a class character ρ (index 0..3)
    Dedekind {
        #[arg(long, default_value_t = 0)]
        rho: usize,
        #[arg(long, default_value_t = 1)]
        r: u64,
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum ExpCmd {
    Nonvanishing,
    Meansquare,
    /// sym²Δ against itself, or against a copy perturbed at one prime
    Determination {
        #[arg(long)]
        r0: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
}

enum Out {
    Table(ResultTable),
    Report { lines: Vec<String>, json: serde_json::Value },
}

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn point(p: &PointArgs) -> (Complex64, Complex64) {
    (cx(p.point[0]), cx(p.point[1]))
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<(Out, bool)> {
    let meta = |t: &mut ResultTable| {
        t.meta("provenance", provenance(&cfg.to_text()));
    };
    let out = match &cli.cmd {
        Cmd::Symbols { d, n } => {
            let ctx = context()?;
            let mut t = ResultTable::new("symbols", &["D", "N", "chi_D_N", "chi_N_D", "eta", "m_num", "m_den", "E", "D1"]);
            meta(&mut t);
            for &dd in d {
                for &nn in n {
                    let dec = ctx.decompose(dd)?;
                    t.push(vec![
                        dd as f64,
                        nn as f64,
                        ctx.chi(dd, nn)? as f64,
                        ctx.chi(nn, dd)? as f64,
                        ctx.eta(class_of_int(dd), class_of_int(nn)) as f64,
                        *dec.m.numer() as f64,
                        *dec.m.denom() as f64,
                        dec.e as f64,
                        dec.g as f64,
                    ])?;
                }
            }
            Out::Table(t)
        }
        Cmd::Lfun { cmd: LfunCmd::Central { d } } => {
            let top = *d.iter().max().expect("required");
            let (_, fam) = experiments::build_family(cfg, top)?;
            let mut t = ResultTable::new("central_values", &["D", "L_half", "LS_half"]);
            meta(&mut t);
            for &dd in d {
                t.push(vec![dd as f64, fam.primitive_central(dd)?, fam.partial_central(dd)?])?;
            }
            Out::Table(t)
        }
        Cmd::Lfun { cmd: LfunCmd::Scan { max_d } } => Out::Table(experiments::central_scan(cfg, *max_d)?),
        Cmd::Dds { cmd: DdsCmd::Pure { p, order } } => {
            let (s, w) = point(p);
            let sys = experiments::sym2_system(cfg, p.cutoff)?;
            let order = match order {
                Order::DFirst => EvalOrder::DFirst,
                Order::NFirst => EvalOrder::NFirst,
            };
            let v = z_pure(s, w, &sys, &context()?, &TruncationSpec::square(p.cutoff, order))?;
            let mut t = ResultTable::new("z_pure", &["s", "w", "X", "re", "im", "terms", "tail"]);
            meta(&mut t);
            t.meta("order", order.tag());
            t.push(vec![s.re, w.re, p.cutoff as f64, v.value.re, v.value.im, v.terms as f64, v.tail])?;
            Out::Table(t)
        }
        Cmd::Dds { cmd: DdsCmd::IdentityCheck { p, euler_bound } } => {
            let (s, w) = point(p);
            let sys = experiments::sym2_system(cfg, *euler_bound)?;
            let ctx = context()?;
            let eng = CorrectedEngine::new(&sys, &ctx, p.cutoff, *euler_bound)?;
            let chk = eng.basic_identity_check(s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, &TruncationSpec::square(p.cutoff, EvalOrder::DFirst))?;
            let mut t = ResultTable::new("identity_check", &["s", "w", "X", "d_side_re", "d_side_im", "m_side_re", "m_side_im", "residual"]);
            meta(&mut t);
            t.push(vec![
                s.re,
                w.re,
                p.cutoff as f64,
                chk.d_side.value.re,
                chk.d_side.value.im,
                chk.m_side.value.re,
                chk.m_side.value.im,
                chk.residual,
            ])?;
            Out::Table(t)
        }
        Cmd::Region { cmd: RegionCmd::Pipeline } => {
            let stages = continuation_pipeline(&region_r1())?;
            let cov = box_coverage(&stages[3].region, &q(-100, 1), &q(100, 1), 201);
            let mut lines: Vec<String> = stages.iter().map(|s| format!("{}: {}", s.name, s.region)).collect();
            lines.push(format!("coverage [-100,100]^2 on 201x201: {} samples, {} outside, covered = {}", cov.samples, cov.outside, cov.covered()));
            let json = json!({
                "stages": stages.iter().map(|s| json!({"name": s.name, "region": s.region.to_string()})).collect::<Vec<_>>(),
                "coverage": {"samples": cov.samples, "outside": cov.outside, "covered": cov.covered()},
            });
            Out::Report { lines, json }
        }
        Cmd::Region { cmd: RegionCmd::Boundary } => {
            let b = prop56_boundary_check();
            let lines = vec![format!("tau(1/2) = {} (expected {}), shared boundary point = {}, holds = {}", b.tau_at_half, b.expected, b.shared, b.holds())];
            let json = json!({"tau_at_half": b.tau_at_half.to_string(), "expected": b.expected.to_string(), "shared": b.shared, "holds": b.holds()});
            Out::Report { lines, json }
        }
        Cmd::Fegroup { cmd: FegroupCmd::Verify } => {
            let g = fe_group()?;
            let rel = check_relations()?;
            let mut lines: Vec<String> = g.iter().map(|e| format!("{}: {}", if e.word.is_empty() { "id" } else { &e.word }, e.map)).collect();
            lines.push(format!(
                "order = {}, phi^2 = id: {}, psi^2 = id: {}, (phi psi)^6 = id: {}, (phi psi)^3 != id: {}",
                rel.order, rel.phi_squared, rel.psi_squared, rel.phipsi_sixth, rel.phipsi_cubed_nontrivial
            ));
            let json = json!({
                "elements": g.iter().map(|e| json!({"word": e.word, "map": e.map.to_string()})).collect::<Vec<_>>(),
                "order": rel.order,
                "phi_squared": rel.phi_squared,
                "psi_squared": rel.psi_squared,
                "phipsi_sixth": rel.phipsi_sixth,
                "phipsi_cubed_nontrivial": rel.phipsi_cubed_nontrivial,
            });
            Out::Report { lines, json }
        }
        Cmd::Residue { cmd: ResidueCmd::Report { r, x } } => {
            let sys = experiments::sym2_system(cfg, 2 * x)?;
            let ctx = context()?;
            let mut t: Option<ResultTable> = None;
            for &s in &cfg.s_set {
                let rep = residue_report(&sys, &ctx, ctx.classes()[0], cx(s), *x, r)?;
                let comps = rep.components();
                let tab = t.get_or_insert_with(|| {
                    let mut cols = vec!["s".to_string()];
                    for (name, _) in &comps {
                        cols.push(format!("{name}_re"));
                        cols.push(format!("{name}_im"));
                    }
                    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
                    let mut t = ResultTable::new("residue_report", &cols);
                    meta(&mut t);
                    t.meta("X", x);
                    t
                });
                let mut row = vec![s];
                for (_, v) in comps {
                    row.push(v.re);
                    row.push(v.im);
                }
                tab.push(row)?;
            }
            Out::Table(t.expect("validated s_set"))
        }
        Cmd::Residue { cmd: ResidueCmd::Probe { s } } => {
            let top = *cfg.probe_ladder.last().expect("validated ladder");
            let sys = experiments::sym2_system(cfg, top)?;
            let pr = hypothesis_probe(&sys, cx(*s), &cfg.probe_ladder)?;
            let mut t = ResultTable::new("hypothesis_probe", &["X", "re", "im", "drift"]);
            meta(&mut t);
            t.meta("stable_digits", format!("{:.2}", pr.stable_digits()));
            for row in &pr.rows {
                t.push(vec![row.x as f64, row.value.re, row.value.im, row.drift])?;
            }
            Out::Table(t)
        }
        Cmd::Residue { cmd: ResidueCmd::Scan { r, step } } => {
            let sc = monotonicity_scan(*r, cx(0.5), -2.0, 2.0, *step)?;
            let mut t = ResultTable::new("rr_scan", &["a", "Rr"]);
            meta(&mut t);
            t.meta("strictly_monotone", sc.strictly_monotone());
            t.meta("min_gap", twistlab_cli::table::fmt_num(sc.min_gap));
            for &(a, v) in &sc.points {
                t.push(vec![a, v])?;
            }
            Out::Table(t)
        }
        Cmd::Residue { cmd: ResidueCmd::Dedekind { rho, r, n } } => {
            let rho_c = *ClassChar::all().get(*rho).ok_or_else(|| Error::Config(format!("rho index {rho} not in 0..3")))?;
            let d = dedekind_residue_factor_check(rho_c, *r, *n, &DedekindSetup::default())?;
            let lines = vec![format!(
                "rho = {:?}, r = {}, N = {}: per-prime exact = {} ({} primes), w=2 residual {:.3e} (tail bound {:.3e}), limit {:.6} vs {:.6}, branch ok = {}",
                rho_c.signs, d.r, d.n, d.per_prime_exact, d.primes_checked, d.w2_residual, d.w2_tail_bound, d.limit, d.target, d.branch_ok
            )];
            let json = json!({
                "rho": rho_c.signs, "r": d.r, "n": d.n, "per_prime_exact": d.per_prime_exact, "primes_checked": d.primes_checked,
                "w2_residual": d.w2_residual, "w2_tail_bound": d.w2_tail_bound, "limit": d.limit, "target": d.target,
                "branch_ok": d.branch_ok, "holds": d.holds(),
            });
            Out::Report { lines, json }
        }
        Cmd::Exp { cmd: ExpCmd::Nonvanishing } => Out::Table(experiments::exp_nonvanishing(cfg)?),
        Cmd::Exp { cmd: ExpCmd::Meansquare } => Out::Table(experiments::exp_meansquare(cfg)?),
        Cmd::Exp { cmd: ExpCmd::Determination { r0, delta } } => {
            let sys = experiments::sym2_system(cfg, cfg.r_range.1)?;
            let b = match r0 {
                Some(r0) => experiments::perturbed(&sys, *r0, *delta)?,
                None => sys.clone(),
            };
            Out::Table(experiments::exp_determination(cfg, &sys, &b)?)
        }
        Cmd::Suite { names } => {
            let ids = suite::select(names).expect("checked before run");
            let outcomes = suite::run(&ids, cfg);
            let ok = outcomes.iter().all(|o| o.pass());
            let lines = outcomes.iter().map(|o| o.line()).collect();
            let json = json!(outcomes
                .iter()
                .map(|o| json!({"id": o.id, "title": o.title, "pass": o.pass(), "seconds": o.elapsed.as_secs_f64(), "budget": o.budget.as_secs(), "detail": o.detail}))
                .collect::<Vec<_>>());
            return Ok((Out::Report { lines, json }, ok));
        }
    };
    Ok((out, true))
}

fn render(out: &Out, cli: &Cli) -> String {
    match (out, cli.format) {
        (Out::Table(t), _) if cli.plot_data => t.to_plot_data(),
        (Out::Table(t), Format::Csv) => t.to_csv(),
        (Out::Table(t), Format::Json) => t.to_json() + "\n",
        (Out::Report { lines, .. }, Format::Csv) => lines.iter().map(|l| format!("{l}\n")).collect(),
        (Out::Report { json, .. }, Format::Json) => serde_json::to_string_pretty(json).expect("report serializes") + "\n",
    }
}

fn fail(code: &str, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("{code}: {}", msg.to_string().replace('\n', " "));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            return fail("E_USAGE", first);
        }
    };
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail(e.code(), e),
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            return fail("E_USAGE", "--workers must be positive");
        }
        cfg.workers = w;
    }
    if let Cmd::Suite { names } = &cli.cmd {
        if let Err(e) = suite::select(names) {
            return fail("E_USAGE", e);
        }
    }
    let (out, ok) = match run(&cli, &cfg) {
        Ok(v) => v,
        Err(e) => return fail(e.code(), e),
    };
    let text = render(&out, &cli);
    let written = match &cli.output {
        Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return fail("E_IO", e);
    }
    if !ok {
        return fail("E_ACCEPTANCE", "one or more criteria failed");
    }
    ExitCode::SUCCESS
}
