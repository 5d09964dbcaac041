use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lmoment_cli::config::RunConfig;
use lmoment_cli::report::{canonical_json, emit_report, fmt_float, Format, Status};
use lmoment_cli::suite::{run_suite_timed, tolerance_defaults, Env, Goldens, Profile};
use lmoment_core::chars::{enumerate_characters, gauss_sum, kronecker_character, primitive_characters, CharPairContext};
use lmoment_core::expsums::{avg_twisted_kloosterman_sq, kloosterman, lemma421_grid, ramanujan_sum, twisted_kloosterman, PrefactorSign};
use lmoment_core::lfunc::{afe_eval, alpha_factor, dirichlet_l};
use lmoment_core::mainterm::{main_term, p_dedekind, p_mixed, p_same, verify_v_cancellation, MainTermSpec};
use lmoment_core::moments::{error_trend, moment_report, with_threads, QuadSettings};
use lmoment_core::series::{named_series, Named, DEFAULT_ORDER};
use lmoment_core::shiftconv::{compare_shifted, HSign, ShiftedConvSpec};
use lmoment_core::voronoi::{verify_voronoi, verify_voronoi_ap, DualSettings, TestFunction};
use lmoment_core::weight::SmoothWeight;
use lmoment_core::{Character, Complex64};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lmoment", version, about = "Numerical checks for fourth moments of Dirichlet L-functions")]
struct Cli {
    /// Worker threads (falls back to LMOMENT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long = "out", global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Character table for one modulus.
    Characters {
        #[arg(long)]
        modulus: u64,
        #[arg(long)]
        primitive: bool,
    },
    #[command(subcommand)]
    Expsum(Expsum),
    #[command(subcommand)]
    Lfunc(Lfunc),
    #[command(subcommand)]
    Series(SeriesCmd),
    #[command(subcommand)]
    Mainterm(Mainterm),
    #[command(subcommand)]
    Voronoi(VoronoiCmd),
    #[command(subcommand)]
    Shiftconv(Shiftconv),
    #[command(subcommand)]
    Moments(Moments),
    /// Runs the verification suite.
    Suite(SuiteArgs),
}

#[derive(Subcommand)]
enum Expsum {
    Gauss {
        #[arg(long = "char")]
        chi: String,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        h: i64,
    },
    Ramanujan {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        h: i64,
    },
    Kloosterman {
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        c: u64,
        /// Twist by this character (`q0:index`).
        #[arg(long)]
        psi: Option<String>,
    },
    /// `(1/φ(q₀)) Σ_ψ |S_ψ(m,n;c)|²`.
    AvgKloosterman {
        #[arg(long)]
        q0: u64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        c: u64,
    },
    /// Closed form of K^± against direct sums, over a grid `q_max,c_max,v_max`.
    VerifyLemma421 {
        #[arg(long, default_value = "12,48,6")]
        grid: String,
        /// Use the displayed prefactor χ₂(∓1).
        #[arg(long)]
        displayed: bool,
    },
}

#[derive(Subcommand)]
enum Lfunc {
    Eval {
        #[arg(long = "char")]
        chi: String,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    Alpha {
        #[arg(long)]
        char1: String,
        #[arg(long)]
        char2: String,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    /// Approximate functional equation on the critical line, as CSV.
    Afe {
        #[arg(long)]
        char1: String,
        #[arg(long)]
        char2: String,
        /// Single height.
        #[arg(long)]
        t: Option<f64>,
        /// `lo,hi` range of heights.
        #[arg(long = "T-range")]
        t_range: Option<String>,
        #[arg(long, default_value_t = 21)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum SeriesCmd {
    Show {
        /// `zeta`, `psi:Q`, `zq:Q` or `vhat`.
        #[arg(long)]
        what: String,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
}

#[derive(Subcommand)]
enum Mainterm {
    PSame {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    PMixed {
        #[arg(long)]
        char1: String,
        #[arg(long)]
        char2: String,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    Dedekind {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    VerifyCancel {
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.4")]
        widths: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
}

#[derive(Subcommand)]
enum VoronoiCmd {
    Verify {
        #[arg(long)]
        char1: String,
        #[arg(long)]
        char2: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        a: i64,
        #[arg(long, default_value_t = 1)]
        c: u64,
        /// Support of the bump, `lo,hi`.
        #[arg(long, default_value = "10,100")]
        support: String,
        /// Sum over `n ≡ a mod c` instead of twisting by `e(an/c)`.
        #[arg(long)]
        progression: bool,
        #[arg(long, default_value_t = 1e-9)]
        tail_tol: f64,
    },
}

#[derive(Subcommand)]
enum Shiftconv {
    Compare {
        #[arg(long)]
        char1: String,
        #[arg(long)]
        char2: String,
        #[arg(long = "N", default_value_t = 16384.0)]
        n: f64,
        #[arg(long = "H", default_value_t = 8.0)]
        h: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Number of values of N (each 4× the previous).
        #[arg(long, default_value_t = 3)]
        doublings: usize,
        #[arg(long)]
        negative: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum Moments {
    Run(MomentArgs),
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long)]
    char1: Option<String>,
    #[arg(long)]
    char2: Option<String>,
    /// Moment of ζ·L(·, χ_D) instead.
    #[arg(long, allow_hyphen_values = true)]
    dedekind: Option<i64>,
    #[arg(long = "T-list", value_delimiter = ',', default_value = "250,500,1000,2000")]
    t_list: Vec<f64>,
    /// Multiplies the default panel width.
    #[arg(long, default_value_t = 1.0)]
    panel_width: f64,
    #[arg(long, default_value_t = lmoment_cli::suite::MOMENT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, value_enum, default_value_t = Profile::Quick)]
    profile: Profile,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long)]
    json: bool,
    /// Run only checks whose names start with one of these prefixes.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Golden values to compare against (defaults to the shipped file).
    #[arg(long)]
    goldens: Option<PathBuf>,
    /// Write the values measured by golden checks here.
    #[arg(long)]
    record_goldens: Option<PathBuf>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().with_context(|| format!("bad number {s:?}"))?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().with_context(|| format!("bad imaginary part in {s:?}"))?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected lo,hi, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn ctx(a: &str, b: &str) -> Result<CharPairContext> {
    Ok(CharPairContext::from_addresses(a, b)?)
}

fn character_json(chi: &Character) -> serde_json::Value {
    json!({
        "address": chi.address(),
        "modulus": chi.modulus(),
        "conductor": chi.conductor(),
        "order": chi.order(),
        "primitive": chi.is_primitive(),
        "real": chi.is_real(),
        "parity": chi.kappa(),
        "gauss_sum": gauss_sum(chi, 1),
    })
}

fn main_term_json(spec: &MainTermSpec, checks: serde_json::Value) -> serde_json::Value {
    json!({
        "formula": spec.formula,
        "q1": spec.q1,
        "q2": spec.q2,
        "coefficients": spec.coefficients(),
        "leading": spec.leading(),
        "checks": checks,
    })
}

struct Output {
    bytes: Vec<u8>,
    ok: bool,
}

impl Output {
    fn json<T: serde::Serialize>(v: &T) -> Result<Self> {
        Ok(Self { bytes: canonical_json(v)?.into_bytes(), ok: true })
    }

    fn text(s: String, ok: bool) -> Self {
        Self { bytes: s.into_bytes(), ok }
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Output> {
    match &cli.command {
        Command::Characters { modulus, primitive } => {
            let list = if *primitive { primitive_characters(*modulus) } else { enumerate_characters(*modulus) };
            let v: Vec<_> = list.iter().map(character_json).collect();
            Output::json(&v)
        }
        Command::Expsum(e) => expsum(e),
        Command::Lfunc(l) => lfunc(l),
        Command::Series(SeriesCmd::Show { what, order }) => {
            let named = match what.split_once(':') {
                None if what == "zeta" => Named::Zeta,
                None if what == "vhat" => Named::VHat,
                Some(("psi", q)) => Named::Psi(q.parse()?),
                Some(("zq", q)) => Named::Zq(q.parse()?),
                _ => bail!("unknown series {what:?}"),
            };
            let s = named_series(named, *order)?;
            Output::json(&json!({ "start": s.start(), "coefficients": s.coeffs() }))
        }
        Command::Mainterm(m) => mainterm(m),
        Command::Voronoi(VoronoiCmd::Verify { char1, char2, a, c, support, progression, tail_tol }) => {
            let (lo, hi) = parse_pair_f64(support)?;
            let f = TestFunction::bump(lo, hi)?;
            let x = ctx(char1, char2)?;
            let settings = DualSettings { tail_tol: *tail_tol, ..DualSettings::default() };
            if *progression {
                let r = verify_voronoi_ap(&f, *a, *c, &x, &settings)?;
                let ok = r.status == Status::Pass;
                Ok(Output { ok, ..Output::json(&r)? })
            } else {
                let r = verify_voronoi(&f, *a, *c, &x, &settings)?;
                let ok = r.status == Status::Pass;
                Ok(Output { ok, ..Output::json(&r)? })
            }
        }
        Command::Shiftconv(Shiftconv::Compare { char1, char2, n, h, alpha, delta, doublings, negative, format }) => {
            let sign = if *negative { HSign::Negative } else { HSign::Positive };
            let spec = ShiftedConvSpec::new(ctx(char1, char2)?, *alpha, *n, *h, *delta, sign)?;
            let rep = compare_shifted(&spec, *doublings)?;
            match format {
                Format::Json => Output::json(&rep),
                _ => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["N", "D_bf_re", "D_bf_im", "D_mt_re", "D_mt_im", "delta", "relative", "normalized"])?;
                    for r in &rep.rows {
                        w.write_record(
                            [r.n, r.d_bruteforce.re, r.d_bruteforce.im, r.d_mainterm.re, r.d_mainterm.im, r.delta, r.relative, r.normalized]
                                .map(fmt_float),
                        )?;
                    }
                    Ok(Output::text(String::from_utf8(w.into_inner()?)?, true))
                }
            }
        }
        Command::Moments(Moments::Run(m)) => moments(m),
        Command::Suite(s) => suite(s, cfg),
    }
}

fn expsum(e: &Expsum) -> Result<Output> {
    match e {
        Expsum::Gauss { chi, h } => {
            let c = Character::from_address(chi)?;
            Output::json(&json!({ "char": chi, "h": h, "value": gauss_sum(&c, *h) }))
        }
        Expsum::Ramanujan { q, h } => Output::json(&json!({ "q": q, "h": h, "value": ramanujan_sum(*q, *h) })),
        Expsum::Kloosterman { m, n, c, psi } => {
            let v = match psi {
                Some(p) => twisted_kloosterman(&Character::from_address(p)?, *m, *n, *c)?,
                None => kloosterman(*m, *n, *c),
            };
            Output::json(&json!({ "params": { "m": m, "n": n, "c": c, "psi": psi }, "value": v }))
        }
        Expsum::AvgKloosterman { q0, m, n, c } => {
            let v = avg_twisted_kloosterman_sq(*q0, *m, *n, *c)?;
            Output::json(&json!({ "params": { "q0": q0, "m": m, "n": n, "c": c }, "value": v }))
        }
        Expsum::VerifyLemma421 { grid, displayed } => {
            let g: Vec<u64> = grid.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?;
            let [q, c, v] = g[..] else { bail!("--grid expects q_max,c_max,v_max") };
            let conv = if *displayed { PrefactorSign::Displayed } else { PrefactorSign::Corrected };
            let r = lemma421_grid(q, c, v, conv)?;
            let ok = r.max_residual < 1e-9 && r.max_vanishing < 1e-9;
            let status = if ok { Status::Pass } else { Status::Fail };
            Ok(Output { ok, ..Output::json(&json!({ "params": { "q_max": q, "c_max": c, "v_max": v }, "residual": r.max_residual, "status": status, "grid": r }))? })
        }
    }
}

fn lfunc(l: &Lfunc) -> Result<Output> {
    match l {
        Lfunc::Eval { chi, s } => {
            let s = parse_complex(s)?;
            let v = dirichlet_l(s, &Character::from_address(chi)?)?;
            Output::json(&json!({ "char": chi, "s": s, "value": v }))
        }
        Lfunc::Alpha { char1, char2, s } => {
            let s = parse_complex(s)?;
            let v = alpha_factor(s, &ctx(char1, char2)?)?;
            Output::json(&json!({ "s": s, "alpha": v, "abs": v.norm() }))
        }
        Lfunc::Afe { char1, char2, t, t_range, samples } => {
            let x = ctx(char1, char2)?;
            let ts: Vec<f64> = match (t, t_range) {
                (Some(t), None) => vec![*t],
                (None, Some(r)) => {
                    let (lo, hi) = parse_pair_f64(r)?;
                    (0..*samples).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / *samples as f64).collect()
                }
                _ => bail!("give exactly one of --t and --T-range"),
            };
            let v = SmoothWeight::default();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["t", "ReL", "ImL", "absR"])?;
            for t in ts {
                let len = t * x.q0() / (2.0 * std::f64::consts::PI);
                let r = afe_eval(Complex64::new(0.5, t), &x, &v, len, len)?;
                w.write_record([t, r.direct.re, r.direct.im, r.residual.norm()].map(fmt_float))?;
            }
            Ok(Output::text(String::from_utf8(w.into_inner()?)?, true))
        }
    }
}

fn mainterm(m: &Mainterm) -> Result<Output> {
    match m {
        Mainterm::PSame { q, order } => {
            let chi = if *q == 1 {
                Character::principal(1)
            } else {
                primitive_characters(*q).into_iter().next().ok_or_else(|| anyhow!("no primitive character mod {q}"))?
            };
            let spec = main_term(&CharPairContext::new(chi.clone(), chi)?, *order)?;
            debug_assert_eq!(spec.poly, p_same(*q, *order)?);
            Output::json(&main_term_json(&spec, json!({})))
        }
        Mainterm::PMixed { char1, char2, order } => Output::json(&main_term_json(&p_mixed(&ctx(char1, char2)?, *order)?, json!({}))),
        Mainterm::Dedekind { d, order } => {
            kronecker_character(*d)?;
            Output::json(&main_term_json(&p_dedekind(*d, *order)?, json!({})))
        }
        Mainterm::VerifyCancel { q, widths, order } => {
            let ws: Vec<SmoothWeight> = widths.iter().map(|&b| SmoothWeight::new(b)).collect::<Result<_, _>>()?;
            let c = verify_v_cancellation(*q, &ws, *order)?;
            let ok = c.residual < 1e-8;
            Ok(Output { ok, ..Output::json(&c)? })
        }
    }
}

fn moments(m: &MomentArgs) -> Result<Output> {
    let (label, x, p) = match (&m.char1, &m.char2, m.dedekind) {
        (None, None, Some(d)) => {
            let x = CharPairContext::new(Character::principal(1), kronecker_character(d)?)?;
            (format!("dedekind {d}"), x, p_dedekind(d, DEFAULT_ORDER)?.poly)
        }
        (Some(a), b, None) => {
            let x = ctx(a, b.as_deref().unwrap_or(a))?;
            let p = main_term(&x, DEFAULT_ORDER)?.poly;
            (format!("{} x {}", a, b.as_deref().unwrap_or(a)), x, p)
        }
        _ => bail!("give --char1 [--char2] or --dedekind"),
    };
    let settings = QuadSettings { scale: m.panel_width };
    let rep = moment_report(&label, &x, &p, &m.t_list, &settings)?;
    let verdict = if rep.rows.len() >= 4 { Some(error_trend(&rep, m.threshold)?) } else { None };
    let ok = verdict.as_ref().map_or(true, |v| v.pass);
    match m.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["T", "integral", "main", "delta", "delta_over_T", "delta_over_T09"])?;
            for r in &rep.rows {
                w.write_record([r.t, r.integral, r.main, r.delta, r.delta_over_t, r.delta_over_t_exp].map(fmt_float))?;
            }
            Ok(Output::text(String::from_utf8(w.into_inner()?)?, ok))
        }
        _ => Ok(Output { ok, ..Output::json(&json!({ "report": rep, "verdict": verdict }))? }),
    }
}

fn suite(s: &SuiteArgs, cfg: &RunConfig) -> Result<Output> {
    cfg.validate_tolerances(&tolerance_defaults())?;
    let goldens = match &s.goldens {
        Some(p) => Goldens::load(p)?,
        None => Goldens::builtin(),
    };
    let env = Env::new(goldens);
    let (result, times) = run_suite_timed(s.profile, &s.only, &env, cfg);
    for (name, t) in &times {
        eprintln!("{:>9.3}s  {name}", t.as_secs_f64());
    }
    if let Some(path) = &s.record_goldens {
        let rec = Goldens(env.recorded.borrow().clone());
        std::fs::write(path, serde_json::to_string_pretty(&rec)? + "\n")?;
    }
    let format = if s.json { Format::Json } else { s.format };
    Ok(Output { bytes: emit_report(&result, format)?, ok: result.passed() })
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(match &cli.command {
        Command::Characters { .. } => "characters",
        Command::Expsum(_) => "expsum",
        Command::Lfunc(_) => "lfunc",
        Command::Series(_) => "series",
        Command::Mainterm(_) => "mainterm",
        Command::Voronoi(_) => "voronoi",
        Command::Shiftconv(_) => "shiftconv",
        Command::Moments(_) => "moments",
        Command::Suite(_) => "suite",
    });
    cfg.threads = cli.threads;
    cfg.output = cli.out.clone();
    if let Command::Suite(s) = &cli.command {
        cfg.tolerances = RunConfig::parse_tolerances(&s.tol)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t0 = Instant::now();
    let result = config(&cli).and_then(|cfg| {
        let out = match cfg.effective_threads() {
            Some(n) => with_threads(n, || run(&cli, &cfg)),
            None => run(&cli, &cfg),
        }?;
        match &cfg.output {
            Some(p) => std::fs::write(p, &out.bytes).with_context(|| format!("writing {}", p.display()))?,
            None => std::io::stdout().write_all(&out.bytes)?,
        }
        Ok(out.ok)
    });
    eprintln!("elapsed {:.2}s", t0.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
