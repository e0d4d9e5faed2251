//! Command-line front end: every experiment in the library behind one
//! reproducible, machine-readable interface.
//!
//! Exit codes: 0 success, 1 usage, 2 domain or hypothesis violation,
//! 3 capacity. Numeric flags accept scientific notation (`--x 1e7`).

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use smoothdist::chars::DirichletCharacter;
use smoothdist::equid::{self, EquidConfig, Progression};
use smoothdist::error::Error;
use smoothdist::linsys;
use smoothdist::phase::Frequency;
use smoothdist::polyphase::PolyMod1;
use smoothdist::rat::Rat;
use smoothdist::recurrence::{self, BootstrapConfig, RecoverConfig};
use smoothdist::saddle::{alpha_main_term, MvConfig, Saddle};
use smoothdist::sieve::{psi, psi_progression, SmoothWindow};
use smoothdist::weights::WTrick;
use smoothdist::weyl::{dichotomy_report, DichotomyConfig};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Parser)]
#[command(
    name = "smoothdist",
    version,
    about = "Experiments on integers without small and large prime factors",
    disable_help_subcommand = true
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Seed echoed into the output header (all grids here are deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Constant overrides, name=value, repeatable. Known names:
    /// implicit_c, modulus_exp, weyl_c, recover_c, recover_kappa,
    /// boot_c, boot_big_c, near_one_lo, near_one_hi, err_mult.
    #[arg(long = "override", value_name = "NAME=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact window count with the saddle-point estimates.
    Psi(PsiArgs),
    /// Saddle point alpha(x, y) and its expansion cross-check.
    Alpha(AlphaArgs),
    /// Closed-form estimates: restricted main term, dilation, product bounds.
    Estimate(EstimateArgs),
    /// Equidistribution diagnostics.
    Equid(EquidArgs),
    /// Smooth Weyl sum dichotomy report.
    Weyl(WeylArgs),
    /// Strong-recurrence census, denominator recovery, bootstrap audit.
    Recur(RecurArgs),
    /// Polynomial phase correlations of the tricked weight.
    Phase(PhaseArgs),
    /// Linear-system census against the local-density prediction.
    Linsys(LinsysArgs),
    /// A+B=C census over the window.
    Abc(AbcArgs),
}

#[derive(Args, Serialize)]
struct PsiArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    x: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    /// Also report the count in the class a mod q.
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<u64>,
}

#[derive(Args, Serialize)]
struct AlphaArgs {
    #[arg(long, value_parser = parse_f64_sci)]
    x: f64,
    #[arg(long)]
    y: f64,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    x: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    /// Dilation factor for the local-behaviour prediction.
    #[arg(long)]
    dilate: Option<f64>,
}

#[derive(Args, Serialize)]
struct EquidArgs {
    #[arg(long, value_parser = ["interval", "progression", "short-progression", "count-bound", "character"])]
    mode: String,
    #[arg(long, value_parser = parse_u64_sci)]
    n: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    #[arg(long, value_parser = parse_u64_sci)]
    n0: Option<u64>,
    #[arg(long, value_parser = parse_u64_sci)]
    n1: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long, value_parser = parse_u64_sci)]
    start: Option<u64>,
    #[arg(long, value_parser = parse_u64_sci)]
    len: Option<u64>,
    #[arg(long, default_value_t = 1)]
    step: u64,
    /// Character index within the group mod q (0 is principal).
    #[arg(long, default_value_t = 1)]
    chi_index: usize,
}

#[derive(Args, Serialize)]
struct WeylArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    x: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Frequency: a float or an exact rational `a/q`.
    #[arg(long)]
    theta: String,
}

#[derive(Args, Serialize)]
struct RecurArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    n: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long)]
    theta: String,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, value_parser = parse_u64_sci, default_value = "10000")]
    qmax: u64,
    /// Run the bootstrap audit with the given interval floor.
    #[arg(long, value_parser = parse_u64_sci)]
    bootstrap_l: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    epsprime: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
}

#[derive(Args, Serialize)]
struct PhaseArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    n: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    /// Exact rational coefficients, constant first: `0,1/3,2/5`.
    #[arg(long)]
    poly: Option<String>,
    /// Float coefficients, constant first.
    #[arg(long)]
    poly_real: Option<String>,
    /// Force the W-trick cutoff w (primes below it form W).
    #[arg(long)]
    force_w: Option<f64>,
    #[arg(long, default_value_t = 1)]
    a_seed: u64,
    #[arg(long, default_value_t = 1)]
    q_extra: u64,
    /// Correlate the Cramer model instead of the smooth weight.
    #[arg(long, default_value_t = false)]
    cramer: bool,
}

#[derive(Args, Serialize)]
struct LinsysArgs {
    /// System descriptor file.
    #[arg(long)]
    file: String,
    #[arg(long, value_parser = parse_u64_sci)]
    n: Option<u64>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    yprime: Option<f64>,
    #[arg(long, default_value_t = false)]
    weighted: bool,
    /// Also report local factors and partial products up to this bound.
    #[arg(long)]
    p_limit: Option<f64>,
}

#[derive(Args, Serialize)]
struct AbcArgs {
    #[arg(long, value_parser = parse_u64_sci)]
    n: u64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    yprime: f64,
    #[arg(long, default_value_t = false)]
    coprime: bool,
}

fn parse_u64_sci(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !(0.0..=1.8e19).contains(&f) {
        return Err(format!("not a nonnegative integer: {s}"));
    }
    Ok(f as u64)
}

fn parse_f64_sci(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("not a number: {s}"))
}

fn parse_theta(s: &str) -> Result<Frequency, Error> {
    if let Some((a, q)) = s.split_once('/') {
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("bad rational frequency: {s}")))?;
        let q: u64 = q
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("bad rational frequency: {s}")))?;
        Frequency::rational(a, q)
    } else {
        let t: f64 = s
            .parse()
            .map_err(|_| Error::domain(format!("bad frequency: {s}")))?;
        Frequency::real(t)
    }
}

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    overrides: &'a BTreeMap<String, f64>,
}

struct Overrides(BTreeMap<String, f64>);

impl Overrides {
    const KNOWN: &'static [&'static str] = &[
        "implicit_c",
        "modulus_exp",
        "weyl_c",
        "recover_c",
        "recover_kappa",
        "boot_c",
        "boot_big_c",
        "near_one_lo",
        "near_one_hi",
        "err_mult",
    ];

    fn parse(items: &[String]) -> Result<Overrides, String> {
        let mut map = BTreeMap::new();
        for item in items {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| format!("override needs NAME=VALUE, got {item}"))?;
            if !Self::KNOWN.contains(&name) {
                return Err(format!("unknown override {name}"));
            }
            let v: f64 = value
                .parse()
                .map_err(|_| format!("bad override value in {item}"))?;
            map.insert(name.to_string(), v);
        }
        Ok(Overrides(map))
    }

    fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }

    fn equid(&self) -> EquidConfig {
        let d = EquidConfig::default();
        EquidConfig {
            implicit_c: self.get("implicit_c", d.implicit_c),
            modulus_exp: self.get("modulus_exp", d.modulus_exp),
        }
    }

    fn dichotomy(&self) -> DichotomyConfig {
        let d = DichotomyConfig::default();
        DichotomyConfig {
            c: self.get("weyl_c", d.c),
            ..d
        }
    }

    fn recover(&self) -> RecoverConfig {
        let d = RecoverConfig::default();
        RecoverConfig {
            c: self.get("recover_c", d.c),
            kappa: self.get("recover_kappa", d.kappa),
            ..d
        }
    }

    fn bootstrap(&self) -> BootstrapConfig {
        let d = BootstrapConfig::default();
        BootstrapConfig {
            branch_c: self.get("boot_c", d.branch_c),
            branch_big_c: self.get("boot_big_c", d.branch_big_c),
            ..d
        }
    }

    fn mv(&self) -> MvConfig {
        let d = MvConfig::default();
        MvConfig {
            near_one_lo: self.get("near_one_lo", d.near_one_lo),
            near_one_hi: self.get("near_one_hi", d.near_one_hi),
            err_mult: self.get("err_mult", d.err_mult),
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let overrides = match Overrides::parse(&cli.overrides) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("usage error: {msg}");
            return 1;
        }
    };
    match execute(&cli, &overrides) {
        Ok(output) => {
            let payload = match cli.format.as_str() {
                "csv" => to_csv(&output),
                _ => output
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, payload + "\n") {
                        eprintln!("cannot write {path}: {e}");
                        return 3;
                    }
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    let _ = writeln!(out, "{payload}");
                }
            }
            0
        }
        Err(e @ Error::Domain(_)) | Err(e @ Error::Hypothesis(_)) => {
            eprintln!("{e}");
            2
        }
        Err(e @ Error::Capacity(_)) => {
            eprintln!("{e}");
            3
        }
    }
}

/// Flattens JSON objects into `key,value` CSV lines, one block per row.
fn to_csv(rows: &[serde_json::Value]) -> String {
    let mut out = String::new();
    for row in rows {
        flatten_into("", row, &mut |k, v| {
            out.push_str(&format!("{k},{v}\n"));
        });
    }
    out.pop();
    out
}

fn flatten_into(prefix: &str, v: &serde_json::Value, emit: &mut dyn FnMut(&str, String)) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&key, val, emit);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten_into(&format!("{prefix}[{i}]"), val, emit);
            }
        }
        other => emit(prefix, other.to_string()),
    }
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn header(cli: &Cli, command: &'static str, overrides: &Overrides) -> serde_json::Value {
    json(&Header {
        tool: "smoothdist",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        overrides: &overrides.0,
    })
}

fn with_header(
    header: serde_json::Value,
    config: serde_json::Value,
    body: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "header": header,
        "config": config,
        "result": body,
    })
}

fn execute(cli: &Cli, ov: &Overrides) -> Result<Vec<serde_json::Value>, Error> {
    match &cli.command {
        Command::Psi(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let exact = psi(args.x, &w);
            let saddle = Saddle::new(args.y.max(2.0))?;
            let ctx = saddle.solve_alpha(args.x as f64, args.y.max(2.0))?;
            let ht = saddle.ht_estimate(&ctx);
            let brt = saddle.brt_estimate(args.x as f64, &w)?;
            let progression = match (args.q, args.a) {
                (Some(q), Some(a)) => Some(psi_progression(args.x, &w, q, a)?),
                (Some(_), None) | (None, Some(_)) => {
                    return Err(Error::domain("progression count needs both --q and --a"))
                }
                _ => None,
            };
            let body = serde_json::json!({
                "psi_exact": exact,
                "alpha": ctx.alpha,
                "ht_estimate": ht,
                "brt_estimate": brt.value,
                "brt_regime_ok": brt.regime_ok,
                "ratio_ht": ht / exact.max(1) as f64,
                "ratio_brt": brt.value / exact.max(1) as f64,
                "progression_count": progression,
            });
            Ok(vec![with_header(header(cli, "psi", ov), json(args), body)])
        }
        Command::Alpha(args) => {
            let saddle = Saddle::new(args.y.max(2.0))?;
            let ctx = saddle.solve_alpha(args.x, args.y)?;
            let main = alpha_main_term(args.x, args.y);
            let body = serde_json::json!({
                "context": json(&ctx),
                "main_term": main,
                "difference": ctx.alpha - main,
                "in_regime": args.x.ln() < args.y && args.y <= args.x,
                "bound_3_over_log_y": 3.0 / args.y.ln(),
            });
            Ok(vec![with_header(header(cli, "alpha", ov), json(args), body)])
        }
        Command::Estimate(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let saddle = Saddle::new(args.y.max(2.0))?;
            let brt = saddle.brt_estimate(args.x as f64, &w)?;
            let exact = psi(args.x, &w);
            let mv = saddle.mv_product_bounds(brt.ctx.alpha.min(1.0), args.y.max(2.0), &ov.mv());
            let dilation = match args.dilate {
                Some(d) => {
                    let predicted =
                        saddle.dilation_prediction(args.x as f64, &w, d, exact as f64)?;
                    let exact_dilated = psi((args.x as f64 / d) as u64, &w);
                    Some(serde_json::json!({
                        "d": d,
                        "predicted": predicted,
                        "exact": exact_dilated,
                        "ratio": predicted / exact_dilated.max(1) as f64,
                    }))
                }
                None => None,
            };
            let body = serde_json::json!({
                "psi_exact": exact,
                "brt": json(&brt),
                "mv_envelope": mv.ok().map(|e| json(&e)),
                "dilation": dilation,
            });
            Ok(vec![with_header(header(cli, "estimate", ov), json(args), body)])
        }
        Command::Equid(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let cfg = ov.equid();
            let need = |opt: Option<u64>, name: &str| {
                opt.ok_or_else(|| Error::domain(format!("mode {} needs --{name}", args.mode)))
            };
            let hdr = header(cli, "equid", ov);
            match args.mode.as_str() {
                "interval" => {
                    let rep = equid::short_interval_sum(
                        args.n,
                        need(args.n0, "n0")?,
                        need(args.n1, "n1")?,
                        &w,
                    )?;
                    Ok(vec![with_header(hdr, json(args), json(&rep))])
                }
                "short-progression" => {
                    let rep = equid::short_progression_sum(
                        args.n,
                        need(args.n0, "n0")?,
                        need(args.n1, "n1")?,
                        &w,
                        need(args.q, "q")?,
                        need(args.a, "a")?,
                    )?;
                    Ok(vec![with_header(hdr, json(args), json(&rep))])
                }
                "progression" => {
                    let rep = equid::progression_equid(args.n, &w, need(args.q, "q")?, &cfg)?;
                    // Summary object followed by one JSON line per residue.
                    let mut rows = vec![with_header(
                        hdr,
                        json(args),
                        serde_json::json!({
                            "psi_total": rep.psi_total,
                            "max_deviation": rep.max_deviation,
                            "regime_ok": rep.regime_ok,
                        }),
                    )];
                    rows.extend(rep.rows.iter().map(json));
                    Ok(rows)
                }
                "count-bound" => {
                    let rep = equid::short_interval_count_bound(
                        args.n,
                        &w,
                        Progression {
                            start: need(args.start, "start")?,
                            len: need(args.len, "len")?,
                            step: args.step,
                        },
                        &cfg,
                    )?;
                    Ok(vec![with_header(hdr, json(args), json(&rep))])
                }
                "character" => {
                    let q = need(args.q, "q")?;
                    let group = DirichletCharacter::group(q)?;
                    let chi = group.get(args.chi_index).ok_or_else(|| {
                        Error::domain(format!(
                            "character index {} out of range (group mod {q} has {})",
                            args.chi_index,
                            group.len()
                        ))
                    })?;
                    let rep = equid::character_sum_smallness(args.n, &w, chi, &cfg)?;
                    Ok(vec![with_header(hdr, json(args), json(&rep))])
                }
                other => Err(Error::domain(format!("unknown equid mode {other}"))),
            }
        }
        Command::Weyl(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let theta = parse_theta(&args.theta)?;
            let rep = dichotomy_report(args.x, &w, args.k, &theta, &ov.dichotomy())?;
            Ok(vec![with_header(header(cli, "weyl", ov), json(args), json(&rep))])
        }
        Command::Recur(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let theta = parse_theta(&args.theta)?;
            let census = recurrence::census(args.n, &w, args.k, &theta, args.eps)?;
            let recovered = if census.fraction > 0.0 {
                Some(recurrence::recover_q(&census, args.qmax, args.n, &ov.recover())?)
            } else {
                None
            };
            let audit = match args.bootstrap_l {
                Some(l) => Some(recurrence::bootstrap_audit(
                    &theta,
                    args.k,
                    args.n,
                    &w,
                    l,
                    args.epsprime,
                    args.delta,
                    &ov.bootstrap(),
                )?),
                None => None,
            };
            let body = serde_json::json!({
                "census": json(&census),
                "recovered": recovered.map(|r| json(&r)),
                "bootstrap": audit.map(|a| json(&a)),
            });
            Ok(vec![with_header(header(cli, "recur", ov), json(args), body)])
        }
        Command::Phase(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let wt = match args.force_w {
                Some(wv) => WTrick::with_forced_w(args.n, wv, args.a_seed, args.q_extra)?,
                None => WTrick::build(args.n, args.a_seed, args.q_extra)?,
            };
            let poly = match (&args.poly, &args.poly_real) {
                (Some(txt), None) => {
                    let coeffs: Result<Vec<Rat>, Error> = txt
                        .split(',')
                        .map(|t| {
                            if let Some((n, d)) = t.split_once('/') {
                                Rat::new(
                                    n.trim()
                                        .parse()
                                        .map_err(|_| Error::domain(format!("bad coefficient {t}")))?,
                                    d.trim()
                                        .parse()
                                        .map_err(|_| Error::domain(format!("bad coefficient {t}")))?,
                                )
                            } else {
                                Rat::new(
                                    t.trim()
                                        .parse()
                                        .map_err(|_| Error::domain(format!("bad coefficient {t}")))?,
                                    1,
                                )
                            }
                        })
                        .collect();
                    PolyMod1::from_monomial_rational(coeffs?)?
                }
                (None, Some(txt)) => {
                    let coeffs: Result<Vec<f64>, Error> = txt
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse()
                                .map_err(|_| Error::domain(format!("bad coefficient {t}")))
                        })
                        .collect();
                    PolyMod1::from_monomial_real(coeffs?)?
                }
                _ => return Err(Error::domain("pass exactly one of --poly or --poly-real")),
            };
            let with_alpha = poly.to_binomial_basis()?;
            let norm = with_alpha.smoothness_norm(args.n)?;
            let rep = if args.cramer {
                smoothdist::polyphase::cramer_phase_correlation(args.n, args.yprime, &wt, &poly)?
            } else {
                smoothdist::polyphase::phase_correlation(args.n, &w, &wt, &poly)?
            };
            let body = serde_json::json!({
                "poly_beta_mod1": poly.beta_mod1(),
                "poly_alpha_mod1": with_alpha.alpha_mod1(),
                "smoothness_norm": norm,
                "wtrick": json(&wt),
                "correlation": json(&rep),
            });
            Ok(vec![with_header(header(cli, "phase", ov), json(args), body)])
        }
        Command::Linsys(args) => {
            let text = std::fs::read_to_string(&args.file)
                .map_err(|e| Error::domain(format!("cannot read {}: {e}", args.file)))?;
            let (sys, run_spec) = linsys::parse_system_file(&text)?;
            let n = args
                .n
                .or(run_spec.n_scale)
                .ok_or_else(|| Error::domain("missing N (flag --n or descriptor line n)"))?;
            let y = args
                .y
                .or(run_spec.y_hi)
                .ok_or_else(|| Error::domain("missing y (flag --y or descriptor line y)"))?;
            let y_lo = args.yprime.or(run_spec.y_lo).unwrap_or(1.0);
            let w = SmoothWindow::new(y_lo, y)?;
            let count = linsys::count_solutions(&sys, n, &w, args.weighted)?;
            let series = match args.p_limit {
                Some(limit) => Some(linsys::singular_series(&sys, limit)?),
                None => None,
            };
            let body = serde_json::json!({
                "canonical": sys.canonical_text(),
                "count": json(&count),
                "singular_series": series.map(|s| json(&s)),
            });
            Ok(vec![with_header(header(cli, "linsys", ov), json(args), body)])
        }
        Command::Abc(args) => {
            let w = SmoothWindow::new(args.yprime, args.y)?;
            let rep = linsys::abc_census(args.n, &w, args.coprime)?;
            Ok(vec![with_header(header(cli, "abc", ov), json(args), json(&rep))])
        }
    }
}
