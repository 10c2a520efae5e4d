//! `ramlab` — command-line front-end for the ramification toolkit.
//!
//! Exit codes: `0` on success, `1` when a computation reports a failed
//! check (an invalid sequence, a failed construction gate, oracle
//! failures), `2` on usage errors (bad flags, malformed input).
//!
//! Output goes to stdout as JSON by default (`--format table` renders
//! the same data as aligned text).  Big integers are always serialized
//! as decimal strings.  The environment variable
//! `RAMLAB_PRECISION_CAP` overrides the certified-arithmetic
//! refinement cap (bits).

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ramlab_core::breaks::{
    ef_slope, irat_check, lower_to_upper, nu_to_lower, nu_to_upper, parse_breaks_json, phi_eval,
    psi_eval, psi_eval_upper, upper_to_lower, validate_upper, BreaksData, LowerBreaks,
    NuSequence, UpperBreaks,
};
use ramlab_core::constructions::{
    construct_ex1, construct_ex_2not1, construct_ex_3not2, construct_h1_synthetic, construct_h2,
    construct_h_gt2, ConstructionReport, ConstructionsError,
};
use ramlab_core::exactmath::{
    parse_bigint, parse_ratio, ratio_string, set_precision_cap, BigInt, BigRational,
};
use ramlab_core::heights::{
    filtration, ht1_detect, ht2_estimate, ht3_estimate, Ht1Verdict, Ht2Verdict, Ht3Verdict,
};
use ramlab_core::nottingham::{
    comp_inverse, comp_power, compose, ram_sequence, FieldSpec, WildSeries,
};
use ramlab_core::oracle::{default_corpus, height_oracle, run_suite, SuiteConfig, TrialSpec};

// ---------------------------------------------------------------------------
// Argument tree
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "ramlab",
    version,
    about = "Ramification data of wild automorphisms of local fields",
    propagate_version = true
)]
struct Cli {
    /// Output format (json is the stable contract; table is cosmetic).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Truncated power series under composition.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Break sequences, conversions, and transition functions.
    #[command(subcommand)]
    Breaks(BreaksCmd),
    /// The closed-form families of wild automorphisms.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Growth-rate estimators on break data.
    #[command(subcommand)]
    Heights(HeightsCmd),
    /// Randomized cross-validation suites.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

/// One series given inline (prime field) or as a JSON payload.
#[derive(Args)]
struct SeriesInput {
    /// Characteristic (prime) for inline coefficients.
    #[arg(long)]
    p: Option<u64>,
    /// Truncation N for inline coefficients.
    #[arg(long)]
    n: Option<usize>,
    /// Inline coefficients c_1,c_2,... over F_p (zero-padded to N).
    #[arg(long, value_name = "LIST")]
    coeffs: Option<String>,
    /// JSON series payload (path, or "-" for stdin).
    #[arg(long)]
    input: Option<String>,
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Compose two series: f(g(t)).
    Compose {
        /// Characteristic (prime).
        #[arg(long)]
        p: u64,
        /// Truncation N.
        #[arg(long)]
        n: usize,
        /// Coefficients c_1,c_2,... of f over F_p (zero-padded).
        #[arg(long, value_name = "LIST")]
        f: String,
        /// Coefficients c_1,c_2,... of g over F_p (zero-padded).
        #[arg(long, value_name = "LIST")]
        g: String,
    },
    /// Compositional inverse of a series.
    Inverse {
        #[command(flatten)]
        series: SeriesInput,
    },
    /// Non-negative compositional power of a series.
    Power {
        #[command(flatten)]
        series: SeriesInput,
        /// Exponent k >= 0.
        #[arg(long)]
        k: String,
    },
    /// Ramification sequence i_0..i_levels of a series.
    Breaks {
        #[command(flatten)]
        series: SeriesInput,
        /// Deepest level to compute.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

/// Break data given inline or as a JSON payload.
#[derive(Args)]
struct BreaksInput {
    /// Characteristic (prime) for inline sequences.
    #[arg(long)]
    p: Option<String>,
    /// Inline upper breaks a_0,a_1,...
    #[arg(long, value_name = "LIST")]
    upper: Option<String>,
    /// Inline lower breaks b_0,b_1,...
    #[arg(long, value_name = "LIST")]
    lower: Option<String>,
    /// JSON breaks payload (path, or "-" for stdin).
    #[arg(long)]
    input: Option<String>,
}

#[derive(Subcommand)]
enum BreaksCmd {
    /// Check the growth and coprimality conditions on upper breaks.
    Validate {
        #[command(flatten)]
        data: BreaksInput,
    },
    /// Convert between the two numbering conventions.
    Convert {
        #[command(flatten)]
        data: BreaksInput,
    },
    /// Evaluate the piecewise-linear phi at a rational point (lower data).
    Phi {
        #[command(flatten)]
        data: BreaksInput,
        /// Evaluation point (integer or n/d).
        #[arg(long)]
        x: String,
        /// Continue the last slope beyond the data.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Evaluate psi at a rational point (upper data or an index function).
    Psi {
        #[command(flatten)]
        data: BreaksInput,
        /// Evaluation point (integer or n/d).
        #[arg(long)]
        x: String,
        /// Continue the last slope beyond the data.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Expand a nu-sequence into upper and lower breaks.
    FromNu {
        /// Characteristic (prime).
        #[arg(long)]
        p: String,
        /// nu_0,nu_1,... (nu_0 >= 1 and coprime to p; later entries
        /// zero or coprime to p).
        #[arg(long, value_name = "LIST")]
        nu: String,
    },
    /// Exact residuals of the level identity on a nu-sequence.
    IratCheck {
        /// Characteristic (prime).
        #[arg(long)]
        p: String,
        /// nu_0,nu_1,...
        #[arg(long, value_name = "LIST")]
        nu: String,
    },
    /// Tail slope of log_p of an index function at sample points.
    EfSlope {
        /// JSON index-function payload (path, or "-" for stdin).
        #[arg(long)]
        input: String,
        /// Explicit samples x_1,x_2,... (integers or n/d).
        #[arg(long, value_name = "LIST")]
        samples: Option<String>,
        /// Generate samples step, 2*step, ... up to this bound.
        #[arg(long)]
        samples_up_to: Option<u64>,
        /// Step for generated samples.
        #[arg(long, default_value_t = 10)]
        step: u64,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// Synthetic residue-characteristic-zero break pattern (height 1).
    H1 {
        #[arg(long)]
        p: String,
        /// Absolute ramification index e_F >= 1.
        #[arg(long)]
        ef: String,
        /// Leading constant c >= 1, coprime to p.
        #[arg(long)]
        c: String,
        /// Number of levels beyond the first (N >= 2).
        #[arg(long)]
        n: usize,
    },
    /// The geometric family a_n = p^n (height 2).
    H2 {
        #[arg(long)]
        p: String,
        /// Number of levels beyond the first (N >= 1).
        #[arg(long)]
        n: usize,
    },
    /// The greedy family tracking p^h-growth (height h > 2, rational h).
    Hgt2 {
        #[arg(long)]
        p: String,
        /// Target height (integer or n/d), h > 2.
        #[arg(long)]
        h: String,
        /// Number of levels beyond the first (N >= 1).
        #[arg(long)]
        n: usize,
    },
    /// The rank-2 example with heights (7, 7/2) (odd p).
    Ex1 {
        #[arg(long)]
        p: String,
        /// Number of ceiling-sequence levels (>= 2).
        #[arg(long)]
        levels: usize,
    },
    /// The family with a ratio limit but no scaled limit.
    #[command(name = "ex-3not2")]
    Ex3not2 {
        #[arg(long)]
        p: String,
        /// Number of levels beyond the first (N >= 2).
        #[arg(long)]
        n: usize,
    },
    /// The family with a scaled limit but no constant difference ratio.
    #[command(name = "ex-2not1")]
    Ex2not1 {
        #[arg(long)]
        p: String,
        /// Number of levels beyond the first (N >= 2).
        #[arg(long)]
        n: usize,
    },
}

/// Lower-break data for the estimators.
#[derive(Args)]
struct LowerInput {
    /// Characteristic (prime) for inline data.
    #[arg(long)]
    p: Option<String>,
    /// Inline lower breaks b_0,b_1,...
    #[arg(long, value_name = "LIST")]
    lower: Option<String>,
    /// JSON breaks payload of kind "lower" (path, or "-" for stdin).
    #[arg(long)]
    input: Option<String>,
}

#[derive(Subcommand)]
enum HeightsCmd {
    /// Scan consecutive-difference ratios for an exact constant.
    Ht1 {
        #[command(flatten)]
        data: LowerInput,
        /// Number of trailing ratios that must agree.
        #[arg(long, default_value_t = 5)]
        window: usize,
    },
    /// Judge convergence of i_n / p^(h*n).
    Ht2 {
        #[command(flatten)]
        data: LowerInput,
        /// Candidate height (integer or n/d).
        #[arg(long)]
        h: String,
        /// Number of trailing values judged.
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Relative tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Estimate the ratio-limit height from log-ratios.
    Ht3 {
        #[command(flatten)]
        data: LowerInput,
        /// Number of trailing accelerated ratios judged.
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Absolute tolerance.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Rank table of a finite set of heights over a grid.
    Filtration {
        /// Generator heights h_1,h_2,... (integers or n/d).
        #[arg(long, value_name = "LIST")]
        heights: String,
        /// Grid points to tabulate (integers or n/d).
        #[arg(long, value_name = "LIST")]
        grid: String,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Run randomized cross-validation trials.
    Run {
        /// Characteristic (prime) for a uniform trial list.
        #[arg(long)]
        p: Option<u64>,
        /// Residue field degree over the prime field.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Series truncation for a uniform trial list.
        #[arg(long)]
        trunc: Option<usize>,
        /// Number of trials for a uniform trial list.
        #[arg(long)]
        trials: Option<usize>,
        /// Use the built-in 400-trial mixed corpus instead.
        #[arg(long, conflicts_with_all = ["p", "trunc", "trials"])]
        default_corpus: bool,
        /// RNG seed (the whole run is a pure function of it).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (the merged output is jobs-independent).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also print one JSON line per trial.
        #[arg(long)]
        lines: bool,
    },
    /// Check the height estimators against the expected-verdict table.
    HeightCheck,
}

// ---------------------------------------------------------------------------
// Error plumbing
// ---------------------------------------------------------------------------

enum CliError {
    /// Malformed input: exit 2 after printing to stderr.
    Usage(String),
    /// A computation reported a failure: print the payload to stdout
    /// and exit 1.
    Check(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult = Result<String, CliError>;

// ---------------------------------------------------------------------------
// Input helpers
// ---------------------------------------------------------------------------

fn read_payload(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading {path}: {e}")))
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

fn parse_bigint_list(s: &str) -> Result<Vec<BigInt>, CliError> {
    split_list(s).into_iter().map(|t| parse_bigint(t).map_err(CliError::Usage)).collect()
}

fn parse_ratio_list(s: &str) -> Result<Vec<BigRational>, CliError> {
    split_list(s).into_iter().map(|t| parse_ratio(t).map_err(CliError::Usage)).collect()
}

fn parse_prime(s: &str) -> Result<BigInt, CliError> {
    parse_bigint(s).map_err(CliError::Usage)
}

/// Inline coefficients c_1,c_2,... over F_p, zero-padded to N.
fn inline_series(p: u64, n: usize, coeffs: &str) -> Result<WildSeries, CliError> {
    let field = FieldSpec::gf(p).map_err(usage)?;
    let listed = split_list(coeffs);
    if listed.len() > n {
        return Err(CliError::Usage(format!(
            "{} coefficients exceed the truncation N = {n}",
            listed.len()
        )));
    }
    let mut cs = Vec::with_capacity(n);
    for t in &listed {
        let v: u64 = t
            .parse()
            .map_err(|e| CliError::Usage(format!("coefficient {t:?}: {e}")))?;
        cs.push(field.scalar(v));
    }
    cs.resize(n, field.zero());
    WildSeries::new(field, n, &cs).map_err(usage)
}

fn resolve_series(input: &SeriesInput) -> Result<WildSeries, CliError> {
    match (&input.input, input.p, input.n, &input.coeffs) {
        (Some(path), None, None, None) => {
            WildSeries::from_json(&read_payload(path)?).map_err(usage)
        }
        (None, Some(p), Some(n), Some(coeffs)) => inline_series(p, n, coeffs),
        _ => Err(CliError::Usage(
            "give either --input, or all of --p, --n, --coeffs".into(),
        )),
    }
}

/// Inline or JSON break data, as the parsed payload enum.
fn resolve_breaks(data: &BreaksInput) -> Result<BreaksData, CliError> {
    match (&data.input, &data.p, &data.upper, &data.lower) {
        (Some(path), None, None, None) => {
            parse_breaks_json(&read_payload(path)?).map_err(usage)
        }
        (None, Some(p), Some(a), None) => {
            let upper =
                UpperBreaks::new(parse_prime(p)?, parse_bigint_list(a)?).map_err(usage)?;
            Ok(BreaksData::Upper(upper))
        }
        (None, Some(p), None, Some(b)) => {
            let lower = LowerBreaks::new_relaxed(parse_prime(p)?, parse_bigint_list(b)?)
                .map_err(usage)?;
            Ok(BreaksData::Lower(lower))
        }
        _ => Err(CliError::Usage(
            "give either --input, or --p with exactly one of --upper/--lower".into(),
        )),
    }
}

fn resolve_lower(data: &LowerInput) -> Result<LowerBreaks, CliError> {
    match (&data.input, &data.p, &data.lower) {
        (Some(path), None, None) => match parse_breaks_json(&read_payload(path)?).map_err(usage)? {
            BreaksData::Lower(l) => Ok(l),
            other => Err(CliError::Usage(format!(
                "expected a payload of kind \"lower\", got {}",
                breaks_kind(&other)
            ))),
        },
        (None, Some(p), Some(b)) => {
            LowerBreaks::new_relaxed(parse_prime(p)?, parse_bigint_list(b)?).map_err(usage)
        }
        _ => Err(CliError::Usage("give either --input, or --p and --lower".into())),
    }
}

fn breaks_kind(d: &BreaksData) -> &'static str {
    match d {
        BreaksData::Upper(_) => "upper",
        BreaksData::Lower(_) => "lower",
        BreaksData::Nu(_) => "nu",
        BreaksData::Index(_) => "index",
    }
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn value_of(json_text: &str) -> Value {
    serde_json::from_str(json_text).expect("library JSON is well-formed")
}

/// Aligned two-or-more-column table.
fn table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i + 1 == row.len() {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{cell:<width$}  ", width = widths[i]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.pop();
    out
}

fn sequence_table(label: &str, values: &[BigInt]) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["n".to_string(), label.to_string()]];
    for (n, v) in values.iter().enumerate() {
        rows.push(vec![n.to_string(), v.to_string()]);
    }
    rows
}

fn render_report(report: &ConstructionReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Table => {
            let mut rows: Vec<Vec<String>> = Vec::new();
            rows.push(vec!["family".into(), report.name.clone()]);
            rows.push(vec!["p".into(), report.p.to_string()]);
            if let Some(h) = &report.target_height {
                rows.push(vec!["target height".into(), ratio_string(h)]);
            }
            if let Some(u) = &report.upper {
                rows.push(vec!["upper".into(), join_bigints(u.values())]);
            }
            if let Some(l) = &report.lower {
                rows.push(vec!["lower".into(), join_bigints(l.values())]);
            }
            if let Some(nu) = &report.nu {
                rows.push(vec!["nu".into(), join_bigints(nu.values())]);
            }
            if let Some(c) = &report.c_sequence {
                rows.push(vec!["c".into(), join_bigints(c)]);
            }
            for (label, b) in &report.generators {
                rows.push(vec![format!("i ({label})"), join_bigints(b.values())]);
            }
            for check in &report.checks {
                rows.push(vec![
                    format!("check {}", check.name),
                    if check.pass { "pass".into() } else { format!("FAIL: {}", check.witness) },
                ]);
            }
            table(&rows)
        }
    }
}

fn join_bigints(values: &[BigInt]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn ht1_json(v: &Ht1Verdict) -> Value {
    match v {
        Ht1Verdict::Consistent { ratio, h, h_numeric, m } => json!({
            "verdict": "consistent",
            "ratio": ratio_string(ratio),
            "h": h,
            "h_numeric": h_numeric,
            "constant_from": m,
        }),
        Ht1Verdict::NonConstant { n, got, prev } => json!({
            "verdict": "non-constant",
            "at": n,
            "ratio": ratio_string(got),
            "previous": ratio_string(prev),
        }),
        Ht1Verdict::Inconclusive { reason } => json!({
            "verdict": "inconclusive",
            "reason": reason,
        }),
    }
}

fn ht2_json(h: &BigRational, verdict: &Ht2Verdict, q: &[(BigRational, BigRational)]) -> Value {
    let tail: Vec<Value> = q
        .iter()
        .map(|(lo, hi)| json!([ratio_string(lo), ratio_string(hi)]))
        .collect();
    match verdict {
        Ht2Verdict::Consistent { limit: (lo, hi), window } => json!({
            "h": ratio_string(h),
            "verdict": "consistent",
            "limit": [ratio_string(lo), ratio_string(hi)],
            "window": window,
            "q": tail,
        }),
        Ht2Verdict::Refuted { detail } => json!({
            "h": ratio_string(h),
            "verdict": "diverging",
            "detail": detail,
            "q": tail,
        }),
        Ht2Verdict::Inconclusive { reason } => json!({
            "h": ratio_string(h),
            "verdict": "inconclusive",
            "reason": reason,
            "q": tail,
        }),
    }
}

fn ht3_json(ratios: &[f64], accelerated: &[f64], verdict: &Ht3Verdict) -> Value {
    match verdict {
        Ht3Verdict::Consistent { h, window } => json!({
            "verdict": "consistent",
            "h": h,
            "window": window,
            "ratios": ratios,
            "accelerated": accelerated,
        }),
        Ht3Verdict::Refuted { detail } => json!({
            "verdict": "diverging",
            "detail": detail,
            "ratios": ratios,
            "accelerated": accelerated,
        }),
        Ht3Verdict::Inconclusive { reason } => json!({
            "verdict": "inconclusive",
            "reason": reason,
            "ratios": ratios,
            "accelerated": accelerated,
        }),
    }
}

fn render_value(v: &Value, format: Format) -> String {
    match format {
        Format::Json => v.to_string(),
        Format::Table => {
            let mut rows: Vec<Vec<String>> = Vec::new();
            flatten_value("", v, &mut rows);
            table(&rows)
        }
    }
}

fn flatten_value(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_value(&key, inner, rows);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let joined =
                items.iter().map(scalar_string).collect::<Vec<_>>().join(",");
            rows.push(vec![prefix.to_string(), joined]);
        }
        Value::Array(items) => {
            for (i, inner) in items.iter().enumerate() {
                flatten_value(&format!("{prefix}[{i}]"), inner, rows);
            }
        }
        scalar => rows.push(vec![prefix.to_string(), scalar_string(scalar)]),
    }
}

fn scalar_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

fn run_series(cmd: &SeriesCmd, format: Format) -> CliResult {
    match cmd {
        SeriesCmd::Compose { p, n, f, g } => {
            let fs = inline_series(*p, *n, f)?;
            let gs = inline_series(*p, *n, g)?;
            let composed = compose(&fs, &gs).map_err(usage)?;
            Ok(render_series(&composed, format))
        }
        SeriesCmd::Inverse { series } => {
            let f = resolve_series(series)?;
            let inv = comp_inverse(&f).map_err(usage)?;
            Ok(render_series(&inv, format))
        }
        SeriesCmd::Power { series, k } => {
            let f = resolve_series(series)?;
            let exponent = parse_bigint(k).map_err(CliError::Usage)?;
            let power = comp_power(&f, &exponent).map_err(usage)?;
            Ok(render_series(&power, format))
        }
        SeriesCmd::Breaks { series, levels } => {
            let f = resolve_series(series)?;
            let seq = ram_sequence(&f, *levels).map_err(usage)?;
            let value = json!({
                "p": f.field().p(),
                "m": f.field().m(),
                "N": f.truncation(),
                "i": seq.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            });
            Ok(render_value(&value, format))
        }
    }
}

fn render_series(s: &WildSeries, format: Format) -> String {
    match format {
        Format::Json => s.to_json(),
        Format::Table => format!("{s}"),
    }
}

fn run_breaks(cmd: &BreaksCmd, format: Format) -> CliResult {
    match cmd {
        BreaksCmd::Validate { data } => {
            let upper = match resolve_breaks(data)? {
                BreaksData::Upper(u) => u,
                other => {
                    return Err(CliError::Usage(format!(
                        "validate needs upper breaks, got kind \"{}\"",
                        breaks_kind(&other)
                    )))
                }
            };
            match validate_upper(&upper) {
                Ok(()) => Ok(render_value(&json!({ "valid": true }), format)),
                Err(violation) => Err(CliError::Check(render_value(
                    &json!({ "valid": false, "violation": violation.to_string() }),
                    format,
                ))),
            }
        }
        BreaksCmd::Convert { data } => match resolve_breaks(data)? {
            BreaksData::Upper(u) => {
                let lower = upper_to_lower(&u);
                Ok(match format {
                    Format::Json => lower.to_json(),
                    Format::Table => table(&sequence_table("b_n", lower.values())),
                })
            }
            BreaksData::Lower(l) => {
                let strict = LowerBreaks::new(l.p().clone(), l.values().to_vec())
                    .map_err(|e| CliError::Check(format!("not convertible: {e}")))?;
                let upper = lower_to_upper(&strict)
                    .map_err(|e| CliError::Check(format!("not convertible: {e}")))?;
                Ok(match format {
                    Format::Json => upper.to_json(),
                    Format::Table => table(&sequence_table("a_n", upper.values())),
                })
            }
            other => Err(CliError::Usage(format!(
                "convert needs upper or lower breaks, got kind \"{}\"",
                breaks_kind(&other)
            ))),
        },
        BreaksCmd::Phi { data, x, extrapolate } => {
            let lower = match resolve_breaks(data)? {
                BreaksData::Lower(l) => l,
                other => {
                    return Err(CliError::Usage(format!(
                        "phi needs lower breaks, got kind \"{}\"",
                        breaks_kind(&other)
                    )))
                }
            };
            let x = parse_ratio(x).map_err(CliError::Usage)?;
            let y = phi_eval(&lower, &x, *extrapolate).map_err(usage)?;
            Ok(render_value(
                &json!({ "x": ratio_string(&x), "phi": ratio_string(&y) }),
                format,
            ))
        }
        BreaksCmd::Psi { data, x, extrapolate } => {
            let x = parse_ratio(x).map_err(CliError::Usage)?;
            let y = match resolve_breaks(data)? {
                BreaksData::Upper(u) => psi_eval_upper(&u, &x, *extrapolate).map_err(usage)?,
                BreaksData::Index(f) => psi_eval(&f, &x, *extrapolate).map_err(usage)?,
                other => {
                    return Err(CliError::Usage(format!(
                        "psi needs upper breaks or an index function, got kind \"{}\"",
                        breaks_kind(&other)
                    )))
                }
            };
            Ok(render_value(
                &json!({ "x": ratio_string(&x), "psi": ratio_string(&y) }),
                format,
            ))
        }
        BreaksCmd::FromNu { p, nu } => {
            let s = NuSequence::new(parse_prime(p)?, parse_bigint_list(nu)?).map_err(usage)?;
            let upper = nu_to_upper(&s);
            let lower = nu_to_lower(&s);
            let value = json!({
                "nu": value_of(&s.to_json()),
                "upper": value_of(&upper.to_json()),
                "lower": value_of(&lower.to_json()),
            });
            Ok(render_value(&value, format))
        }
        BreaksCmd::IratCheck { p, nu } => {
            let s = NuSequence::new(parse_prime(p)?, parse_bigint_list(nu)?).map_err(usage)?;
            let residuals = irat_check(&s);
            let all_zero = residuals.iter().all(|r| r.to_string() == "0");
            let value = json!({
                "residuals": residuals.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "all_zero": all_zero,
            });
            let text = render_value(&value, format);
            if all_zero {
                Ok(text)
            } else {
                Err(CliError::Check(text))
            }
        }
        BreaksCmd::EfSlope { input, samples, samples_up_to, step } => {
            let f = match parse_breaks_json(&read_payload(input)?).map_err(usage)? {
                BreaksData::Index(f) => f,
                other => {
                    return Err(CliError::Usage(format!(
                        "ef-slope needs an index function, got kind \"{}\"",
                        breaks_kind(&other)
                    )))
                }
            };
            let xs: Vec<BigRational> = match (samples, samples_up_to) {
                (Some(list), None) => parse_ratio_list(list)?,
                (None, Some(bound)) => {
                    if *step == 0 {
                        return Err(CliError::Usage("step must be positive".into()));
                    }
                    (1..=bound / step)
                        .map(|k| BigRational::from(BigInt::from(k * step)))
                        .collect()
                }
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --samples or --samples-up-to".into(),
                    ))
                }
            };
            let report = ef_slope(&f, &xs).map_err(usage)?;
            let value = json!({
                "samples": xs.iter().map(ratio_string).collect::<Vec<_>>(),
                "ratios": report.ratios,
                "slope": report.slope,
                "tail_len": report.tail_len,
            });
            Ok(render_value(&value, format))
        }
    }
}

fn run_construct(cmd: &ConstructCmd, format: Format) -> CliResult {
    let result = match cmd {
        ConstructCmd::H1 { p, ef, c, n } => construct_h1_synthetic(
            &parse_prime(p)?,
            &parse_bigint(ef).map_err(CliError::Usage)?,
            &parse_bigint(c).map_err(CliError::Usage)?,
            *n,
        ),
        ConstructCmd::H2 { p, n } => construct_h2(&parse_prime(p)?, *n),
        ConstructCmd::Hgt2 { p, h, n } => {
            construct_h_gt2(&parse_prime(p)?, &parse_ratio(h).map_err(CliError::Usage)?, *n)
        }
        ConstructCmd::Ex1 { p, levels } => construct_ex1(&parse_prime(p)?, *levels),
        ConstructCmd::Ex3not2 { p, n } => construct_ex_3not2(&parse_prime(p)?, *n),
        ConstructCmd::Ex2not1 { p, n } => construct_ex_2not1(&parse_prime(p)?, *n),
    };
    match result {
        Ok(report) => Ok(render_report(&report, format)),
        Err(ConstructionsError::CheckFailed { report, .. }) => {
            Err(CliError::Check(render_report(&report, format)))
        }
        Err(e @ ConstructionsError::Parameter(_)) | Err(e @ ConstructionsError::CharTwo) => {
            Err(CliError::Usage(e.to_string()))
        }
        Err(e) => Err(CliError::Check(e.to_string())),
    }
}

fn run_heights(cmd: &HeightsCmd, format: Format) -> CliResult {
    match cmd {
        HeightsCmd::Ht1 { data, window } => {
            let lower = resolve_lower(data)?;
            let verdict = ht1_detect(&lower, *window);
            Ok(render_value(&ht1_json(&verdict), format))
        }
        HeightsCmd::Ht2 { data, h, window, tol } => {
            let lower = resolve_lower(data)?;
            let h = parse_ratio(h).map_err(CliError::Usage)?;
            let report = ht2_estimate(&lower, &h, *window, *tol).map_err(usage)?;
            Ok(render_value(&ht2_json(&report.h, &report.verdict, &report.q), format))
        }
        HeightsCmd::Ht3 { data, window, tol } => {
            let lower = resolve_lower(data)?;
            let report = ht3_estimate(&lower, *window, *tol).map_err(usage)?;
            Ok(render_value(&ht3_json(&report.ratios, &report.accelerated, &report.verdict), format))
        }
        HeightsCmd::Filtration { heights, grid } => {
            let hs = parse_ratio_list(heights)?;
            let gs = parse_ratio_list(grid)?;
            let rows = filtration(&hs, &gs);
            let value = json!(rows
                .iter()
                .map(|r| json!({
                    "h": ratio_string(&r.h),
                    "rank": r.rank,
                    "multiplicity": r.multiplicity,
                }))
                .collect::<Vec<_>>());
            Ok(render_value(&value, format))
        }
    }
}

fn run_oracle(cmd: &OracleCmd, format: Format) -> CliResult {
    match cmd {
        OracleCmd::Run { p, m, trunc, trials, default_corpus: use_default, seed, jobs, lines } => {
            let corpus: Vec<TrialSpec> = if *use_default {
                default_corpus()
            } else {
                match (p, trunc, trials) {
                    (Some(p), Some(trunc), Some(trials)) => (0..*trials)
                        .map(|_| TrialSpec { p: *p, m: *m, truncation: *trunc })
                        .collect(),
                    _ => {
                        return Err(CliError::Usage(
                            "give --default-corpus, or all of --p, --trunc, --trials".into(),
                        ))
                    }
                }
            };
            let config = SuiteConfig::new(*seed, *jobs, corpus).map_err(usage)?;
            let report = run_suite(&config).map_err(|e| CliError::Check(e.to_string()))?;
            let mut text = String::new();
            if *lines {
                for outcome in &report.outcomes {
                    text.push_str(&outcome.to_json_line());
                    text.push('\n');
                }
            }
            text.push_str(&match format {
                Format::Json => report.to_json(),
                Format::Table => {
                    let mut rows = vec![
                        vec!["trials".to_string(), report.outcomes.len().to_string()],
                        vec!["passed".to_string(), report.passed().to_string()],
                        vec!["failed".to_string(), report.failed().to_string()],
                        vec!["seed".to_string(), report.seed.to_string()],
                        vec!["digest".to_string(), report.digest.clone()],
                    ];
                    for failure in report.failures() {
                        rows.push(vec![
                            format!("failed trial {}", failure.index),
                            failure
                                .checks
                                .iter()
                                .filter(|c| !c.pass)
                                .map(|c| c.name.clone())
                                .collect::<Vec<_>>()
                                .join(","),
                        ]);
                    }
                    table(&rows)
                }
            });
            if report.failed() == 0 {
                Ok(text)
            } else {
                Err(CliError::Check(text))
            }
        }
        OracleCmd::HeightCheck => {
            let cases = height_oracle().map_err(|e| CliError::Check(e.to_string()))?;
            let all_pass = cases.iter().all(|c| c.pass);
            let value = json!(cases
                .iter()
                .map(|c| json!({
                    "name": c.name,
                    "pass": c.pass,
                    "expected": c.expected,
                    "got": c.got,
                }))
                .collect::<Vec<_>>());
            let text = render_value(&value, format);
            if all_pass {
                Ok(text)
            } else {
                Err(CliError::Check(text))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn apply_precision_cap() -> Result<(), CliError> {
    match std::env::var("RAMLAB_PRECISION_CAP") {
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::Usage(format!("RAMLAB_PRECISION_CAP: {e}"))),
        Ok(text) => {
            let bits: u32 = text
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("RAMLAB_PRECISION_CAP {text:?}: {e}")))?;
            if bits == 0 {
                return Err(CliError::Usage("RAMLAB_PRECISION_CAP must be positive".into()));
            }
            set_precision_cap(bits);
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Series(cmd) => run_series(cmd, cli.format),
        Command::Breaks(cmd) => run_breaks(cmd, cli.format),
        Command::Construct(cmd) => run_construct(cmd, cli.format),
        Command::Heights(cmd) => run_heights(cmd, cli.format),
        Command::Oracle(cmd) => run_oracle(cmd, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = apply_precision_cap().and_then(|()| dispatch(&cli));
    match outcome {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(CliError::Check(text)) => {
            println!("{text}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
