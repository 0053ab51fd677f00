use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use latcount_cli::{emit_report, parse_config, run_experiment, CliError, ExperimentSpec, Format, Kind};

/// Lattice point counting experiments.
///
/// Settings come from `--config` (key=value lines using the flag names) with
/// flags taking precedence. Reports go to `<out>.csv` and `<out>.json`, or to
/// stdout when `--out` is absent.
#[derive(Parser, Debug)]
#[command(name = "latcount", version)]
struct Args {
    /// count, volume, admissibility, balanced, coset, torus, spectral, forms or sarith
    kind: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// sl2z, sl3z or sl2z1p
    #[arg(long)]
    group: Option<String>,
    /// rnorm:2, rnorm:inf, hyperbolic, form:deg=4:coeffs=1,0,0,0,1, height:p=2
    #[arg(long)]
    gauge: Option<String>,
    /// T (raw size) or t (logarithmic)
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Modulus for coset experiments
    #[arg(long)]
    q: Option<String>,
    /// Integrability exponent p of the spectral bounds
    #[arg(long)]
    p: Option<String>,
    /// Interpolation exponent r of the spectral bounds
    #[arg(long)]
    r: Option<String>,
    /// The prime of sl2z1p
    #[arg(long)]
    prime: Option<String>,
    /// Dimension of the second tensor factor in balanced
    #[arg(long)]
    l: Option<String>,
    /// Character m1,m2 on the torus
    #[arg(long)]
    observable: Option<String>,
    /// Base point a,b on the torus
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Cap on enumerated elements (default from LATCOUNT_BUDGET, else 10^7)
    #[arg(long)]
    budget: Option<String>,
    /// Output path; the extension is replaced by .csv / .json
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; both when omitted
    #[arg(long)]
    format: Option<String>,
}

impl Args {
    fn settings(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut settings = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| CliError::Io { path: path.clone(), source })?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("group", &self.group),
            ("gauge", &self.gauge),
            ("scale", &self.scale),
            ("tmax", &self.tmax),
            ("steps", &self.steps),
            ("q", &self.q),
            ("p", &self.p),
            ("r", &self.r),
            ("prime", &self.prime),
            ("l", &self.l),
            ("observable", &self.observable),
            ("x0", &self.x0),
            ("threads", &self.threads),
            ("seed", &self.seed),
            ("budget", &self.budget),
            ("format", &self.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                settings.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            settings.insert("out".into(), out.to_string_lossy().into_owned());
        }
        Ok(settings)
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    let kind: Kind = args.kind.parse()?;
    let spec = ExperimentSpec::from_settings(kind, &args.settings()?)?;
    let report = run_experiment(&spec)?;
    match &spec.out {
        Some(out) => {
            for path in emit_report(&report, spec.format, out)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let body = match spec.format {
                Some(Format::Csv) => report.table.to_csv(),
                _ => report.to_json_string(),
            };
            std::io::stdout()
                .write_all(body.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
    }
    for b in report.bounds.iter().filter(|b| !b.pass) {
        eprintln!("FAIL {}: theory {} vs observed {} ({})", b.name, b.theory, b.observed, b.rule);
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latcount: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
