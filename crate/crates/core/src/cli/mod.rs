//! Command-line driver.
//!
//! Every command reads a TOML config (`--config`) and writes one table as
//! CSV (default) or JSON. Physical inputs are given in the units of the
//! `[units]` section and converted once at parse time; outputs use the same
//! units.
//!
//! ```toml
//! [run]                  # optional; --seed and --tol override
//! seed = 7
//! tol = 1e-10
//!
//! [units]
//! energy = "ev"          # ev | erg | natural
//! length = "angstrom"    # angstrom | cm | natural
//! mass_ratio = 1.0       # particle mass in electron masses
//!
//! [potential]            # transmit, resonance, riccati, bands
//! left_level = 0.0
//! right_level = 0.0
//! [[potential.segment]]
//! kind = "constant"      # constant (height) | gap | linear (start, slope) | sampled (heights)
//! width = 2.8
//! height = 0.9
//! role = "barrier"       # optional: barrier | well, used by band compression
//! tag = "left"           # optional label
//! ```
//!
//! Command sections:
//!
//! * `[transmit]`: `energy` (number or `{ from, to, steps }`), optional
//!   `gap_segment` (segment index) and `gap` (width sweep of that segment;
//!   0 removes it). Columns `E, L, D, ReT, ImT, ReR, ImR, status`, one row
//!   per `(L, E)` in long form.
//! * `[resonance]` with `mode`:
//!   `rect_pair` (`l_max`, `[[resonance.cases]]` with `height, width,
//!   energy, reference`), `gap` (`gap_segment, energy, l_min, l_max, grid`),
//!   `energy` (`e_min, e_max, grid`) or `density` (`height, width,
//!   intra_gap, inter_gap, n = [..], e_min, e_max, grid`). Columns
//!   `E_or_L, D, family_index, n, L_closed, L_search, delta, L_reference`;
//!   density mode emits `N, peaks, min_spacing, warning`.
//! * `[riccati]`: `energy`, `form` (complex | real | alpha), `switch_rho`,
//!   `max_step`, `loss = { w = [re, im], w_prime = [re, im] }` (per unit
//!   length). Columns `x, rho, phi_rev, phi, delta, ReT, ImT`.
//! * `[wells]`: `wells = [{ depth, width }, ..]`, `barriers = [..]`,
//!   `outer` (infinite | finite), `grid`, optional
//!   `scan = { barriers = [idx, ..], from, to, steps }`. Energies are binding
//!   energies. Columns `scan_value, level_index, energy, event`.
//! * `[bands]`: `e_min, e_max, grid, factors = [..]`; the cell is
//!   `[potential]`. Columns `factor, band_index, E_lo, E_hi`.
//! * `[ensemble]`: `energy, center_width, samples`, `[ensemble.left]` and
//!   `[ensemble.right]` potentials, `[ensemble.distribution]` with `kind`
//!   (fixed | uniform | normal), `mean` (number or `"optimal"` with
//!   `search = [lo, hi]`), `half_width`, `std_dev`, `relative`.
//!   Columns `mean, SE, half_width, D_mean_height, z, samples, mean_height`.
//!
//! Outputs start with `#` comment lines; the lines prefixed `#% ` hold the
//! effective config, so an output file can be passed back to `--config`.
//! JSON output is `{header, columns, rows}` with the config in
//! `header.config`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::Config;

/// Exit code for unreadable or invalid configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for numerical failures, including failed rows.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tunnelkit", version, about = "Tunneling, resonance and spectra of 1-D barrier chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config, or a previous output to re-run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// RNG seed for `ensemble` (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance of the phase-equation integrator.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Transmittance and amplitudes over an energy (and gap) grid.
    Transmit,
    /// Resonant gaps or energies.
    Resonance,
    /// Phase-equation trajectory through the potential.
    Riccati,
    /// Bound levels of a multi-well system, optionally over a width scan.
    Wells,
    /// Allowed bands of a periodic cell under barrier compression.
    Bands,
    /// Transmittance averaged over a fluctuating central slab.
    Ensemble,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Transmit => "transmit",
            Command::Resonance => "resonance",
            Command::Riccati => "riccati",
            Command::Wells => "wells",
            Command::Bands => "bands",
            Command::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => {
                let a = v.abs();
                if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
                    v.to_string()
                } else {
                    format!("{v:e}")
                }
            }
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
    /// Rows whose evaluation failed numerically.
    pub failures: usize,
}

/// Run one command on an already parsed config. `cfg.run` supplies the
/// seed and tolerance.
pub fn execute(command: Command, cfg: &Config) -> Result<Table> {
    let u = config::Units::new(&cfg.units)?;
    match command {
        Command::Transmit => commands::transmit(cfg, &u),
        Command::Resonance => commands::resonance(cfg, &u),
        Command::Riccati => commands::riccati(cfg, &u, cfg.run.tol),
        Command::Wells => commands::wells(cfg, &u),
        Command::Bands => commands::bands(cfg, &u),
        Command::Ensemble => commands::ensemble(cfg, &u, cfg.run.seed.unwrap_or(0)),
    }
}

pub fn render(command: Command, cfg: &Config, table: &Table, format: Format) -> Result<String> {
    let echo = config::to_toml(cfg)?;
    let version = env!("CARGO_PKG_VERSION");
    match format {
        Format::Csv => {
            let mut out = format!("# tunnelkit {version} {}\n", command.name());
            for n in &table.notes {
                out.push_str(&format!("# {n}\n"));
            }
            for l in echo.lines() {
                out.push_str(&format!("#% {l}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
            Ok(out)
        }
        Format::Json => {
            let doc = serde_json::json!({
                "header": {
                    "tool": "tunnelkit",
                    "version": version,
                    "command": command.name(),
                    "notes": table.notes,
                    "config": echo,
                },
                "columns": table.columns,
                "rows": table.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub failures: usize,
}

/// Load the config, apply flag overrides, run, render and write `--out`.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <file> is required".into()))?;
    let raw = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse(&raw)?;
    if let Some(c) = cfg.run.command {
        if c != cli.command {
            return Err(Error::Config(format!(
                "config was written for `{}`, not `{}`",
                c.name(),
                cli.command.name()
            )));
        }
    }
    cfg.run.command = Some(cli.command);
    cfg.run.seed = cli.seed.or(cfg.run.seed);
    cfg.run.tol = cli.tol.or(cfg.run.tol);
    if cli.command == Command::Ensemble {
        cfg.run.seed.get_or_insert(0);
    }
    let table = match cli.threads {
        Some(n) => {
            if n == 0 {
                return Err(Error::Config("--threads must be >= 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?
                .install(|| execute(cli.command, &cfg))?
        }
        None => execute(cli.command, &cfg)?,
    };
    let text = render(cli.command, &cfg, &table, cli.format)?;
    if let Some(out) = &cli.out {
        std::fs::write(out, &text).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    }
    Ok(Outcome {
        text,
        failures: table.failures,
    })
}
