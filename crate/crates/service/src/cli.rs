use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gapscope_core::analysis::records::{save_csv, save_json};
use gapscope_core::analysis::{Attribution, FilterConfig, Normalization, SelectionExpr};
use gapscope_core::geo::{colorize_grid, AggregationStrategy};
use gapscope_core::model::VariantTag;
use gapscope_core::sim::InstanceId;
use gapscope_core::Error as CoreError;
use serde_json::{json, Value};

use crate::api::{instance_heatmap, session_geomap};
use crate::config::Config;
use crate::error::{ServiceError, ServiceResult};
use crate::session::Session;

#[derive(Debug, Parser)]
#[command(
    name = "gapscope",
    version,
    about = "Diagnose where a pose regressor's sim2real gap comes from"
)]
pub struct Cli {
    /// Session config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Session directory; overrides GAPSCOPE_SESSION_DIR and the config.
    #[arg(long, global = true)]
    pub session: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scene generation.
    Scene {
        #[command(subcommand)]
        action: GenAction,
    },
    /// Paired dataset generation.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Train a variant on the session dataset.
    Train {
        #[arg(long)]
        variant: VariantTag,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Paired evaluation; writes records JSON and CSV.
    Evaluate {
        #[arg(long)]
        variant: VariantTag,
    },
    /// One instance's attribution map, printed as JSON.
    Attrib(AttribArgs),
    /// Dataset-level bird's-eye heat map.
    Geomap(GeomapArgs),
    /// Register an input filter over a trained variant.
    Filter(FilterArgs),
    /// Evaluate a selection expression (JSON) and optionally save it.
    Select {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value = "vanilla")]
        variant: VariantTag,
        #[arg(long)]
        save: Option<String>,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Write a variant's records to a file.
    Export {
        #[arg(long)]
        variant: VariantTag,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to a saved selection.
        #[arg(long)]
        selection: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenAction {
    Gen,
}

#[derive(Debug, Subcommand)]
pub enum DatasetAction {
    Gen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct AttribArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub instance: InstanceId,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long, default_value = "vanilla")]
    pub variant: VariantTag,
    /// `per_image` or `none`; occlusion maps are always raw.
    #[arg(long, default_value = "per_image")]
    pub normalization: String,
    /// Also write the colorized map here.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeomapArgs {
    #[arg(long, default_value = "vanilla")]
    pub variant: VariantTag,
    #[arg(long, default_value = "feature_distance")]
    pub method: String,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long, default_value = "SUM")]
    pub strategy: AggregationStrategy,
    #[arg(long)]
    pub selection: Option<String>,
    /// File stem under the session's exports directory.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub id: String,
    #[arg(long, default_value = "vanilla")]
    pub base: VariantTag,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub brightness: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub contrast: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.0)]
    pub depth_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub depth_hi: f64,
}

fn parse_normalization(s: &str) -> ServiceResult<Normalization> {
    match s.to_ascii_lowercase().as_str() {
        "per_image" | "per-image" => Ok(Normalization::PerImage),
        "none" | "raw" => Ok(Normalization::None),
        other => Err(CoreError::InvalidArgument(format!("unknown normalization `{other}`")).into()),
    }
}

fn open_session(cli: &Cli) -> ServiceResult<Session> {
    let config = cli.config.as_ref().map(Config::load).transpose()?;
    let root = config
        .clone()
        .unwrap_or_default()
        .session_root(cli.session.as_deref());
    Session::open_or_create(root, config)
}

pub fn run(cli: Cli) -> ServiceResult<Value> {
    let mut s = open_session(&cli)?;
    Ok(match cli.command {
        Command::Scene {
            action: GenAction::Gen,
        } => {
            let (sim, real) = s.gen_scenes()?.clone();
            json!({
                "sim": s.root().join("scenes/sim.json"),
                "real": s.root().join("scenes/real.json"),
                "rooms": sim.rooms.len(),
                "objects": [sim.objects.len(), real.objects.len()],
            })
        }
        Command::Dataset {
            action: DatasetAction::Gen { n, seed },
        } => serde_json::to_value(s.gen_dataset(n, seed)?)?,
        Command::Train { variant, epochs } => {
            let m = s.train(&variant, epochs)?;
            json!({
                "variant": variant,
                "parameters": m.parameter_count(),
                "epochs": m.meta.loss_curve.len(),
                "final_loss": m.meta.loss_curve.last(),
                "path": s.meta.models[&variant].path,
            })
        }
        Command::Evaluate { variant } => {
            let recs = s.records(&variant)?;
            let r = &s.meta.records[&variant];
            json!({
                "variant": variant,
                "rows": recs.len(),
                "json": s.root().join(&r.path),
                "csv": s.root().join(&r.csv),
                "summary": gapscope_core::analysis::summarize(&recs),
            })
        }
        Command::Attrib(a) => {
            let method = Attribution::parse(&a.method, a.channel.as_deref())?;
            let view = instance_heatmap(
                &s,
                a.instance,
                &a.variant,
                method,
                parse_normalization(&a.normalization)?,
            )?;
            if let Some(p) = &a.png {
                use base64::Engine;
                let png = base64::engine::general_purpose::STANDARD
                    .decode(&view.png)
                    .map_err(|e| ServiceError::Session(e.to_string()))?;
                std::fs::write(p, png)?;
            }
            serde_json::to_value(&view.heatmap)?
        }
        Command::Geomap(g) => {
            let method = Attribution::parse(&g.method, g.channel.as_deref())?;
            let sel = match &g.selection {
                Some(name) => {
                    let recs = s.records(&g.variant)?;
                    Some(s.evaluate_selection(&SelectionExpr::Saved { name: name.clone() }, &recs)?)
                }
                None => None,
            };
            let grid = session_geomap(&s, &g.variant, method, g.strategy, sel.as_ref())?;
            let stem = g.out.unwrap_or_else(|| {
                let m = serde_json::to_value(method)
                    .ok()
                    .and_then(|v| v["method"].as_str().map(String::from));
                format!(
                    "geomap-{}-{}",
                    g.variant.to_string().replace(':', "--"),
                    m.unwrap_or_default()
                )
            });
            let dir = s.exports_dir();
            grid.export(&dir, &stem)?;
            std::fs::write(
                dir.join(format!("{stem}.png")),
                colorize_grid(&grid).to_png()?,
            )?;
            json!({ "metadata": grid.metadata(), "tensor": dir.join(format!("{stem}.gst")), "png": dir.join(format!("{stem}.png")) })
        }
        Command::Filter(f) => {
            let cfg = FilterConfig {
                id: f.id,
                brightness: f.brightness,
                contrast: f.contrast,
                temperature: f.temperature,
                depth_range: (f.depth_lo, f.depth_hi),
            };
            let variant = cfg.variant();
            let recs = s.add_filter(cfg, &f.base)?;
            json!({ "variant": variant, "base": f.base, "summary": gapscope_core::analysis::summarize(&recs) })
        }
        Command::Select {
            expr,
            variant,
            save,
        } => {
            let expr: SelectionExpr = serde_json::from_str(&expr)
                .map_err(|e| CoreError::InvalidArgument(format!("selection expression: {e}")))?;
            let recs = s.records(&variant)?;
            let set = s.evaluate_selection(&expr, &recs)?;
            if let Some(name) = save {
                s.save_selection(&name, &variant, set.clone())?;
            }
            serde_json::to_value(set)?
        }
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::api::serve(s, std::net::SocketAddr::new(host, port)))?;
            json!({ "stopped": true })
        }
        Command::Export {
            variant,
            format,
            out,
            selection,
        } => {
            let recs = s.records(&variant)?;
            let recs: Vec<_> = match &selection {
                Some(name) => {
                    let set =
                        s.evaluate_selection(&SelectionExpr::Saved { name: name.clone() }, &recs)?;
                    recs.iter()
                        .filter(|r| set.contains(r.id))
                        .cloned()
                        .collect()
                }
                None => recs.to_vec(),
            };
            let out = out.unwrap_or_else(|| {
                s.exports_dir().join(format!(
                    "{}.{format}",
                    variant.to_string().replace(':', "--")
                ))
            });
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            match format.as_str() {
                "csv" => save_csv(&recs, &out)?,
                "json" => save_json(&recs, &out)?,
                other => {
                    return Err(
                        CoreError::InvalidArgument(format!("unknown format `{other}`")).into(),
                    )
                }
            }
            json!({ "variant": variant, "rows": recs.len(), "path": out })
        }
    })
}

/// Parses arguments, runs the command, prints its JSON result on stdout or
/// an error object on stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::to_string(&e.body()).expect("error body serializes")
            );
            ExitCode::FAILURE
        }
    }
}
