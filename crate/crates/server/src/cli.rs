use std::io::Write;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};
use concert_core::model::MetricKind;
use concert_core::persist::{CourseConfig, DataStore};
use concert_core::synthgen::{self, generate, ArchetypeMix, SynthParams};

use crate::api::{router, AppState};
use crate::error::ServiceError;
use crate::service::{self, ApplyRequest, EmailRequest, IngestRequest, PutFilter, Selection, Sources};

#[derive(Debug, Parser)]
#[command(name = "concert", version, about = "Teamwork analytics for project courses")]
pub struct Cli {
    /// Directory holding one subdirectory per course.
    #[arg(long, global = true, env = "CONCERT_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
    /// Register a course from its config, roster CSV and teams document.
    CreateCourse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        teams: PathBuf,
        /// Replace the roster and teams of an existing course.
        #[arg(long)]
        replace: bool,
    },
    /// Load one source export into a course, replacing that source's events.
    Ingest {
        #[arg(long)]
        course: String,
        /// forum, tickets or git
        #[arg(long)]
        source: String,
        #[arg(long)]
        file: PathBuf,
        /// Path regex whose git line counts are ignored; repeatable.
        #[arg(long = "ignore")]
        ignore: Vec<String>,
    },
    /// Write a seeded synthetic class and register it when a data directory is set.
    Synth {
        #[arg(long)]
        teams: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        members: usize,
        /// e.g. `silent=3,free_rider=3`; remaining teams are balanced.
        #[arg(long)]
        mix: Option<String>,
        #[arg(long, default_value = "synth")]
        course_id: String,
    },
    /// Print the teams a filter selects.
    Report {
        #[arg(long)]
        course: String,
        #[arg(long)]
        filter: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        end: String,
        /// Comma-separated metric kinds; all five by default.
        #[arg(long)]
        sources: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Save a named filter.
    SaveFilter {
        #[arg(long)]
        course: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        filter: String,
        #[arg(long)]
        overwrite: bool,
    },
    /// Print an email draft for one team as JSON.
    Email {
        #[arg(long)]
        course: String,
        #[arg(long)]
        team: String,
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        member: Option<String>,
    },
}

fn data_store(dir: &Option<PathBuf>) -> Result<DataStore, ServiceError> {
    let dir = dir.as_ref().ok_or_else(|| {
        ServiceError::bad_request("MissingDataDir", "set --data-dir or CONCERT_DATA_DIR")
    })?;
    Ok(DataStore::open(dir)?)
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::from((e, path)))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("response types serialize")
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), ServiceError> {
    writeln!(out, "{text}").map_err(|e| ServiceError::new(500, "IoError", e.to_string()))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), ServiceError> {
    match cli.command {
        Command::Serve { port, bind } => serve(data_store(&cli.data_dir)?, bind, port, out),
        Command::CreateCourse {
            config,
            roster,
            teams,
            replace,
        } => {
            let ds = data_store(&cli.data_dir)?;
            let config: CourseConfig = serde_json::from_str(&read(&config)?)
                .map_err(|e| ServiceError::bad_request("ValidationError", format!("{}: {e}", config.display())))?;
            let course = ds.create_course(&config, &read(&roster)?, &read(&teams)?, replace)?;
            write_out(
                out,
                &format!("registered {} ({} teams, {} students)", course.course_id, course.teams.len(), course.roster.len()),
            )
        }
        Command::Ingest {
            course,
            source,
            file,
            ignore,
        } => {
            let ds = data_store(&cli.data_dir)?;
            let req = IngestRequest {
                source,
                path: file.to_string_lossy().into_owned(),
                ignore,
            };
            let report = service::ingest(&ds, &course, &req)?;
            write_out(out, &json(&report))
        }
        Command::Synth {
            teams,
            seed,
            out: dir,
            members,
            mix,
            course_id,
        } => {
            let mut params = SynthParams::new(teams, seed);
            params.members_per_team = members;
            params.course_id = course_id;
            if let Some(m) = mix {
                params.mix = ArchetypeMix::parse(&m, teams)?;
            }
            let generated = generate(&params)?;
            generated.write_to(&dir)?;
            for name in generated.files.keys() {
                write_out(out, &format!("wrote {}", dir.join(name).display()))?;
            }
            if cli.data_dir.is_some() {
                let ds = data_store(&cli.data_dir)?;
                ds.create_course(
                    &generated.config,
                    generated.file(synthgen::ROSTER_FILE),
                    generated.file(synthgen::TEAMS_FILE),
                    true,
                )?;
                write_out(out, &format!("registered course {}", generated.config.course_id))?;
            }
            Ok(())
        }
        Command::Report {
            course,
            filter,
            start,
            end,
            sources,
            format,
        } => {
            let ds = data_store(&cli.data_dir)?;
            let req = ApplyRequest {
                expr_text: Some(filter),
                name: None,
                start: Some(start),
                end: Some(end),
                sources: sources.map(Sources::Text),
            };
            let selection = service::apply(&ds, &course, &req)?;
            match format {
                Format::Json => write_out(out, &json(&selection)),
                Format::Table => write_out(out, &table(&selection)),
            }
        }
        Command::SaveFilter {
            course,
            name,
            filter,
            overwrite,
        } => {
            let ds = data_store(&cli.data_dir)?;
            let req = PutFilter {
                expr_text: filter,
                overwrite,
            };
            let (saved, _) = service::save_filter(&ds, &course, &name, &req, Utc::now())?;
            write_out(out, &format!("saved @{} = {}", saved.name, saved.expr))
        }
        Command::Email {
            course,
            team,
            template,
            member,
        } => {
            let ds = data_store(&cli.data_dir)?;
            let req = EmailRequest {
                template_name: template,
                member_id: member,
                ..EmailRequest::default()
            };
            write_out(out, &json(&service::email(&ds, &course, &team, &req)?))
        }
    }
}

/// Selected teams, one row each, with totals of the enabled kinds.
pub fn table(sel: &Selection) -> String {
    if sel.selected.is_empty() {
        return "no teams matched".to_string();
    }
    let kinds: &[MetricKind] = &sel.sources;
    let mut header = vec!["team_id".to_string(), "name".to_string(), "members".to_string()];
    header.extend(kinds.iter().map(|k| k.to_string()));
    let mut rows = vec![header];
    for t in &sel.selected {
        let mut row = vec![
            t.team_id.clone(),
            t.name.clone(),
            t.members.iter().map(|m| m.display_name.as_str()).collect::<Vec<_>>().join(", "),
        ];
        row.extend(kinds.iter().map(|k| t.metrics.total(*k).to_string()));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn serve(ds: DataStore, bind: IpAddr, port: u16, out: &mut dyn Write) -> Result<(), ServiceError> {
    let io = |e: std::io::Error| ServiceError::new(500, "IoError", e.to_string());
    let rt = tokio::runtime::Runtime::new().map_err(io)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((bind, port)).await.map_err(io)?;
        let addr = listener.local_addr().map_err(io)?;
        write_out(out, &format!("listening on http://{addr}"))?;
        out.flush().map_err(io)?;
        axum::serve(listener, router(AppState::new(ds))).await.map_err(io)
    })
}
