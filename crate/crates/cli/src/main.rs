//! `flowhub`: run the registry server, or operate on its store directly.
//!
//! Commands other than `serve` open the configured store in-process and go
//! through the same registry calls the HTTP API makes. The acting user is
//! named with `--user` or a bearer token with `--token`.

mod error;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use flowhub_core::model::{ClassId, EntryId, FileTree, SpaceId, TeamId, TeamRole, UserId};
use flowhub_core::registry::{
    Facet, MetadataPatch, NewTeam, NewUser, RegistrationRequest, RegistrationSource, SearchQuery,
    SortKey, SortOrder,
};
use flowhub_core::rocrate::{validate_crate, ConformanceLevel};
use flowhub_core::{Registry, RegistryConfig, RegistryError};
use serde_json::json;

use error::CliError;

/// Store used when neither `--store` nor the config names one.
const DEFAULT_STORE: &str = "flowhub-data";

#[derive(Parser)]
#[command(name = "flowhub", version, about = "FlowHub workflow registry")]
struct Cli {
    /// Configuration file; defaults to `$FLOWHUB_CONFIG`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory, overriding `store_dir` from the config.
    #[arg(long, global = true, env = "FLOWHUB_STORE")]
    store: Option<PathBuf>,
    /// Act as this user.
    #[arg(long, global = true, env = "FLOWHUB_USER")]
    user: Option<String>,
    /// Act as the owner of this bearer token.
    #[arg(long, global = true, env = "FLOWHUB_TOKEN", conflicts_with = "user")]
    token: Option<String>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Register a workflow from files, a Git repository or a crate zip.
    Register(RegisterArgs),
    /// Import Git releases that are not versions yet.
    Sync { entry: EntryId },
    /// Write a version of an entry as a Workflow RO-Crate.
    ExportCrate {
        entry: EntryId,
        #[arg(long)]
        version: Option<u32>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a crate zip against the workflow crate profile.
    ValidateCrate { archive: PathBuf },
    /// Search entries.
    Search(SearchArgs),
    /// Mint a DOI for one version of an entry.
    MintDoi {
        entry: EntryId,
        #[arg(long)]
        version: u32,
    },
    #[command(subcommand)]
    Admin(Admin),
}

#[derive(Args)]
struct RegisterArgs {
    /// A workflow file, a directory, a crate `.zip`, or a Git URL.
    source: String,
    #[arg(long)]
    title: Option<String>,
    /// Owning team, by id or name. Repeatable.
    #[arg(long = "team", required = true)]
    teams: Vec<String>,
    /// Workflow class id or display name; detected when omitted.
    #[arg(long)]
    class: Option<String>,
    /// Main workflow file within a directory or repository.
    #[arg(long)]
    main: Option<PathBuf>,
    /// Branch, tag or commit of a Git source.
    #[arg(long = "ref")]
    git_ref: Option<String>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    q: Option<String>,
    /// `name=value` filter, e.g. `class=nextflow`. Repeatable.
    #[arg(long = "facet", value_parser = parse_facet)]
    facets: Vec<(Facet, String)>,
    #[arg(long)]
    sort: Option<SortKey>,
    #[arg(long)]
    order: Option<SortOrder>,
    #[arg(long, default_value_t = 1)]
    page: usize,
    #[arg(long, default_value_t = 20)]
    page_size: usize,
}

fn parse_facet(raw: &str) -> Result<(Facet, String), String> {
    let (name, value) = raw.split_once('=').ok_or("expected name=value")?;
    let facet = name.parse::<Facet>().map_err(|e| e.to_string())?;
    Ok((facet, value.to_string()))
}

#[derive(Subcommand)]
enum Admin {
    /// Create an account. The first account administers the registry.
    CreateUser {
        username: String,
        #[arg(long)]
        password: Option<String>,
        #[arg(long)]
        orcid: Option<String>,
    },
    CreateSpace {
        name: String,
        #[arg(long, default_value = "")]
        description: String,
    },
    /// Create a team; the acting user becomes its administrator.
    CreateTeam {
        name: String,
        /// Space id or name; defaults to the default space.
        #[arg(long)]
        space: Option<String>,
    },
    AddMember {
        team: String,
        username: String,
        #[arg(long)]
        admin: bool,
    },
    /// Issue a bearer token for a user.
    Token { username: String },
}

struct Ctx {
    reg: Registry,
    actor: Option<UserId>,
    json: bool,
}

impl Ctx {
    fn emit(&self, value: serde_json::Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{value:#}");
        } else {
            let out = text();
            if !out.is_empty() {
                println!("{}", out.trim_end());
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RegistryConfig, CliError> {
    let mut config = RegistryConfig::resolve(cli.config.as_deref())?;
    if let Some(store) = &cli.store {
        config.store_dir = Some(store.clone());
    }
    if config.store_dir.is_none() {
        config.store_dir = Some(PathBuf::from(DEFAULT_STORE));
    }
    Ok(config)
}

fn user_named(reg: &Registry, name: &str) -> Result<UserId, CliError> {
    reg.user_by_name(name)
        .map(|u| u.id)
        .ok_or_else(|| CliError::Missing(format!("user {name}")))
}

fn team_named(reg: &Registry, raw: &str) -> Result<TeamId, CliError> {
    if let Ok(id) = raw.parse::<TeamId>() {
        return Ok(reg.team(id)?.id);
    }
    reg.team_by_name(raw)
        .map(|t| t.id)
        .ok_or_else(|| CliError::Missing(format!("team {raw}")))
}

fn space_named(reg: &Registry, raw: &str) -> Result<SpaceId, CliError> {
    if let Ok(id) = raw.parse::<SpaceId>() {
        return Ok(reg.space(id)?.id);
    }
    reg.spaces()
        .into_iter()
        .find(|s| s.name == raw)
        .map(|s| s.id)
        .ok_or_else(|| CliError::Missing(format!("space {raw}")))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn tree_from_dir(root: &Path) -> Result<FileTree, CliError> {
    let mut tree = FileTree::new();
    let walker = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(|e| CliError::Read {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
            tree.insert(
                rel.to_string_lossy().replace('\\', "/"),
                read(entry.path())?,
            );
        }
    }
    Ok(tree)
}

fn looks_remote(s: &str) -> bool {
    s.contains("://") || s.starts_with("git@") || s.ends_with(".git")
}

fn main_path(main: &Option<PathBuf>) -> Option<String> {
    main.as_ref()
        .map(|m| m.to_string_lossy().replace('\\', "/"))
}

/// A directory with a `.git` inside is imported as a repository; other
/// directories and single files are uploads.
fn registration_source(args: &RegisterArgs) -> Result<RegistrationSource, CliError> {
    let path = Path::new(&args.source);
    if path.is_dir() {
        if path.join(".git").exists() {
            return Ok(RegistrationSource::GitImport {
                remote: args.source.clone(),
                git_ref: args.git_ref.clone(),
                main_path: main_path(&args.main),
            });
        }
        return Ok(RegistrationSource::Upload {
            files: tree_from_dir(path)?,
            main_path: main_path(&args.main),
        });
    }
    if path.is_file() {
        let bytes = read(path)?;
        if args.source.to_lowercase().ends_with(".zip") {
            return Ok(RegistrationSource::CrateImport { archive: bytes });
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::Usage(format!("{} has no file name", args.source)))?;
        return Ok(RegistrationSource::upload(
            FileTree::new().with(name.as_str(), bytes),
            name,
        ));
    }
    if looks_remote(&args.source) {
        return Ok(RegistrationSource::GitImport {
            remote: args.source.clone(),
            git_ref: args.git_ref.clone(),
            main_path: main_path(&args.main),
        });
    }
    Err(CliError::Missing(args.source.clone()))
}

fn register(ctx: &Ctx, args: &RegisterArgs) -> Result<(), CliError> {
    let teams = args
        .teams
        .iter()
        .map(|t| team_named(&ctx.reg, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut patch = MetadataPatch::default().teams(teams);
    patch.title = args.title.clone();
    let mut req = RegistrationRequest::new(registration_source(args)?, patch);
    req.class = args.class.as_deref().map(|c| {
        ctx.reg
            .classes()
            .find_by_name(c)
            .map(|k| k.id.clone())
            .unwrap_or_else(|| ClassId::new(c))
    });
    let done = ctx.reg.register_workflow(ctx.actor, req)?;
    ctx.emit(json!(done), || {
        let e = &done.entry;
        let mut out = format!("registered {} {} ({})\n", e.id, e.title, e.workflow_class);
        for w in &done.report.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for n in &done.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    });
    Ok(())
}

fn search(ctx: &Ctx, args: &SearchArgs) -> Result<(), CliError> {
    let mut q = SearchQuery {
        text: args.q.clone().filter(|t| !t.trim().is_empty()),
        page: args.page,
        page_size: args.page_size,
        ..SearchQuery::default()
    };
    for (facet, value) in &args.facets {
        q = q.filter(*facet, value.clone());
    }
    if let Some(sort) = args.sort {
        q.sort = sort;
    }
    if let Some(order) = args.order {
        q.order = order;
    }
    let res = ctx.reg.search(ctx.actor, &q)?;
    ctx.emit(json!(res), || {
        res.hits
            .iter()
            .map(|h| {
                format!(
                    "{}\t{}\t{}\tv{}\n",
                    h.id, h.title, h.workflow_class, h.latest_version
                )
            })
            .collect()
    });
    Ok(())
}

fn admin(ctx: &Ctx, cmd: &Admin) -> Result<(), CliError> {
    let reg = &ctx.reg;
    match cmd {
        Admin::CreateUser {
            username,
            password,
            orcid,
        } => {
            let mut new = NewUser::named(username);
            new.password = password.clone();
            new.orcid = orcid.clone();
            let u = reg.create_user(new)?;
            ctx.emit(json!(u), || format!("user {} {}", u.id, u.username));
        }
        Admin::CreateSpace { name, description } => {
            let s = reg.create_space(ctx.actor, name, description)?;
            ctx.emit(json!(s), || format!("space {} {}", s.id, s.name));
        }
        Admin::CreateTeam { name, space } => {
            let space = match space {
                Some(s) => space_named(reg, s)?,
                None => reg.default_space().id,
            };
            let t = reg.create_team(ctx.actor, NewTeam::in_space(name.as_str(), space))?;
            ctx.emit(json!(t), || format!("team {} {}", t.id, t.name));
        }
        Admin::AddMember {
            team,
            username,
            admin,
        } => {
            let team = team_named(reg, team)?;
            let user = user_named(reg, username)?;
            let role = if *admin {
                TeamRole::Admin
            } else {
                TeamRole::Member
            };
            let t = reg.add_member(ctx.actor, team, user, role)?;
            ctx.emit(json!(t), || {
                format!("{username} joined team {} {}", t.id, t.name)
            });
        }
        Admin::Token { username } => {
            let token = reg.issue_token(user_named(reg, username)?)?;
            ctx.emit(json!({"token": token, "token_type": "Bearer"}), || {
                token.clone()
            });
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli)?;

    if let Command::ValidateCrate { archive } = &cli.command {
        let report = validate_crate(&read(archive)?);
        let level = serde_json::to_value(report.level).unwrap_or_default();
        let level = level.as_str().unwrap_or("invalid");
        if cli.json {
            println!("{:#}", json!(report));
        } else {
            println!("{level}");
            for f in &report.findings {
                println!("- {}", f.message);
            }
        }
        return match report.level {
            ConformanceLevel::Invalid => Err(CliError::InvalidCrate),
            _ => Ok(()),
        };
    }

    let reg = Registry::open(config)?;
    if let Command::Serve { port, host } = cli.command {
        let rt = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
        return rt
            .block_on(flowhub_server::serve(
                Arc::new(reg),
                SocketAddr::new(host, port),
            ))
            .map_err(CliError::Serve);
    }

    let actor = match (&cli.token, &cli.user) {
        (Some(token), _) => Some(reg.user_for_token(token)?),
        (None, Some(name)) => Some(user_named(&reg, name)?),
        (None, None) => None,
    };
    let ctx = Ctx {
        reg,
        actor,
        json: cli.json,
    };
    match &cli.command {
        Command::Register(args) => register(&ctx, args),
        Command::Sync { entry } => {
            let added = ctx.reg.sync_git(ctx.actor, *entry)?;
            ctx.emit(json!(added), || {
                if added.is_empty() {
                    return "no new releases".into();
                }
                added
                    .iter()
                    .map(|v| format!("version {} {}\n", v.version, v.revision_comment))
                    .collect()
            });
            Ok(())
        }
        Command::ExportCrate {
            entry,
            version,
            output,
        } => {
            let built = ctx.reg.entry_crate(ctx.actor, *entry, *version)?;
            std::fs::write(output, &built.archive).map_err(|source| CliError::Write {
                path: output.clone(),
                source,
            })?;
            let n = built.archive.len();
            ctx.emit(json!({"path": output, "bytes": n}), || {
                format!("wrote {} ({n} bytes)", output.display())
            });
            Ok(())
        }
        Command::Search(args) => search(&ctx, args),
        Command::MintDoi { entry, version } => {
            let rec = ctx.reg.mint_doi(ctx.actor, *entry, *version)?;
            ctx.emit(json!(rec), || rec.doi.clone());
            Ok(())
        }
        Command::Admin(cmd) => admin(&ctx, cmd),
        Command::Serve { .. } | Command::ValidateCrate { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            if let CliError::Registry(RegistryError::Validation(report)) = &e {
                for err in &report.errors {
                    eprintln!("  {err}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
