//! Command-line front end. Exit status is 0 on success, 1 for invalid input
//! or configuration and 2 when the computation itself fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dra_market::case_study;
use dra_market::config::{load_config_with_digests, sha256_hex, ProfileDigest};
use dra_market::cost_model::BidCurve;
use dra_market::game_engine::{play_game, GameConfig, Mechanism};
use dra_market::market_clearing::{apply_caps, clear_two_sellers, RegulatoryCaps};
use dra_market::profiles::{synthetic, PriceProfile, WaterDrawProfile};
use dra_market::report::{render_matrices, render_report, sig6, summary, write_outputs, Rendered, RunManifest};
use dra_market::wh_scheduler::{
    calibrate_tank, on_off_stats, schedule_price_sensitive, schedule_welfare, CalibrationTarget, TankGrid, TankModel,
};
use dra_market::{Error, Result};

#[derive(Parser)]
#[command(name = "dra-market", version, about = "Bayesian bidding game between demand-response aggregators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play the full game and write every artifact plus a summary.
    Run(GameArgs),
    /// Write only the conditional and expected payoff matrices.
    Matrices(GameArgs),
    /// Schedule water heaters for one day and write the schedule and statistics.
    Schedule(ScheduleArgs),
    /// Clear one market between two linear bids.
    Clear(ClearArgs),
    /// Export the bundled case-study config and profiles.
    CaseStudy {
        #[arg(long, default_value = "casestudy")]
        out: PathBuf,
    },
    /// Regenerate the synthetic price and water-draw profiles.
    Profiles {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Grid-search tank parameters reproducing the case-study on-slot counts.
    CalibrateTank(ProfileArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    NonCoop,
    Stackelberg,
}

#[derive(Args)]
struct GameArgs {
    /// Game config; the bundled case study when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's mechanism.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Price-sensitive water heater scheduling.
    #[arg(long, overrides_with = "no_dr")]
    dr: bool,
    #[arg(long, overrides_with = "dr")]
    no_dr: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's price cap.
    #[arg(long)]
    price_cap: Option<f64>,
    /// Accepted for interface stability; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Take profiles (and the tank) from this config.
    #[arg(long, conflicts_with_all = ["price", "water_draw"])]
    config: Option<PathBuf>,
    #[arg(long)]
    price: Option<PathBuf>,
    #[arg(long)]
    water_draw: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Welfare,
    Price,
}

#[derive(Args)]
struct ScheduleArgs {
    #[command(flatten)]
    profiles: ProfileArgs,
    #[arg(long, value_enum, default_value = "welfare")]
    mode: Mode,
    #[arg(long, default_value = "0.5")]
    threshold_fraction: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ClearArgs {
    #[arg(long)]
    lambda0_a: f64,
    #[arg(long)]
    slope_a: f64,
    #[arg(long)]
    lambda0_b: f64,
    #[arg(long)]
    slope_b: f64,
    /// Buyer demand, kW.
    #[arg(long)]
    demand: f64,
    #[arg(long)]
    price_cap: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => run_game(args, false),
        Command::Matrices(args) => run_game(args, true),
        Command::Schedule(args) => schedule(args),
        Command::Clear(args) => clear(args),
        Command::CaseStudy { out } => {
            let path = case_study::write_bundle(&out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Profiles { out } => {
            std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;
            for (name, text) in [
                ("price.csv", synthetic::price_profile().to_csv_string()),
                ("water_draw.csv", synthetic::water_draw_profile().to_csv_string()),
            ] {
                let path = out.join(name);
                std::fs::write(&path, text).map_err(|e| io(&path, e))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::CalibrateTank(args) => calibrate(args),
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn bundled_digests() -> Vec<ProfileDigest> {
    vec![
        ProfileDigest { name: "price".into(), path: "bundled/price.csv".into(), sha256: sha256_hex(case_study::PRICE_CSV.as_bytes()) },
        ProfileDigest {
            name: "water_draw".into(),
            path: "bundled/water_draw.csv".into(),
            sha256: sha256_hex(case_study::WATER_DRAW_CSV.as_bytes()),
        },
    ]
}

/// Loads the config named on the command line (or the bundle) along with
/// its profile digests and a display name.
fn game_config(config: &Option<PathBuf>) -> Result<(GameConfig, Vec<ProfileDigest>, String)> {
    match config {
        Some(path) => {
            let loaded = load_config_with_digests(path)?;
            Ok((loaded.config, loaded.digests, path.display().to_string()))
        }
        None => Ok((case_study::config()?, bundled_digests(), "bundled case study".into())),
    }
}

fn run_game(args: GameArgs, matrices_only: bool) -> Result<()> {
    let (mut config, digests, origin) = game_config(&args.config)?;
    if let Some(v) = args.variant {
        config.variant.mechanism = match v {
            VariantArg::NonCoop => Mechanism::NonCooperative,
            VariantArg::Stackelberg => Mechanism::Stackelberg,
        };
    }
    if args.dr {
        config.variant.dr = true;
    } else if args.no_dr {
        config.variant.dr = false;
    }
    if let Some(cap) = args.price_cap {
        config.caps.phi_max = Some(cap);
    }
    let _ = args.seed;
    config.validate()?;

    let report = play_game(&config)?;
    let cap = (config.variant.mechanism == Mechanism::Stackelberg).then_some(config.caps.phi_max).flatten();
    let mut files: Rendered = if matrices_only { render_matrices(&report) } else { render_report(&report) };
    let text = summary(&report, cap);
    if let Some(entry) = files.iter_mut().find(|(name, _)| name == "summary.txt") {
        entry.1 = text.clone();
    }
    let command = if matrices_only { "matrices" } else { "run" };
    let manifest = RunManifest::new(command, &origin, &config.variant.name(), &args.out, digests);
    write_outputs(&args.out, &files, manifest)?;
    if !matrices_only {
        print!("{text}");
    }
    println!("wrote {} files to {}", files.len() + 1, args.out.display());
    Ok(())
}

fn load_profiles(args: &ProfileArgs) -> Result<(PriceProfile, WaterDrawProfile, TankModel, Vec<ProfileDigest>)> {
    if let Some(path) = &args.config {
        let loaded = load_config_with_digests(path)?;
        let c = loaded.config;
        return Ok((c.prices, c.draws, c.tank, loaded.digests));
    }
    let (prices, mut digests) = match &args.price {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
            let d = ProfileDigest { name: "price".into(), path: p.clone(), sha256: sha256_hex(text.as_bytes()) };
            (PriceProfile::from_csv_str(&text, &p.display().to_string())?, vec![d])
        }
        None => (case_study::config()?.prices, vec![bundled_digests().remove(0)]),
    };
    let draws = match &args.water_draw {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
            digests.push(ProfileDigest { name: "water_draw".into(), path: p.clone(), sha256: sha256_hex(text.as_bytes()) });
            WaterDrawProfile::from_csv_str(&text, &p.display().to_string())?
        }
        None => {
            digests.push(bundled_digests().remove(1));
            case_study::config()?.draws
        }
    };
    Ok((prices, draws, TankModel::case_study(), digests))
}

fn schedule(args: ScheduleArgs) -> Result<()> {
    if !(args.threshold_fraction > 0.0 && args.threshold_fraction < 1.0) {
        return Err(Error::Config {
            field: "threshold_fraction".into(),
            reason: format!("must lie in (0, 1), got {}", args.threshold_fraction),
        });
    }
    let (prices, draws, tank, digests) = load_profiles(&args.profiles)?;
    let (sched, mode) = match args.mode {
        Mode::Welfare => (schedule_welfare(&tank, &draws)?, "welfare"),
        Mode::Price => (schedule_price_sensitive(&tank, &draws, &prices)?, "price"),
    };
    let stats = on_off_stats(&sched, &prices, args.threshold_fraction)?;
    let files = vec![
        ("schedule.csv".to_string(), sched.to_csv_string()),
        ("stats.csv".to_string(), stats.to_csv_string()),
    ];
    let manifest = RunManifest::new("schedule", mode, mode, &args.out, digests);
    write_outputs(&args.out, &files, manifest)?;
    println!(
        "{mode} schedule: {} on-slots, P(on | expensive) = {}, P(on | cheap) = {}",
        sched.on_count(),
        sig6(stats.p_on_given_exp),
        sig6(stats.p_on_given_cheap)
    );
    Ok(())
}

fn clear(args: ClearArgs) -> Result<()> {
    let bid = |lambda0, slope| BidCurve { lambda0, slope, p0: 0.0, p_max: f64::INFINITY };
    let outcome = clear_two_sellers(&bid(args.lambda0_a, args.slope_a), &bid(args.lambda0_b, args.slope_b), args.demand)?;
    let caps = RegulatoryCaps { phi_max: args.price_cap, ..Default::default() };
    caps.validate()?;
    let o = apply_caps(&outcome, &caps);
    println!("p_a,p_b,phi_t,price_capped");
    println!("{},{},{},{}", sig6(o.p_a), sig6(o.p_b), sig6(o.phi_t), o.capped.price);
    Ok(())
}

fn calibrate(args: ProfileArgs) -> Result<()> {
    let (prices, draws, _, _) = load_profiles(&args)?;
    let hits = calibrate_tank(&TankGrid::default(), &draws, &prices, 0.5, CalibrationTarget::CASE_STUDY);
    println!("heat_rate,loss_rate,draw_drop,comfort_setpoint");
    for t in &hits {
        println!("{},{},{},{}", t.heat_rate, t.loss_rate, t.draw_drop, t.comfort_setpoint);
    }
    if hits.is_empty() {
        eprintln!("no grid point reproduces the target on-slot counts");
    }
    Ok(())
}
