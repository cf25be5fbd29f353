//! Command-line front end: build networks, run transfer protocols, sweep
//! resonances, time singlet links, and cross-check dynamics against the
//! full-space oracle. Exit codes: 0 ok, 2 usage/config error, 3 model error.

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use spintree::{
    analytic_fidelity, analytic_infidelity, apply_phase_flip, attach_sender_aux, bt2_protocol,
    build_binary_tree, build_concatenated, build_modified_bt2, concatenated_protocol, find_links,
    link_transfer_time, phi_mod_2pi, resonance_params, sector_hamiltonian, Error, ExcitationState,
    FullSpaceOracle, NetworkSpec, NodeId, ProtocolSetup, ProtocolStep, TransferReport, TreeWiring,
};

#[derive(Parser)]
#[command(name = "spintree", version, about = "State transfer on XY spin-tree networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a network description as JSON
    Build(BuildArgs),
    /// Run a transfer protocol and report the result as JSON
    Simulate(SimulateArgs),
    /// Per-n resonance table (analytic and simulated fidelity) as CSV
    Sweep(SweepArgs),
    /// Optimal singlet-link hop time on a concatenated network
    Linktime(LinktimeArgs),
    /// Cross-check sector dynamics against the full-space oracle
    OracleCheck(OracleArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("shape").required(true).args(["tree", "modified_bt2", "concat"])))]
struct BuildArgs {
    /// Binary tree of the given order
    #[arg(long)]
    tree: Option<u32>,
    /// Add the sender auxiliary spin next to (0,0)
    #[arg(long, requires = "tree")]
    with_aux: bool,
    /// Second-order tree with sender and receiver auxiliaries
    #[arg(long)]
    modified_bt2: bool,
    /// Concatenated trees; wiring as JSON, e.g. [[[1,1]],[]]
    #[arg(long, value_name = "LAYOUT")]
    concat: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// Uniform on-site field; defaults to the resonance value (7+√5)·√2·j0/2
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run config JSON file ({"network": ..., "protocol": ...})
    #[arg(long, conflicts_with_all = ["builder", "n", "leaf", "j0"])]
    config: Option<PathBuf>,
    /// Protocol builder: "bt2"
    #[arg(long)]
    builder: Option<String>,
    /// Resonance index
    #[arg(long)]
    n: Option<u64>,
    /// Receiving leaf b in 1..=4
    #[arg(long)]
    leaf: Option<u32>,
    #[arg(long)]
    j0: Option<f64>,
    /// Re-run every evolution through the full 2^N oracle and report the
    /// deviation from the sector propagator
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    max_n: u64,
    /// Largest n simulated numerically; analytic columns continue beyond
    #[arg(long, default_value_t = 200)]
    numeric_cap: u64,
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// Receiving leaf used for the numeric protocol runs
    #[arg(long, default_value_t = 1)]
    leaf: u32,
}

#[derive(Args)]
struct LinktimeArgs {
    /// Concatenated-tree wiring as JSON; default is two trees joined at port 1
    #[arg(long, default_value = "[[[1,1]],[]]")]
    layout: String,
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// On-site field; defaults to the resonance value
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pairs: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Componentwise agreement bound (exit 3 when exceeded)
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match &cli.cmd {
        Cmd::Build(args) => cmd_build(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Linktime(args) => cmd_linktime(args),
        Cmd::OracleCheck(args) => cmd_oracle_check(args),
    };
    match result {
        Ok(output) => match emit(&cli.out, &output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

/// Usage and configuration mistakes exit 2; model-level failures exit 3.
fn exit_class(e: &CliError) -> u8 {
    match e {
        CliError::Config(_) => 2,
        CliError::Model(_) => 3,
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Model(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Model(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SectorLeak(_) | Error::NoPerfectTransfer(_) => CliError::Model(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            let newline = if text.ends_with('\n') { "" } else { "\n" };
            match write!(stdout, "{text}{newline}") {
                // downstream consumers may close the pipe early; that is
                // their business, not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

fn resonance_field(j0: f64) -> Result<f64, CliError> {
    Ok(resonance_params(0, SQRT_2 * j0)?.0)
}

fn parse_layout(text: &str) -> Result<Vec<TreeWiring>, CliError> {
    let raw: Vec<Vec<(u32, usize)>> = serde_json::from_str(text)
        .map_err(|e| config_err(format!("bad layout JSON: {e}")))?;
    Ok(raw.into_iter().map(|ports| TreeWiring { ports }).collect())
}

fn network_json(net: &NetworkSpec) -> Result<String, CliError> {
    serde_json::to_string_pretty(net).map_err(|e| config_err(e.to_string()))
}

fn cmd_build(args: &BuildArgs) -> Result<String, CliError> {
    let omega = match args.omega {
        Some(w) => w,
        None => resonance_field(args.j0)?,
    };
    let net = if let Some(order) = args.tree {
        let tree = build_binary_tree(order, args.j0, omega)?;
        if args.with_aux {
            attach_sender_aux(&tree, args.j0, omega)?
        } else {
            tree
        }
    } else if args.modified_bt2 {
        build_modified_bt2(args.j0, omega)?
    } else {
        let layout = parse_layout(args.concat.as_deref().expect("clap group"))?;
        if args.omega.is_some() {
            return Err(config_err("--concat networks are pinned to the resonance field"));
        }
        build_concatenated(&layout, args.j0)?
    };
    network_json(&net)
}

/// Builder directive or inline object, distinguished by a "builder" key.
fn resolve_setup(config: &serde_json::Value, oracle: bool) -> Result<(ProtocolSetup, SimOutcome), CliError> {
    let protocol = config
        .get("protocol")
        .ok_or_else(|| config_err("config needs a \"protocol\" section"))?;
    let network = config.get("network");
    let get_u64 = |v: &serde_json::Value, key: &str| v.get(key).and_then(|x| x.as_u64());

    let setup = match protocol.get("builder").and_then(|b| b.as_str()) {
        Some("bt2") => {
            // n / leaf / j0 may live in either section (the network builder
            // directive carries them in file-based configs)
            let from_either = |key: &str| {
                protocol.get(key).cloned().or_else(|| network.and_then(|n| n.get(key).cloned()))
            };
            let n = from_either("n")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| config_err("bt2 builder needs \"n\""))?;
            let leaf = from_either("leaf").and_then(|v| v.as_u64()).unwrap_or(1) as u32;
            let j0 = from_either("j0").and_then(|v| v.as_f64()).unwrap_or(1.0);
            bt2_protocol(leaf, n, j0)?
        }
        Some("concat") => {
            let net = resolve_network(network.ok_or_else(|| {
                config_err("concat protocol builder needs a \"network\" section")
            })?)?;
            let route: Vec<(usize, u32)> = protocol
                .get("route")
                .cloned()
                .map(serde_json::from_value)
                .transpose()
                .map_err(|e| config_err(format!("bad route: {e}")))?
                .ok_or_else(|| config_err("concat builder needs \"route\""))?;
            let n = get_u64(protocol, "n").ok_or_else(|| config_err("concat builder needs \"n\""))?;
            concatenated_protocol(&net, &route, n)?
        }
        Some(other) => return Err(config_err(format!("unknown protocol builder {other:?}"))),
        None => {
            let net = resolve_network(
                network.ok_or_else(|| config_err("inline protocol needs a \"network\" section"))?,
            )?;
            let steps: Vec<ProtocolStep> = protocol
                .get("steps")
                .cloned()
                .map(serde_json::from_value)
                .transpose()
                .map_err(|e| config_err(format!("bad steps: {e}")))?
                .ok_or_else(|| config_err("inline protocol needs \"steps\""))?;
            let initial = ExcitationState::from_json(
                &net,
                protocol.get("initial").ok_or_else(|| config_err("inline protocol needs \"initial\""))?,
            )?;
            let target = ExcitationState::from_json(
                &net,
                protocol.get("target").ok_or_else(|| config_err("inline protocol needs \"target\""))?,
            )?;
            ProtocolSetup { network: net, initial, steps, target }
        }
    };
    let outcome = run_setup(&setup, oracle)?;
    Ok((setup, outcome))
}

fn resolve_network(section: &serde_json::Value) -> Result<NetworkSpec, CliError> {
    match section.get("builder").and_then(|b| b.as_str()) {
        None => Ok(serde_json::from_value(section.clone())
            .map_err(|e| config_err(format!("bad network JSON: {e}")))?),
        Some(name) => {
            let j0 = section.get("j0").and_then(|v| v.as_f64()).unwrap_or(1.0);
            let omega = match section.get("omega").and_then(|v| v.as_f64()) {
                Some(w) => w,
                None => resonance_field(j0)?,
            };
            match name {
                "bt2" => Ok(build_binary_tree(2, j0, omega)?),
                "bt2+aux" => Ok(spintree::build_bt2_with_aux(j0, omega)?),
                "modified-bt2" => Ok(build_modified_bt2(j0, omega)?),
                "concat" => {
                    let layout: Vec<Vec<(u32, usize)>> = section
                        .get("layout")
                        .cloned()
                        .map(serde_json::from_value)
                        .transpose()
                        .map_err(|e| config_err(format!("bad layout: {e}")))?
                        .ok_or_else(|| config_err("concat network builder needs \"layout\""))?;
                    let wiring: Vec<TreeWiring> =
                        layout.into_iter().map(|ports| TreeWiring { ports }).collect();
                    Ok(build_concatenated(&wiring, j0)?)
                }
                other => Err(config_err(format!("unknown network builder {other:?}"))),
            }
        }
    }
}

struct SimOutcome {
    report: TransferReport,
    oracle: Option<OracleOutcome>,
}

struct OracleOutcome {
    max_deviation: f64,
    max_leak: f64,
}

fn run_setup(setup: &ProtocolSetup, oracle: bool) -> Result<SimOutcome, CliError> {
    let report = setup.run()?;
    let oracle = if oracle {
        let full = FullSpaceOracle::new(&setup.network)?;
        let mut state = setup.initial.clone();
        let mut max_leak = 0.0f64;
        for step in &setup.steps {
            state = match step {
                ProtocolStep::Evolve(t) => {
                    let r = full.evolve(&state, *t)?;
                    max_leak = max_leak.max(r.leaked_norm);
                    r.state
                }
                ProtocolStep::PhaseFlip(targets) => {
                    apply_phase_flip(&setup.network, &state, targets)?
                }
            };
        }
        let mut max_deviation = (state.vacuum - report.final_state.vacuum).norm();
        for i in 0..state.dim() {
            max_deviation = max_deviation.max((state.amps[i] - report.final_state.amps[i]).norm());
        }
        Some(OracleOutcome { max_deviation, max_leak })
    } else {
        None
    };
    Ok(SimOutcome { report, oracle })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let config: serde_json::Value = match (&args.config, &args.builder) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| config_err(format!("bad config JSON: {e}")))?
        }
        (None, Some(builder)) => json!({
            "protocol": {
                "builder": builder,
                "n": args.n.ok_or_else(|| config_err("--builder needs --n"))?,
                "leaf": args.leaf.unwrap_or(1),
                "j0": args.j0.unwrap_or(1.0),
            }
        }),
        _ => return Err(config_err("pass exactly one of --config or --builder")),
    };
    let (setup, outcome) = resolve_setup(&config, args.oracle)?;
    let report = &outcome.report;
    let mut body = json!({
        "fidelity": report.fidelity,
        "amplitude": [report.amplitude.re, report.amplitude.im],
        "per_step_norms": report.per_step_norms,
        "elapsed_model_time": report.elapsed_model_time,
        "final_state": report.final_state.to_json(&setup.network)?,
    });
    if let Some(oracle) = &outcome.oracle {
        body["oracle"] = json!({
            "max_deviation": oracle.max_deviation,
            "max_leak": oracle.max_leak,
        });
    }
    serde_json::to_string_pretty(&body).map_err(|e| config_err(e.to_string()))
}

/// 17 significant digits, enough that downstream fits are not
/// quantization-limited.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    if !(1..=4).contains(&args.leaf) {
        return Err(config_err("--leaf must be in 1..=4"));
    }
    // the resonance field is n-independent, so one network and one
    // decomposition serve every row
    let setup0 = bt2_protocol(args.leaf, 0, args.j0)?;
    let h = sector_hamiltonian(&setup0.network);
    let j = SQRT_2 * args.j0;

    let mut out = String::from(
        "n,tau_n,phi_mod_2pi,F_analytic,F_numeric,infidelity,running_min_infidelity\n",
    );
    let mut running_min = f64::INFINITY;
    for n in 0..=args.max_n {
        let (_, tau) = resonance_params(n, j)?;
        let infidelity = analytic_infidelity(n);
        running_min = running_min.min(infidelity);
        let numeric = if n <= args.numeric_cap {
            let steps = [
                ProtocolStep::Evolve(tau),
                ProtocolStep::PhaseFlip(spintree::companion_leaves(args.leaf)),
                ProtocolStep::Evolve(2.0 * tau),
            ];
            let report = spintree::protocol::run_protocol_with(
                &h,
                &setup0.network,
                &setup0.initial,
                &steps,
                &setup0.target,
            )?;
            fmt(report.fidelity)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            n,
            fmt(tau),
            fmt(phi_mod_2pi(n)),
            fmt(analytic_fidelity(n)),
            numeric,
            fmt(infidelity),
            fmt(running_min),
        ));
    }
    Ok(out)
}

fn cmd_linktime(args: &LinktimeArgs) -> Result<String, CliError> {
    let layout = parse_layout(&args.layout)?;
    let net = build_concatenated(&layout, args.j0)?;
    let links = find_links(&net);
    let link = links.first().ok_or_else(|| config_err("network has no singlet link"))?;
    let singlet = |site: NodeId, aux: NodeId| {
        ExcitationState::superpose(
            &net,
            &[(site, Complex64::new(1.0, 0.0)), (aux, Complex64::new(-1.0, 0.0))],
        )
    };
    let s_out = singlet(
        NodeId::tree(2, link.port_b).in_tree(link.from_tree),
        NodeId::tree_aux(2, link.port_b).in_tree(link.from_tree),
    )?;
    let s_in = singlet(
        NodeId::tree(0, 0).in_tree(link.to_tree),
        NodeId::tree_aux(0, 0).in_tree(link.to_tree),
    )?;
    let time = link_transfer_time(&net, &s_out, &s_in)?;
    let h = sector_hamiltonian(&net);
    let modulus = spintree::overlap(&s_in, &h.evolve(&s_out, time)?)?.norm();
    serde_json::to_string_pretty(&json!({
        "time": time,
        "amplitude_modulus": modulus,
    }))
    .map_err(|e| config_err(e.to_string()))
}

fn cmd_oracle_check(args: &OracleArgs) -> Result<String, CliError> {
    let omega = match args.omega {
        Some(w) => w,
        None => resonance_field(args.j0)?,
    };
    let net = spintree::build_bt2_with_aux(args.j0, omega)?;
    let h = sector_hamiltonian(&net);
    let full = FullSpaceOracle::new(&net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut max_deviation = 0.0f64;
    let mut max_leak = 0.0f64;
    for _ in 0..args.pairs {
        let mut amps = nalgebra::DVector::from_fn(net.len(), |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let vacuum = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let norm = (vacuum.norm_sqr() + amps.norm_squared()).sqrt();
        amps /= Complex64::new(norm, 0.0);
        let state = ExcitationState::new(vacuum / norm, amps)?;
        let t = rng.gen_range(-5.0..5.0);
        let fast = h.evolve(&state, t)?;
        let slow = full.evolve(&state, t)?;
        max_leak = max_leak.max(slow.leaked_norm);
        let mut d = (fast.vacuum - slow.state.vacuum).norm();
        for i in 0..fast.dim() {
            d = d.max((fast.amps[i] - slow.state.amps[i]).norm());
        }
        max_deviation = max_deviation.max(d);
    }
    let body = serde_json::to_string_pretty(&json!({
        "pairs": args.pairs,
        "max_deviation": max_deviation,
        "max_leak": max_leak,
        "tolerance": args.tolerance,
    }))
    .map_err(|e| config_err(e.to_string()))?;
    if max_deviation > args.tolerance {
        eprintln!("{body}");
        return Err(CliError::Model(format!(
            "oracle deviation {max_deviation} exceeds tolerance {}",
            args.tolerance
        )));
    }
    Ok(body)
}
