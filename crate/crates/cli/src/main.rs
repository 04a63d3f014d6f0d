//! `subtower`: batch front end for the provers, translations, encoders,
//! machine search and cross-checks.
//!
//! Exit codes: 0 proved (or tree found, or cross-check passed), 1 refuted,
//! 2 unknown, 3 disagreement between routes, 4 error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use subtower::abvass::{check_tree, search_deduction, Abvass, Reach, ReachBudget};
use subtower::calculi::{check_proof, ProofTree, System, SystemName};
use subtower::crosscheck::{self, Params, Suite};
use subtower::encoders::{encode_bvass_to_sequent, encode_formula, Variant};
use subtower::formulas::{parse_formula, parse_formula_list, parse_sequent, Connective, Formula, Fragment, Polarity, Sequent};
use subtower::prover::{deduce, deduce_direct, deduction_target, prove_bck, prove_with_stats, Budget, Verdict};
use subtower::translate::{
    erase_paragraph, erase_sequent, fresh_for, neg_translate, translate_sequent_bot, translate_sequent_fresh,
    underline, underline_sequent,
};

const PROVED: u8 = 0;
const REFUTED: u8 = 1;
const UNKNOWN: u8 = 2;
const DISAGREE: u8 = 3;
const ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "subtower", version, about = "Decide and cross-check provability in contraction-free substructural logics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Depth bound for proof and machine search.
    #[arg(long, global = true)]
    budget_depth: Option<u32>,
    /// Node budget for proof and machine search.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,
    /// Counter cap for machine search.
    #[arg(long, global = true)]
    counter_cap: Option<u32>,
    /// Largest number of copies tried in prenex expansion.
    #[arg(long, global = true)]
    nmax: Option<u32>,
    /// Budget defaults as `key=value` pairs (depth, nodes, contractions, nmax, cap).
    #[arg(long, global = true, env = "SUBTOWER_DEFAULT_BUDGET", hide_env_values = true)]
    default_budget: Option<String>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the report (or exported files) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a proof of a sequent.
    Prove {
        #[arg(long)]
        system: String,
        sequent: String,
    },
    /// Deducibility from non-logical axioms.
    Deduce {
        #[arg(long)]
        system: String,
        /// File with one axiom formula per line.
        #[arg(long)]
        axioms: Option<PathBuf>,
        /// An axiom formula; may be repeated.
        #[arg(long = "axiom")]
        axiom: Vec<String>,
        #[arg(long, value_enum, default_value_t = Route::Reduction)]
        route: Route,
        sequent: String,
    },
    /// Apply a translation to a formula or sequent.
    Translate {
        #[arg(value_enum)]
        mode: Mode,
        input: String,
    },
    /// Build an encoding.
    Encode {
        #[arg(value_enum)]
        kind: Kind,
        /// A formula for `iezw` and `ilzwprime`, a machine file for `bvass2llw`.
        input: String,
        /// Root configuration for `bvass2llw`, e.g. `q:[1,0]`.
        #[arg(long)]
        root: Option<String>,
    },
    /// Search for a leaf-covering deduction tree.
    Reach {
        machine: PathBuf,
        /// Root configuration, e.g. `q:[1,0]`.
        root: String,
        /// Comma-separated leaf states; defaults to those declared in the file.
        #[arg(long)]
        leaves: Option<String>,
        #[arg(long)]
        lossy: bool,
    },
    /// Run an agreement harness over a generated corpus.
    Crosscheck {
        suite: String,
        #[arg(long, default_value_t = 6)]
        size: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Route {
    Direct,
    Reduction,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Negx,
    Negbot,
    Underline,
    Erase,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Iezw,
    Ilzwprime,
    Bvass2llw,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

struct Budgets {
    proof: Budget,
    reach: ReachBudget,
}

fn budgets(c: &Common) -> Res<Budgets> {
    let mut proof = Budget::default();
    let mut reach = ReachBudget::default();
    if let Some(text) = &c.default_budget {
        let mut rest = Vec::new();
        for item in text.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|s| !s.is_empty()) {
            match item.split_once('=') {
                Some(("cap" | "counter_cap", v)) => {
                    reach.counter_cap = v.trim().parse().map_err(|_| Failure(format!("invalid value in `{item}`")))?
                }
                _ => rest.push(item),
            }
        }
        proof = proof.with_overrides(&rest.join(","))?;
        reach.max_depth = proof.max_depth.max(reach.max_depth);
    }
    if let Some(d) = c.budget_depth {
        proof.max_depth = d;
        reach.max_depth = d;
    }
    if let Some(n) = c.budget_nodes {
        proof.max_nodes = n;
        reach.max_nodes = n;
    }
    if let Some(k) = c.counter_cap {
        reach.counter_cap = k;
    }
    if let Some(n) = c.nmax {
        proof.max_prenex_copies = n;
    }
    proof.validate()?;
    reach.validate()?;
    Ok(Budgets { proof, reach })
}

fn budget_json(b: &Budgets) -> Value {
    json!({
        "depth": b.proof.max_depth,
        "nodes": b.proof.max_nodes,
        "contractions": b.proof.max_bang_contractions,
        "nmax": b.proof.max_prenex_copies,
        "counter_cap": b.reach.counter_cap,
        "machine_depth": b.reach.max_depth,
        "machine_nodes": b.reach.max_nodes,
    })
}

/// Report text in both forms.
struct Output {
    json: Value,
    text: String,
    code: u8,
}

fn emit(c: &Common, o: &Output) -> Res<()> {
    let body = if c.json { format!("{}\n", serde_json::to_string_pretty(&o.json)?) } else { o.text.clone() };
    match &c.out {
        Some(p) => fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Proved(_) => PROVED,
        Verdict::Refuted => REFUTED,
        Verdict::Unknown => UNKNOWN,
    }
}

fn render_proof(t: &ProofTree, depth: usize, out: &mut String) {
    out.push_str(&format!("{}{}  [{}]\n", "  ".repeat(depth), t.sequent, t.rule.name()));
    for c in &t.children {
        render_proof(c, depth + 1, out);
    }
}

fn recheck(sys: &System, v: &Verdict) -> Res<()> {
    if let Verdict::Proved(t) = v {
        check_proof(sys, t, false).map_err(|e| Failure(format!("witness rejected by the checker: {e}")))?;
    }
    Ok(())
}

fn verdict_report(echo: &str, v: &Verdict, stats: Value, b: &Budgets, started: Instant) -> Output {
    let mut text = format!("{}\n", v.label());
    if let Verdict::Proved(t) = v {
        render_proof(t, 0, &mut text);
    }
    let mut stats = stats;
    stats["wall_ms"] = json!(started.elapsed().as_millis() as u64);
    Output {
        json: json!({
            "command": echo,
            "verdict": v.label(),
            "witness": v.proof().map(ProofTree::to_json),
            "statistics": stats,
            "budget": budget_json(b),
        }),
        text,
        code: verdict_code(v),
    }
}

fn is_implicational(s: &Sequent) -> bool {
    !s.is_classical() && s.connectives_used().is_subset_of(Fragment::of(&[Connective::Lolli]))
}

fn cmd_prove(c: &Common, echo: &str, system: &str, sequent: &str) -> Res<Output> {
    let b = budgets(c)?;
    let sys = System::parse(system)?;
    let s = parse_sequent(sequent, sys.polarity())?;
    sys.check_sequent(&s)?;
    let started = Instant::now();
    let (v, stats) = if sys.name == SystemName::Bck && sys.axioms.is_empty() && is_implicational(&s) {
        (prove_bck(&s)?, json!({"nodes": null, "depth": null}))
    } else {
        let (v, st) = prove_with_stats(&sys, &s, &b.proof)?;
        (v, json!({"nodes": st.nodes, "depth": st.depth}))
    };
    recheck(&sys, &v)?;
    Ok(verdict_report(echo, &v, stats, &b, started))
}

fn read_axioms(file: Option<&PathBuf>, inline: &[String], pol: Polarity) -> Res<Vec<Formula>> {
    let mut phi = Vec::new();
    if let Some(p) = file {
        let text = fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        for line in text.lines() {
            let l = line.split('#').next().unwrap_or("").trim();
            if !l.is_empty() {
                phi.push(parse_formula(l, pol)?);
            }
        }
    }
    for a in inline {
        phi.extend(parse_formula_list(a, pol)?);
    }
    Ok(phi)
}

fn cmd_deduce(c: &Common, echo: &str, system: &str, axioms: Option<&PathBuf>, inline: &[String], route: Route, sequent: &str) -> Res<Output> {
    let b = budgets(c)?;
    let base = System::parse(system)?;
    let pol = base.polarity();
    let phi = read_axioms(axioms, inline, pol)?;
    let s = parse_sequent(sequent, pol)?;
    let started = Instant::now();
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    if route != Route::Reduction {
        let v = deduce_direct(&base, &phi, &s, &b.proof)?;
        recheck(&base.clone().with_axioms(&phi)?, &v)?;
        results.push(("direct", v));
    }
    if route != Route::Direct {
        let v = deduce(&base, &phi, &s, &b.proof)?;
        let (target, _) = deduction_target(&base, &phi, &s)?;
        recheck(&target, &v)?;
        results.push(("reduction", v));
    }
    let decided: Vec<bool> = results.iter().filter_map(|(_, v)| v.decided()).collect();
    if decided.windows(2).any(|w| w[0] != w[1]) {
        let dump = json!({
            "command": echo,
            "axioms": phi.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "sequent": s.to_string(),
            "routes": results.iter().map(|(r, v)| json!({"route": r, "verdict": v.label()})).collect::<Vec<_>>(),
            "budget": budget_json(&b),
        });
        eprintln!("route disagreement:\n{}", serde_json::to_string_pretty(&dump)?);
        return Ok(Output { json: dump, text: "Disagreement\n".into(), code: DISAGREE });
    }
    // report the most informative verdict
    let pick = results.iter().position(|(_, v)| v.is_proved()).or_else(|| results.iter().position(|(_, v)| v.is_conclusive())).unwrap_or(0);
    let (name, v) = &results[pick];
    let mut out = verdict_report(echo, v, json!({"route": name}), &b, started);
    out.json["routes"] = json!(results.iter().map(|(r, v)| json!({"route": r, "verdict": v.label()})).collect::<Vec<_>>());
    if results.len() > 1 {
        let routes: Vec<String> = results.iter().map(|(r, v)| format!("{r}: {}", v.label())).collect();
        out.text = format!("{}\n{}", routes.join(", "), out.text);
    }
    Ok(out)
}

fn cmd_translate(echo: &str, mode: Mode, input: &str) -> Res<Output> {
    let seq = input.contains("|-") || input.contains('⊢');
    let result = match (mode, seq) {
        (Mode::Negx, true) => translate_sequent_fresh(&parse_sequent(input, Polarity::Classical)?)?.to_string(),
        (Mode::Negx, false) => {
            let a = parse_formula(input, Polarity::Classical)?;
            neg_translate(&a, &fresh_for(&Sequent::classical(vec![a.clone()])))?.to_string()
        }
        (Mode::Negbot, true) => translate_sequent_bot(&parse_sequent(input, Polarity::Classical)?)?.to_string(),
        (Mode::Negbot, false) => neg_translate(&parse_formula(input, Polarity::Classical)?, &Formula::bot())?.to_string(),
        (Mode::Underline, true) => underline_sequent(&parse_sequent(input, Polarity::Intuitionistic)?)?.to_string(),
        (Mode::Underline, false) => underline(&parse_formula(input, Polarity::Intuitionistic)?)?.to_string(),
        (Mode::Erase, true) => erase_sequent(&parse_sequent(input, Polarity::Intuitionistic)?).to_string(),
        (Mode::Erase, false) => erase_paragraph(&parse_formula(input, Polarity::Intuitionistic)?).to_string(),
    };
    Ok(Output { json: json!({"command": echo, "result": result}), text: format!("{result}\n"), code: 0 })
}

fn cmd_encode(c: &Common, echo: &str, kind: Kind, input: &str, root: Option<&str>) -> Res<Output> {
    match kind {
        Kind::Iezw | Kind::Ilzwprime => {
            let variant = if matches!(kind, Kind::Iezw) { Variant::E } else { Variant::IPrime };
            let f = parse_formula(input, Polarity::Intuitionistic)?;
            let em = encode_formula(&f, variant)?;
            let start = em.sequent_to_config(&Sequent::intuitionistic(Vec::new(), Some(f.clone())))?;
            let (machine, states) = em.explicit(&[start.state]);
            let legend = em.legend(&states);
            let text = machine.to_text();
            if let Some(p) = &c.out {
                let legend_path = p.with_extension("legend.json");
                fs::write(p, &text)?;
                fs::write(&legend_path, serde_json::to_string_pretty(&legend)?)?;
                eprintln!("wrote {} and {}", p.display(), legend_path.display());
                return Ok(Output { json: Value::Null, text: String::new(), code: 0 });
            }
            let json = json!({"command": echo, "variant": variant.to_string(), "machine": text, "legend": legend});
            Ok(Output { json, text, code: 0 })
        }
        Kind::Bvass2llw => {
            let m = Abvass::parse(&fs::read_to_string(input).map_err(|e| Failure(format!("{input}: {e}")))?)?;
            let root = root.ok_or_else(|| Failure("bvass2llw needs --root".into()))?;
            let target = m.parse_config(root)?;
            let s = encode_bvass_to_sequent(&m, &m.leaves, &target)?;
            Ok(Output { json: json!({"command": echo, "sequent": s.to_string()}), text: format!("{s}\n"), code: 0 })
        }
    }
}

fn cmd_reach(c: &Common, echo: &str, path: &PathBuf, root: &str, leaves: Option<&str>, lossy: bool) -> Res<Output> {
    let b = budgets(c)?;
    let m = Abvass::parse(&fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?)?;
    let root = m.parse_config(root)?;
    let leaves: Vec<usize> = match leaves {
        Some(l) => l
            .split(',')
            .map(|n| m.state_id(n.trim()).map_err(Failure::from))
            .collect::<Res<_>>()?,
        None => m.leaves.clone(),
    };
    let started = Instant::now();
    let (r, st) = search_deduction(&m, &leaves, &root, lossy, b.reach)?;
    let mut text = format!("{}\n", r.label());
    let witness = match &r {
        Reach::Found(t) => {
            check_tree(&m, &leaves, t, lossy).map_err(|e| Failure(format!("witness rejected by the checker: {e}")))?;
            text.push_str(&serde_json::to_string_pretty(&t.to_json(&m))?);
            text.push('\n');
            Some(t.to_json(&m))
        }
        _ => None,
    };
    let code = match r.decided() {
        Some(true) => PROVED,
        Some(false) => REFUTED,
        None => UNKNOWN,
    };
    let json = json!({
        "command": echo,
        "verdict": r.label(),
        "witness": witness,
        "statistics": {"nodes": st.nodes, "wall_ms": started.elapsed().as_millis() as u64},
        "budget": budget_json(&b),
    });
    Ok(Output { json, text, code })
}

fn cmd_crosscheck(c: &Common, echo: &str, suite: &str, size: usize, count: usize, seed: u64) -> Res<Output> {
    let b = budgets(c)?;
    let suite: Suite = suite.parse()?;
    let r = crosscheck::run(suite, &Params { size, count, seed, budget: b.proof, reach: b.reach })?;
    let mut json = r.to_json();
    json["command"] = json!(echo);
    let code = if !r.disagreements().is_empty() {
        DISAGREE
    } else if !r.rejections().is_empty() {
        ERROR
    } else {
        PROVED
    };
    Ok(Output { json, text: r.to_string(), code })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let c = &cli.common;
    let res = match &cli.cmd {
        Cmd::Prove { system, sequent } => cmd_prove(c, &echo, system, sequent),
        Cmd::Deduce { system, axioms, axiom, route, sequent } => {
            cmd_deduce(c, &echo, system, axioms.as_ref(), axiom, *route, sequent)
        }
        Cmd::Translate { mode, input } => cmd_translate(&echo, *mode, input),
        Cmd::Encode { kind, input, root } => cmd_encode(c, &echo, *kind, input, root.as_deref()),
        Cmd::Reach { machine, root, leaves, lossy } => cmd_reach(c, &echo, machine, root, leaves.as_deref(), *lossy),
        Cmd::Crosscheck { suite, size, count, seed } => cmd_crosscheck(c, &echo, suite, *size, *count, *seed),
    };
    match res.and_then(|o| {
        if !o.json.is_null() {
            emit(c, &o)?;
        }
        Ok(o.code)
    }) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(ERROR)
        }
    }
}
