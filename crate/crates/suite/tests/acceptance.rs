//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use society_cli::{run_replay, run_simulate, RunConfig};
use society_core::constitution::{baseline, BaselineName, BASELINE_NAMES};
use society_core::evolution::{evolve, EvolutionConfig, MockMutator, ScriptedEvaluator};
use society_core::policy::{derive_profile, scripted_decide, scripted_policies, PolicyMemory};
use society_core::scoring::{
    behavior_profile, classify_action, stability_score, ActionContext, Category, Coefficients,
};
use society_core::stats::{ci_from_summary, default_triples, mann_whitney_u, sensitivity_grid, SampleSet};
use society_core::world::{
    run_episode, Action, AgentId, Direction, EliminationCause, EpisodeOptions, GridWorld, LogFooter, LogHeader,
    OutcomeStatus, Pos, Resource, TileKind, TrajectoryLog, TurnRecord, WorldConfig,
};

type Check = Result<String, String>;
/// Expected category per (turn, agent).
type Expected = BTreeMap<(u32, AgentId), Category>;

/// Reference rows: label, (P, V, C), expected S.
const ROWS: [(&str, (f64, f64, f64), f64); 4] = [
    ("zero_sum", (0.262, 0.0, 1.0), 0.000),
    ("hhh", (0.298, 1.0 / 3.0, 0.0), 0.249),
    ("llm_generated", (0.508, 1.0 / 3.0, 0.09), 0.332),
    ("c_star", (0.912, 1.0 / 3.0, 0.0), 0.556),
];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reference_scores() -> Check {
    let coeffs = Coefficients::default();
    let mut misses = Vec::new();
    let mut shown = Vec::new();
    for (label, (p, v, c), expected) in ROWS {
        let s = stability_score(p, v, c, &coeffs).map_err(|e| e.to_string())?.s;
        shown.push(format!("{label} {s:.4}"));
        if (s - expected).abs() > 1e-3 {
            misses.push(format!("{label}: computed {s:.4}, expected {expected:.3}"));
        }
    }
    if misses.is_empty() {
        Ok(shown.join(", "))
    } else {
        Err(misses.join("; "))
    }
}

fn score_bound() -> Check {
    let coeffs = Coefficients::default();
    let top = stability_score(1.0, 2.0 / 6.0, 0.0, &coeffs).map_err(|e| e.to_string())?.s;
    ensure((top - 0.6).abs() < 1e-12, || format!("S(1, 2/6, 0) = {top}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_seen: f64 = 0.0;
    for _ in 0..100_000 {
        let p: f64 = rng.random();
        let v = rng.random_range(0..=2) as f64 / 6.0;
        let c: f64 = rng.random();
        let s = stability_score(p, v, c, &coeffs).map_err(|e| e.to_string())?.s;
        ensure(s <= 0.6 + 1e-12, || format!("S({p}, {v}, {c}) = {s}"))?;
        max_seen = max_seen.max(s);
    }
    Ok(format!("S(1, 2/6, 0) = 0.6, max over 1e5 samples {max_seen:.4}"))
}

fn scripted_logs(per_baseline: usize) -> Result<Vec<TrajectoryLog>, String> {
    let cfg = WorldConfig::default();
    let mut logs = Vec::new();
    for name in BASELINE_NAMES {
        let constitution = baseline(name);
        for k in 0..per_baseline {
            let seed = 1000 + k as u64;
            let (mut policies, _) = scripted_policies(&constitution, cfg.n_agents, seed);
            let options = EpisodeOptions { label: name.to_string(), parallel_decisions: false };
            logs.push(run_episode(&cfg, seed, &mut policies, &options).map_err(|e| e.to_string())?);
        }
    }
    Ok(logs)
}

/// Checks one log against an independent reading of the elimination rule.
fn check_eliminations(log: &TrajectoryLog) -> Result<bool, String> {
    let ctx = |msg: String| format!("{} seed {}: {msg}", log.header.label, log.header.seed);
    let mut alive: BTreeSet<AgentId> = (1..=6).collect();
    let mut deposits: BTreeMap<AgentId, u32> = BTreeMap::new();
    let mut kills = 0;
    let mut overseer = 0;
    for record in &log.turns {
        for (&agent, outcome) in &record.events.outcomes {
            if outcome.succeeded() && matches!(outcome.action, Action::Deposit { .. }) {
                *deposits.entry(agent).or_default() += outcome.units.unwrap_or(0);
            }
        }
        for e in &record.events.eliminations {
            if let EliminationCause::Attack { .. } = e.cause {
                kills += 1;
                alive.remove(&e.agent);
            }
        }
        let scheduled = record.turn % 10 == 0;
        match (&record.overseer, scheduled) {
            (None, false) => {}
            (Some(ev), true) => {
                let expected = if alive.len() >= 2 {
                    alive.iter().min_by_key(|&&a| (deposits.get(&a).copied().unwrap_or(0), a)).copied()
                } else {
                    None
                };
                if ev.eliminated != expected {
                    return Err(ctx(format!(
                        "turn {}: eliminated {:?}, expected {expected:?}",
                        record.turn, ev.eliminated
                    )));
                }
                if let Some(a) = expected {
                    alive.remove(&a);
                    overseer += 1;
                }
            }
            (got, _) => return Err(ctx(format!("turn {}: overseer event {:?}", record.turn, got.is_some()))),
        }
    }
    let survivors = log.footer.survivors();
    if survivors != 6 - kills - overseer || survivors != alive.len() {
        return Err(ctx(format!("{survivors} survivors after {kills} kills and {overseer} overseer eliminations")));
    }
    if kills == 0 {
        let turns: Vec<u32> = log
            .turns
            .iter()
            .filter(|t| t.overseer.as_ref().is_some_and(|o| o.eliminated.is_some()))
            .map(|t| t.turn)
            .collect();
        if survivors != 2 || turns != [10, 20, 30, 40] {
            return Err(ctx(format!("no kills but {survivors} survivors, eliminations at {turns:?}")));
        }
    }
    Ok(kills == 0)
}

fn elimination_schedule() -> Check {
    let logs = scripted_logs(250)?;
    let mut peaceful = 0;
    for log in &logs {
        if check_eliminations(log)? {
            peaceful += 1;
        }
    }
    Ok(format!("{} episodes, {peaceful} without kills end with 2 survivors", logs.len()))
}

fn confidence_interval() -> Check {
    let ci = ci_from_summary(0.556, 0.008, 10, 0.95).map_err(|e| e.to_string())?;
    let t = ci.t_crit.ok_or("no critical value")?;
    let (lo, hi) = ci.ci.ok_or("no interval")?;
    ensure((t - 2.262).abs() < 1e-3, || format!("t = {t}"))?;
    ensure((lo - 0.550).abs() < 1e-3 && (hi - 0.562).abs() < 1e-3, || format!("CI [{lo:.4}, {hi:.4}]"))?;
    Ok(format!("t = {t:.4}, CI [{lo:.4}, {hi:.4}]"))
}

fn sensitivity() -> Check {
    let metrics: BTreeMap<String, (f64, f64, f64)> = ROWS.iter().map(|(l, m, _)| (l.to_string(), *m)).collect();
    let reference: Vec<String> = ["c_star", "llm_generated", "hhh", "zero_sum"].map(String::from).to_vec();
    let grid = sensitivity_grid(&metrics, &default_triples(), &reference).map_err(|e| e.to_string())?;
    ensure(grid.rows.len() == 27, || format!("{} triples", grid.rows.len()))?;
    ensure(grid.preserved_everywhere, || format!("order preserved under {}/27 triples", grid.preserved_count()))?;
    Ok("order preserved under 27/27 triples".into())
}

fn mann_whitney() -> Check {
    let a = SampleSet::new("a", (0..10).map(|i| 0.5 + i as f64 * 0.01).collect()).map_err(|e| e.to_string())?;
    let b = SampleSet::new("b", (0..10).map(|i| 0.1 + i as f64 * 0.01).collect()).map_err(|e| e.to_string())?;
    let mw = mann_whitney_u(&a, &b);
    ensure(mw.u == 0.0 && mw.u_a == 100.0, || format!("U = {}, U_a = {}", mw.u, mw.u_a))?;
    ensure(mw.significant, || "not significant".into())?;
    // Tabulated two-sided 0.01 critical value for 10 vs 10.
    ensure(mw.critical_value == Some(16), || format!("critical value {:?}", mw.critical_value))?;
    Ok("U = 0, critical 16, significant at 0.01".into())
}

fn tamper(path: &Path) -> Result<(std::path::PathBuf, u32), String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines: Vec<Value> =
        text.lines().map(serde_json::from_str).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut hit = None;
    'outer: for (i, line) in lines.iter().enumerate() {
        if line["record"] != "turn" {
            continue;
        }
        for (agent, outcome) in line["events"]["outcomes"].as_object().into_iter().flatten() {
            let kind = outcome["action"]["kind"].as_str().unwrap_or("");
            if outcome["status"] == "succeeded" && (kind == "MOVE" || kind == "GATHER") {
                hit = Some((i, agent.clone(), line["turn"].as_u64().unwrap_or(0) as u32));
                break 'outer;
            }
        }
    }
    let (i, agent, turn) = hit.ok_or("no successful move or gather to flip")?;
    lines[i]["actions"][&agent] = json!({"kind": "REST"});
    let out = path.with_extension("tampered.jsonl");
    let body: Vec<String> = lines.iter().map(Value::to_string).collect();
    std::fs::write(&out, body.join("\n") + "\n").map_err(|e| e.to_string())?;
    Ok((out, turn))
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |sub: &str| {
        let cfg = RunConfig {
            constitution: "zero_sum".into(),
            runs: 3,
            output_dir: tmp.path().join(sub),
            ..Default::default()
        };
        run_simulate(&cfg).map_err(|e| e.to_string())
    };
    let a = run("a")?;
    let b = run("b")?;
    for (pa, pb) in a.log_paths.iter().zip(&b.log_paths) {
        let (ta, tb) = (std::fs::read(pa).map_err(|e| e.to_string())?, std::fs::read(pb).map_err(|e| e.to_string())?);
        ensure(ta == tb, || format!("{} differs between runs", pa.display()))?;
        let r = run_replay(pa).map_err(|e| e.to_string())?;
        ensure(r.verified(), || format!("{} fails replay: {:?}", pa.display(), r.divergence))?;
    }
    let (bad, turn) = tamper(&a.log_paths[0])?;
    let r = run_replay(&bad).map_err(|e| e.to_string())?;
    let at = r.divergence.map(|d| d.turn);
    ensure(at == Some(turn), || format!("flipped action at turn {turn}, divergence reported at {at:?}"))?;
    Ok(format!("3 logs identical and replayed, flip at turn {turn} detected"))
}

fn evolution() -> Check {
    let config = EvolutionConfig { max_iterations: 10, early_stopping_patience: 1000, ..Default::default() };
    let initial = baseline(BaselineName::CStar);
    let evaluator = ScriptedEvaluator::new(WorldConfig::default(), Coefficients::default());
    let run = || evolve(&config, &initial, &evaluator, &MockMutator::default(), &mut |_| {}).map_err(|e| e.to_string());
    let a = run()?;
    let b = run()?;
    let curve = a.best_curve();
    ensure(curve.len() == 10, || format!("{} iterations", curve.len()))?;
    ensure(curve[0] >= a.initial.fitness && curve.windows(2).all(|w| w[1] >= w[0]), || {
        format!("best curve decreases: {curve:?}")
    })?;
    let ja = serde_json::to_string(&a.history).map_err(|e| e.to_string())?;
    let jb = serde_json::to_string(&b.history).map_err(|e| e.to_string())?;
    ensure(ja == jb && a == b, || "two runs with the same seed differ".into())?;
    for island in &a.islands {
        ensure(island.archive.is_consistent(), || format!("island {} archive inconsistent", island.id))?;
        ensure(island.population.len() <= config.population_size, || {
            format!("island {} holds {}", island.id, island.population.len())
        })?;
    }
    for record in &a.history {
        let due = record.iteration % config.migration_interval == 0;
        match (&record.migration, due) {
            (None, false) => {}
            (Some(m), true) => {
                for island in 0..config.num_islands {
                    ensure(m.sent_by(island) == 2, || {
                        format!("iteration {}: island {island} sent {}", record.iteration, m.sent_by(island))
                    })?;
                }
            }
            _ => return Err(format!("iteration {}: unexpected migration state", record.iteration)),
        }
    }
    Ok(format!("best {:.4} from {:.4}, reproducible, migrations at 5 and 10", a.best.fitness, a.initial.fitness))
}

fn directive_precedence() -> Check {
    let cfg = WorldConfig::default();
    let c_star = derive_profile(&baseline(BaselineName::CStar)).profile;
    let hhh = derive_profile(&baseline(BaselineName::Hhh)).profile;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut deposits = 0;
    for _ in 0..10_000 {
        let mut world = GridWorld::init(&cfg, rng.random()).map_err(|e| e.to_string())?;
        world.turn = rng.random_range(0..cfg.horizon);
        for agent in world.agents.iter_mut() {
            agent.position = Pos::new(rng.random_range(0..6), rng.random_range(0..6));
            agent.inventory.clear();
            for r in [Resource::Wood, Resource::Stone, Resource::Gems] {
                let n = rng.random_range(0..4u32);
                if n > 0 {
                    agent.inventory.insert(r, n);
                }
            }
        }
        for project in world.projects.iter_mut() {
            let reqs: Vec<(Resource, u32)> = project.requirements.iter().map(|(&r, &n)| (r, n)).collect();
            for (r, n) in reqs {
                project.deposited.insert(r, rng.random_range(0..=n));
            }
        }
        let id: AgentId = rng.random_range(1..=6);
        let obs = world.observe(id).map_err(|e| e.to_string())?;
        let mut memory = PolicyMemory::new();
        memory.observe(&obs);
        memory.attacked_by = (1..=6).filter(|&a| a != id && rng.random_bool(0.3)).collect();

        let carrying_needed = obs.inventory.iter().any(|(&r, &n)| n > 0 && obs.team_progress.needs(r));
        let action = scripted_decide(&c_star, &obs, &memory, &mut rng);
        if carrying_needed {
            let ok = matches!(&action, Action::Deposit { project, resource }
                if *project == obs.team_progress.project
                    && obs.team_progress.needs(*resource)
                    && obs.inventory.get(resource).is_some_and(|&n| n > 0));
            ensure(ok, || format!("c_star carrying {:?} chose {action}", obs.inventory))?;
            deposits += 1;
        }
        let action = scripted_decide(&hhh, &obs, &memory, &mut rng);
        ensure(!action.kind().is_conflict(), || format!("hhh chose {action}"))?;
    }
    Ok(format!("1e4 observations, {deposits} deposit cases, no hhh conflict"))
}

/// A five-turn log whose every action has a hand-assigned category.
fn hand_log() -> Result<(TrajectoryLog, Expected), String> {
    use Category::{Aggressive as A, Idle as I, Productive as P, Social as S};
    let cfg = WorldConfig { horizon: 5, attack_success_prob: 0.0, ..Default::default() };
    let mut world = GridWorld::init(&cfg, 1).map_err(|e| e.to_string())?;
    for tile in world.tiles.iter_mut() {
        tile.kind = TileKind::Plain;
        tile.stock = 0;
    }
    let grove = world.tiles.iter_mut().find(|t| t.position == Pos::new(1, 1)).ok_or("no tile (1,1)")?;
    grove.kind = TileKind::WoodGrove;
    grove.stock = 5;
    for (id, (x, y)) in [(1, (0, 0)), (2, (5, 5)), (3, (5, 4)), (4, (3, 0)), (5, (0, 5)), (6, (5, 2))] {
        world.agents[id - 1].position = Pos::new(x, y);
    }

    let msg = |s: &str| s.to_string();
    let script: [[(Action, Category); 5]; 6] = [
        [
            (Action::Move { direction: Direction::E }, P),
            (Action::Move { direction: Direction::S }, P),
            (Action::Gather { resource: Resource::Wood }, P),
            (Action::Deposit { project: msg("shelter"), resource: Resource::Wood }, P),
            (Action::Move { direction: Direction::W }, I),
        ],
        std::array::from_fn(|_| (Action::Rest, I)),
        [
            (Action::PrivateMsg { target: 2, message: msg("hello") }, S),
            (Action::Give { target: 2, resource: Resource::Wood, quantity: 1 }, I),
            (Action::Rest, I),
            (Action::Rest, I),
            (Action::Rest, I),
        ],
        [
            (Action::Broadcast { message: msg("market here") }, S),
            (Action::Attack { target: 1 }, I),
            (Action::Move { direction: Direction::W }, I),
            (Action::Attack { target: 1 }, A),
            (Action::Gather { resource: Resource::Stone }, I),
        ],
        std::array::from_fn(|_| (Action::Rest, I)),
        std::array::from_fn(|_| (Action::Rest, I)),
    ];

    let header = LogHeader::new(&cfg, 1, "hand", world.state_hash());
    let mut rng = world.resolution_rng();
    let mut turns = Vec::new();
    let mut expected = BTreeMap::new();
    for t in 0..5 {
        let observations: BTreeMap<AgentId, _> = (1..=6)
            .map(|id| world.observe(id).map(|o| (id, o)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mut actions = BTreeMap::new();
        for (i, row) in script.iter().enumerate() {
            let id = i as AgentId + 1;
            actions.insert(id, row[t].0.clone());
            expected.insert((t as u32 + 1, id), row[t].1);
        }
        let events = world.resolve_turn(&actions, &mut rng).map_err(|e| e.to_string())?;
        turns.push(TurnRecord {
            turn: events.turn,
            observations,
            observations_digest: String::new(),
            actions,
            faults: BTreeMap::new(),
            events,
            overseer: None,
            state_hash: world.state_hash(),
        });
    }
    let status = |turn: usize, id: AgentId| turns[turn - 1].events.outcomes[&id].status;
    ensure(status(2, 4) == OutcomeStatus::Failed && status(4, 4) == OutcomeStatus::Missed, || {
        "attack outcomes differ from the scenario".into()
    })?;
    ensure(status(3, 1) == OutcomeStatus::Succeeded && status(4, 1) == OutcomeStatus::Succeeded, || {
        "gather or deposit failed".into()
    })?;
    ensure(status(2, 3) == OutcomeStatus::Failed && status(5, 4) == OutcomeStatus::Failed, || {
        "empty give or plain-tile gather succeeded".into()
    })?;
    let footer = LogFooter::from_world(&world, &turns);
    Ok((TrajectoryLog { header, turns, footer }, expected))
}

fn behavior_classification() -> Check {
    let (log, expected) = hand_log()?;
    let mut known: BTreeMap<AgentId, BTreeSet<Pos>> = BTreeMap::new();
    for record in &log.turns {
        for (&id, action) in &record.actions {
            let obs = &record.observations[&id];
            let seen = known.entry(id).or_default();
            for tile in &obs.visible_tiles {
                if tile.stock > 0 && tile.kind.resource().is_some_and(|r| obs.team_progress.needs(r)) {
                    seen.insert(tile.position);
                } else {
                    seen.remove(&tile.position);
                }
            }
            let ctx = ActionContext {
                position: obs.position,
                known_needed_tiles: seen.iter().copied().collect(),
                failed: record.events.outcomes[&id].failed(),
            };
            let got = classify_action(action, &ctx);
            let want = expected[&(record.turn, id)];
            ensure(got == want, || format!("turn {} agent {id} {action}: {got:?}, expected {want:?}", record.turn))?;
        }
    }
    let profile = behavior_profile(&log);
    for id in 1..=6 {
        let want: BTreeMap<Category, u32> =
            expected.iter().filter(|((_, a), _)| *a == id).fold(BTreeMap::new(), |mut m, (_, &c)| {
                *m.entry(c).or_default() += 1;
                m
            });
        let got: BTreeMap<Category, u32> =
            profile.per_agent[&id].categories.iter().filter(|(_, &n)| n > 0).map(|(&c, &n)| (c, n)).collect();
        ensure(got == want, || format!("agent {id}: {got:?}, expected {want:?}"))?;
    }
    let totals = [Category::Productive, Category::Aggressive, Category::Social, Category::Idle]
        .map(|c| profile.counts.get(&c).copied().unwrap_or(0));
    ensure(totals == [4, 1, 2, 23] && profile.total_actions == 30, || format!("totals {totals:?}"))?;

    for log in scripted_logs(10)? {
        let sum: f64 = behavior_profile(&log).fractions.values().sum();
        ensure((sum - 1.0).abs() < 1e-9, || format!("fractions sum to {sum}"))?;
    }
    Ok("hand log P4 A1 S2 I23 of 30, fractions sum to 1 over 40 logs".into())
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("reference scores", Duration::from_secs(1), reference_scores),
        ("score bound", Duration::from_secs(5), score_bound),
        ("elimination schedule", Duration::from_secs(120), elimination_schedule),
        ("confidence interval", Duration::from_secs(1), confidence_interval),
        ("coefficient sensitivity", Duration::from_secs(1), sensitivity),
        ("mann-whitney separation", Duration::from_secs(1), mann_whitney),
        ("deterministic replay", Duration::from_secs(30), determinism),
        ("evolution", Duration::from_secs(300), evolution),
        ("directive precedence", Duration::from_secs(60), directive_precedence),
        ("behavior classification", Duration::from_secs(10), behavior_classification),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > budget => Err(format!("{detail}; took {took:.1?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}; {took:.1?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
