//! Acceptance suite. Runs every headline criterion at its stated tolerance,
//! prints one PASS/FAIL line each and exits nonzero if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use relaynav::agent::Belief;
use relaynav::cli::{self, Invocation};
use relaynav::edr::{evaluate_swap, swap_oracle, ItemLocation, ReplanDecision, SwapRobot, TriggerConfig};
use relaynav::metrics::{self, EpisodeResult};
use relaynav::rove::rtsa::{
    analytic_majority_accuracy, apply_resolutions, label_quality, pending_items, ResolvedLabel,
};
use relaynav::rove::{
    export_adjudication, gate_recognizability, gate_room_consistency, gate_visibility, generate_episode,
    import_adjudication, label_scene, rtsa_vote, trigate_check, EpisodeConfig, EpisodeSpec, Gate, LabelSource,
    MockClassifier, MockRecognizer, SignatureTable, TriGateConfig, VoteOutcome,
};
use relaynav::spe::{self, plan_blockage, Mode, Policy, RolloutConfig, TransportModel};
use relaynav::task::{Role, RoleCursor};
use relaynav::world::{generate_scene, scene_from_ascii, Cell, Pose, RoomLabel, SceneGraph, SceneParams};
use std::fs;
use std::path::Path;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Corpus = Vec<(SceneGraph, EpisodeSpec)>;

/// First `n` generated episodes (one per scene seed) accepted by `keep`.
fn corpus(n: usize, keep: impl Fn(&SceneGraph, &EpisodeSpec) -> bool) -> Corpus {
    let cfg = EpisodeConfig::default();
    let rec = MockRecognizer::default();
    let mut out = Vec::with_capacity(n);
    let mut seed = 0;
    while out.len() < n {
        let s = generate_scene(seed, &SceneParams::default()).expect("default scene params are valid");
        if let Ok(ep) = generate_episode(&s, seed, &format!("e{seed}"), &cfg, &rec) {
            if keep(&s, &ep) {
                out.push((s, ep));
            }
        }
        seed += 1;
    }
    out
}

fn determinism(eps: &Corpus) -> Outcome {
    let cfg = RolloutConfig::default();
    let mut identical = 0;
    let mut slowest = 0.0f64;
    for (s, ep) in eps {
        let t0 = Instant::now();
        let a = spe::run_lockstep(s, ep, &cfg).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let b = spe::run_lockstep(s, ep, &cfg).unwrap();
        identical += usize::from(spe::trace_to_string(&a.trace) == spe::trace_to_string(&b.trace));
    }
    outcome(
        identical == eps.len() && slowest < 1.0,
        format!("{identical}/{} byte-identical reruns, slowest episode {slowest:.3} s (< 1 s)", eps.len()),
    )
}

fn mode_equivalence(eps: &Corpus) -> Outcome {
    let cfg = RolloutConfig::default();
    let identical = eps
        .iter()
        .filter(|(s, ep)| {
            let l = spe::run_lockstep(s, ep, &cfg).unwrap();
            let d = spe::run_distributed(s, ep, TransportModel::default(), &cfg).unwrap();
            spe::trace_to_string(&l.trace) == spe::trace_to_string(&d.trace)
        })
        .count();
    outcome(
        identical == eps.len(),
        format!("{identical}/{} distributed traces equal lockstep at zero latency", eps.len()),
    )
}

fn freshness(eps: &Corpus) -> Outcome {
    let cfg = RolloutConfig::default();
    let late = TransportModel {
        latency: 2 * cfg.tau,
        ..Default::default()
    };
    let solo_cfg = RolloutConfig {
        policy: Policy::Static,
        ..cfg.clone()
    };
    let mut leaked = 0usize;
    let mut contexts = 0usize;
    let (mut solo, mut progressed, mut finished) = (0usize, 0usize, 0usize);
    for (s, ep) in eps {
        let r = spe::run_distributed(s, ep, late, &cfg).unwrap();
        for t in &r.trace {
            for rt in &t.robots {
                contexts += 1;
                leaked += usize::from(rt.partner_ts.is_some() || !rt.partner_stale);
            }
        }
        if spe::run_lockstep(s, ep, &solo_cfg).unwrap().result.success_fh {
            solo += 1;
            // past the pickup: the local chain kept moving without the partner
            progressed += usize::from(r.result.subtasks_done_fh >= 2);
            finished += usize::from(r.result.success_fh);
        }
    }
    let share = progressed as f64 / solo.max(1) as f64;
    outcome(
        leaked == 0 && solo > 0 && share >= 0.95,
        format!(
            "{leaked}/{contexts} contexts used a partner packet; FH progressed in {progressed}/{solo} solo-completable episodes ({:.1}% >= 95%), finished {finished}",
            share * 100.0
        ),
    )
}

fn ablation() -> Outcome {
    let suite = corpus(200, |s, ep| plan_blockage(s, ep).is_some());
    type Pair = (spe::RolloutResult, spe::RolloutResult);
    let rows: Vec<Pair> = suite
        .par_iter()
        .map(|(s, ep)| {
            let plan = plan_blockage(s, ep).unwrap();
            let run = |policy| {
                let cfg = RolloutConfig {
                    policy,
                    blockages: vec![plan.blockage],
                    ..RolloutConfig::default()
                };
                spe::run_lockstep(s, ep, &cfg).unwrap().result
            };
            (run(Policy::Static), run(Policy::Deconav))
        })
        .collect();
    let bsr = |pick: &dyn Fn(&Pair) -> bool, rows: &[&Pair]| rows.iter().filter(|r| pick(r)).count();
    let all: Vec<_> = rows.iter().collect();
    let fired: Vec<_> = rows.iter().filter(|(_, d)| d.swap_count > 0).collect();
    let (st, dc) = (bsr(&|r| r.0.both_success, &all), bsr(&|r| r.1.both_success, &all));
    let (fst, fdc) = (bsr(&|r| r.0.both_success, &fired), bsr(&|r| r.1.both_success, &fired));
    let shorter = fired
        .iter()
        .filter(|(s, d)| d.path_len_fh_m + d.path_len_sh_m < s.path_len_fh_m + s.path_len_sh_m)
        .count();
    let share = shorter as f64 / fired.len().max(1) as f64;
    let swaps_static: u64 = rows.iter().map(|(s, _)| s.swap_count).sum();
    let overall = dc >= st;
    let strict = !fired.is_empty() && fdc > fst;
    let paths = !fired.is_empty() && share >= 0.9;
    outcome(
        overall && strict && paths && swaps_static == 0,
        format!(
            "BSR {st}/{n} static vs {dc}/{n} deconav [{}]; swap fired in {f}: BSR {fst} vs {fdc} [{}]; shorter combined path in {shorter}/{f} ({:.0}% >= 90%) [{}]",
            if overall { "ok" } else { "no" },
            if strict { "ok" } else { "no" },
            share * 100.0,
            if paths { "ok" } else { "no" },
            n = rows.len(),
            f = fired.len(),
        ),
    )
}

fn swap_agreement(eps: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = TriggerConfig::default();
    let (mut agree, mut swaps) = (0, 0);
    let n = 1000;
    for _ in 0..n {
        let (base, ep) = &eps[rng.gen_range(0..eps.len())];
        let mut scene = base.clone();
        let corridors = scene.corridors().len() as u32;
        for _ in 0..rng.gen_range(0..3) {
            scene.set_corridor_blocked(rng.gen_range(0..corridors), true).unwrap();
        }
        let free: Vec<Cell> = scene.regions().iter().flat_map(|r| r.cells.iter().copied()).collect();
        let chains = ep.chains();
        let roles = if rng.gen_bool(0.5) {
            [Role::First, Role::Second]
        } else {
            [Role::Second, Role::First]
        };
        let robots = roles.map(|role| SwapRobot {
            cell: free[rng.gen_range(0..free.len())],
            cursor: RoleCursor {
                role,
                index: rng.gen_range(0..=5),
            },
        });
        let item = match rng.gen_range(0..4) {
            0 => ItemLocation::Carried,
            1 => ItemLocation::Static(chains.first[1].cell),
            2 => ItemLocation::Static(chains.first[3].cell),
            _ => ItemLocation::Static(free[rng.gen_range(0..free.len())]),
        };
        let belief = Belief::from_scene(&scene);
        let mine = evaluate_swap([&belief, &belief], &robots, &chains, item, &cfg);
        let truth = swap_oracle(&scene, &robots, &chains, item, &cfg);
        agree += usize::from(mine == truth);
        swaps += usize::from(truth == ReplanDecision::SwapSubtasks);
    }
    outcome(
        agree == n,
        format!("{agree}/{n} configurations agree with the oracle ({swaps} swaps)"),
    )
}

fn three_rooms() -> SceneGraph {
    scene_from_ascii(
        "gates",
        &[
            "#############",
            "#.###.###.###",
            "#...#...#...#",
            "#...D...D...#",
            "#...#...#...#",
            "#############",
        ],
        &[RoomLabel::Office, RoomLabel::Foyer, RoomLabel::Hallway],
        &[
            ("bottle", (1, 1), 1.0, 0.0),
            ("shelf", (5, 1), 1.0, 0.0),
            ("side_table", (9, 1), 1.0, 0.9),
        ],
    )
    .unwrap()
}

fn trigate_soundness() -> Outcome {
    let cfg = TriGateConfig::default();
    let rec = MockRecognizer::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let scenes: Vec<SceneGraph> = (0..8).map(|s| generate_scene(s, &SceneParams::default()).unwrap()).collect();
    let (mut agree, mut passing) = (0, 0);
    for i in 0..500 {
        let s = &scenes[i % scenes.len()];
        let obj = &s.objects()[rng.gen_range(0..s.objects().len())];
        let cells = &s.region(obj.region_id).unwrap().cells;
        let pose = Pose::at_cell(cells[rng.gen_range(0..cells.len())], s.resolution(), rng.gen_range(0..24u16) * 15);
        let expected = if rng.gen_bool(0.7) {
            s.room_label_at(obj.cell)
        } else {
            RoomLabel::KNOWN[rng.gen_range(0..RoomLabel::KNOWN.len())]
        };
        let report = trigate_check(s, &pose, obj, expected, &cfg, &rec);
        let vis = gate_visibility(s, &pose, obj, cfg.max_range, cfg.fov).pass;
        let room = gate_room_consistency(s, obj, expected).pass;
        let recog = gate_recognizability(&rec, s, &pose, obj, cfg.theta_rec).pass;
        agree += usize::from(report.pass() == (vis && room && recog));
        passing += usize::from(report.pass());
    }

    let s = three_rooms();
    let res = s.resolution();
    let ok = Pose::at_cell(Cell::new(1, 2), res, 270);
    let cases = [
        (Pose::at_cell(Cell::new(3, 2), res, 0), 1, RoomLabel::Foyer, Gate::Visibility),
        (ok, 0, RoomLabel::Bedroom, Gate::RoomConsistency),
        (Pose::at_cell(Cell::new(9, 2), res, 270), 2, RoomLabel::Hallway, Gate::Recognizability),
    ];
    let baseline = trigate_check(&s, &ok, &s.objects()[0], RoomLabel::Office, &cfg, &rec).pass();
    let single = cases
        .iter()
        .filter(|(pose, obj, room, gate)| {
            trigate_check(&s, pose, &s.objects()[*obj], *room, &cfg, &rec).failing_gates() == vec![*gate]
        })
        .count();
    outcome(
        agree == 500 && baseline && single == 3,
        format!("{agree}/500 candidates equal the gate conjunction ({passing} pass); {single}/3 counterexamples fail exactly their gate"),
    )
}

fn vote_statistics() -> Outcome {
    let (p1, p2, p3) = (0.641, 0.885, 0.850);
    let rule = MockClassifier::new(LabelSource::Rule, p1, 11);
    let a = MockClassifier::new(LabelSource::ClassifierA, p2, 12);
    let b = MockClassifier::new(LabelSource::ClassifierB, p3, 13);
    let n = 100_000u32;
    let mut correct = 0u32;
    for i in 0..n {
        let truth = RoomLabel::KNOWN[i as usize % RoomLabel::KNOWN.len()];
        let votes = [rule.vote_for("trial", i, truth), a.vote_for("trial", i, truth), b.vote_for("trial", i, truth)];
        if let Ok(VoteOutcome::Label { label, .. }) = rtsa_vote("trial", i, &votes) {
            correct += u32::from(label == truth);
        }
    }
    let empirical = f64::from(correct) / f64::from(n);
    let analytic = analytic_majority_accuracy(p1, p2, p3);
    let expected = p1 * p2 + p1 * p3 + p2 * p3 - 2.0 * p1 * p2 * p3;
    outcome(
        (empirical - analytic).abs() <= 0.005 && (analytic - expected).abs() < 1e-12,
        format!(
            "empirical {empirical:.4} vs analytic {analytic:.4} (tolerance 0.005); the reported joint 0.921 needs correlated errors"
        ),
    )
}

fn adjudication_closure() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut scenes = Vec::new();
    let mut labelings = Vec::new();
    for seed in 0..20 {
        let mut s = generate_scene(seed, &SceneParams::default()).unwrap();
        let mut a = MockClassifier::new(LabelSource::ClassifierA, 0.885, seed);
        let mut b = MockClassifier::new(LabelSource::ClassifierB, 0.850, seed);
        a.learn_scene(&s);
        b.learn_scene(&s);
        labelings.extend(label_scene(&mut s, &SignatureTable::default(), &a, &b));
        scenes.push(s);
    }
    let before = label_quality(&scenes);
    let pending = pending_items(&scenes, &labelings);
    let path = dir.path().join("adjudication.csv");
    export_adjudication(&pending, &path).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(&header).unwrap();
    for r in &rows {
        let s = scenes.iter().find(|s| s.scene_id() == &r[0]).unwrap();
        let truth = s.region(r[1].parse().unwrap()).unwrap().ground_truth_label.to_string();
        w.write_record([&r[0], &r[1], &r[2], &r[3], &r[4], truth.as_str()]).unwrap();
    }
    w.flush().unwrap();
    let resolved: Vec<ResolvedLabel> = import_adjudication(&path, &pending).unwrap();
    apply_resolutions(&mut scenes, &resolved);
    let after = label_quality(&scenes);
    outcome(
        after.coverage == 1.0 && after.correctness == 1.0 && !rows.is_empty(),
        format!(
            "{} regions adjudicated; coverage {:.1}% -> {:.1}%, correctness {:.1}% -> {:.1}%",
            rows.len(),
            before.coverage * 100.0,
            after.coverage * 100.0,
            before.correctness * 100.0,
            after.correctness * 100.0
        ),
    )
}

fn random_results(rng: &mut ChaCha8Rng) -> Vec<EpisodeResult> {
    (0..rng.gen_range(1..30))
        .map(|i| {
            let (fh, sh) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
            let (l, p) = (rng.gen_range(0.5..40.0), rng.gen_range(0.0..80.0));
            EpisodeResult {
                episode_id: format!("r{i}"),
                success_fh: fh,
                success_sh: sh,
                both_success: fh && sh,
                path_len_fh_m: p,
                path_len_sh_m: p,
                gt_length_fh_m: l,
                gt_length_sh_m: l,
                ne_fh_m: rng.gen_range(0.0..10.0),
                ne_sh_m: rng.gen_range(0.0..10.0),
                spl_fh: metrics::spl(fh, l, p),
                spl_sh: metrics::spl(sh, l, p),
                isr_fh: rng.gen_range(0.0..=1.0),
                isr_sh: rng.gen_range(0.0..=1.0),
                ticks: 1,
                swap_count: 0,
                dialogue_count: 0,
            }
        })
        .collect()
}

fn metric_units() -> Outcome {
    let spl = metrics::spl(true, 10.0, 12.5);
    let row = |fh: bool, sh: bool| EpisodeResult {
        success_fh: fh,
        success_sh: sh,
        both_success: fh && sh,
        ..random_results(&mut ChaCha8Rng::seed_from_u64(0)).remove(0)
    };
    let report = metrics::aggregate(&[row(true, true), row(true, false), row(false, false)]).unwrap();
    let base = metrics::MetricsReport { bsr: 0.13, ..report.clone() };
    let after = metrics::MetricsReport { bsr: 0.22, ..report.clone() };
    let rel = metrics::compare(&base, &after).bsr.rel.unwrap() * 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let violations = (0..10_000)
        .filter(|_| {
            let m = metrics::aggregate(&random_results(&mut rng)).unwrap();
            m.bsr > m.sr || m.bsr > m.sr_fh.min(m.sr_sh)
        })
        .count();
    outcome(
        spl == 0.8 && report.bsr == 1.0 / 3.0 && (rel - 69.2).abs() <= 0.1 && violations == 0,
        format!(
            "spl {spl}; bsr {:.6}; relative BSR gain {rel:.2}% (69.2 +- 0.1); bsr > sr in {violations}/10000 fuzzed sets",
            report.bsr
        ),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut cfg = cli::Config::default();
    let scenes = root.join("scenes");
    cli::execute(&Invocation::GenScenes { count: 16, seed: 7 }, &cfg, &scenes).unwrap();
    let all = root.join("all.jsonl");
    let gen = Invocation::GenEpisodes {
        scenes: scenes.clone(),
        per_scene: 2,
        seed: 1,
    };
    cli::execute(&gen, &cfg, &all).unwrap();
    let twenty: String = fs::read_to_string(&all).unwrap().lines().take(20).map(|l| format!("{l}\n")).collect();
    let eps = root.join("eps.jsonl");
    fs::write(&eps, twenty).unwrap();

    cfg.rollout.mode = Mode::Distributed;
    cfg.rollout.transport.latency = 2;
    cfg.rollout.transport.jitter = 1;
    cfg.rollout.transport.drop_prob = 0.1;
    let run = Invocation::Run {
        episodes: eps,
        scenes,
        blockage: true,
        seed: 3,
    };
    let first = root.join("first");
    cli::execute(&run, &cfg, &first).unwrap();
    let second = root.join("second");
    cli::rerun(&first.join(cli::MANIFEST), &second).unwrap();
    let rerun_equal = files(&first) == files(&second);

    let traces: Vec<_> = fs::read_dir(first.join("traces")).unwrap().map(|e| e.unwrap().path()).collect();
    let round_trips = traces
        .iter()
        .filter(|p| {
            let loaded = spe::load_trace(p).unwrap();
            let copy = root.join("copy.jsonl");
            spe::emit_trace(&loaded, &copy).unwrap();
            fs::read(p).unwrap() == fs::read(&copy).unwrap() && spe::load_trace(&copy).unwrap() == loaded
        })
        .count();
    outcome(
        traces.len() == 20 && round_trips == 20 && rerun_equal,
        format!(
            "{round_trips}/{} traces survive save/load; re-simulation from manifest byte-identical: {rerun_equal}",
            traces.len()
        ),
    )
}

fn main() {
    let fifty = corpus(50, |_, _| true);
    type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("determinism", Box::new(|| determinism(&fifty))),
        ("mode equivalence", Box::new(|| mode_equivalence(&fifty))),
        ("freshness", Box::new(|| freshness(&fifty))),
        ("ablation direction", Box::new(ablation)),
        ("swap correctness", Box::new(|| swap_agreement(&fifty))),
        ("trigate soundness", Box::new(trigate_soundness)),
        ("vote statistics", Box::new(vote_statistics)),
        ("adjudication closure", Box::new(adjudication_closure)),
        ("metric unit suite", Box::new(metric_units)),
        ("replay and round-trip", Box::new(replay)),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {name:<22} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} criteria pass", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
