//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

#[path = "acceptance/checker.rs"]
mod checker;
#[path = "acceptance/fuzz.rs"]
mod fuzz;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use evrp::exact::{self, enumerate_paths, grid_oracle, ExactSolver, ParetoFront, SweepDirection, DEFAULT_ORACLE_CAP};
use evrp::formats;
use evrp::instance::{self, generate_instance, Instance, Preset};
use evrp::model::{self, check_feasible, RouteSolution, Weights};
use evrp::pareto::Point2;
use rand::SeedableRng;

const BIN: &str = env!("CARGO_BIN_EXE_evrp");
const SEEDS_ORACLE: std::ops::RangeInclusive<u64> = 1..=20;
const SEEDS_SHAPE: std::ops::RangeInclusive<u64> = 1..=20;
const SEEDS_SEARCH: std::ops::RangeInclusive<u64> = 1..=10;
const FUZZ_PER_INSTANCE: usize = 100_000;

struct Verdict {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn preset_instance(preset: Preset, seed: u64) -> Instance {
    generate_instance(preset.shape(), Default::default(), Default::default(), seed).unwrap()
}

fn max_price(inst: &Instance) -> f64 {
    inst.stations.iter().map(|s| s.price).fold(0.0, f64::max)
}

/// Pairwise dominance, coded separately from the library.
fn beats(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

fn exact_front(inst: &Instance) -> Option<ParetoFront> {
    let solver = ExactSolver::new(inst).ok()?;
    solver.epsilon_constraint(None, SweepDirection::TimeUnderCost).ok()
}

fn criterion_1(feasible_plans: &mut Vec<(Instance, RouteSolution)>) -> Verdict {
    let mut worst_time = 0.0f64;
    let mut beaten = 0;
    let mut uncovered = 0;
    let mut infeasible = 0;
    let mut mismatched_emptiness = 0;
    for seed in SEEDS_ORACLE {
        let inst = preset_instance(Preset::Instance1, seed);
        let start = Instant::now();
        let front = exact_front(&inst);
        let oracle = grid_oracle(&inst, 50, DEFAULT_ORACLE_CAP).unwrap();
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        let Some(front) = front else {
            infeasible += 1;
            mismatched_emptiness += usize::from(!oracle.is_empty());
            continue;
        };
        let tol = inst.params.capacity * max_price(&inst) / 50.0;
        for q in &front.points {
            let q = q.objectives;
            for p in &oracle.points {
                let p = p.objectives;
                if beats((p.time_h + 1e-6, p.cost + tol), (q.time_h, q.cost)) {
                    beaten += 1;
                }
            }
        }
        // Reported only: the sweep may step over front points.
        for p in &oracle.points {
            let p = p.objectives;
            if !front.points.iter().any(|q| q.objectives.time_h <= p.time_h + 1e-6 && q.objectives.cost <= p.cost + tol) {
                uncovered += 1;
            }
        }
        feasible_plans.extend(front.points.iter().map(|p| (inst.clone(), p.solution.clone())));
        feasible_plans.extend(oracle.points.iter().map(|p| (inst.clone(), p.solution.clone())));
    }
    Verdict {
        id: 1,
        name: "oracle equivalence",
        pass: beaten == 0 && mismatched_emptiness == 0 && worst_time < 60.0,
        detail: format!(
            "{} preset-1 instances ({infeasible} without any feasible plan); oracle points beating an exact point beyond tolerance: {beaten}; \
             oracle points not covered by the sweep: {uncovered}; slowest instance {worst_time:.2} s",
            SEEDS_ORACLE.count()
        ),
    }
}

fn criterion_2(feasible_plans: &mut Vec<(Instance, RouteSolution)>) -> Verdict {
    let mut shape_failures = Vec::new();
    let mut thin = Vec::new();
    let mut solved = 0;
    let mut unsolvable = 0;
    for preset in Preset::ALL {
        for seed in SEEDS_SHAPE {
            let inst = preset_instance(preset, seed);
            let solver = match ExactSolver::new(&inst) {
                Ok(s) => s,
                Err(e) => {
                    shape_failures.push(format!("{preset}/{seed}: {e}"));
                    continue;
                }
            };
            let (front, lo, hi) =
                match (solver.epsilon_constraint(None, SweepDirection::TimeUnderCost), solver.min_time(), solver.min_cost()) {
                    (Ok(f), Ok(a), Ok(b)) => (f, a, b),
                    (Err(exact::ExactError::Infeasible(_)), Err(_), Err(_)) => {
                        unsolvable += 1;
                        continue;
                    }
                    other => {
                        shape_failures.push(format!("{preset}/{seed}: inconsistent outcomes {:?}", other.0.err()));
                        continue;
                    }
                };
            solved += 1;
            let o = front.objectives();
            let sorted = o.windows(2).all(|w| w[0].time_h < w[1].time_h && w[0].cost > w[1].cost);
            let near = |a: Point2, b: Point2| (a.time_h - b.time_h).abs() <= 1e-9 && (a.cost - b.cost).abs() <= 1e-9;
            let extremes = near(o[0], lo.objectives) && near(*o.last().unwrap(), hi.objectives);
            if !sorted || !extremes {
                shape_failures.push(format!("{preset}/{seed}: sorted={sorted} extremes={extremes}"));
            }
            if matches!(preset, Preset::Instance1 | Preset::Instance2) && o.len() < 4 {
                thin.push(format!("{preset}/{seed}:{}", o.len()));
            }
            feasible_plans.extend(front.points.iter().map(|p| (inst.clone(), p.solution.clone())));
        }
    }
    let pass = shape_failures.is_empty() && thin.is_empty();
    let mut detail = format!(
        "{solved} fronts checked, {unsolvable} draws without any feasible plan; shape/extreme failures: {}; \
         preset-1/2 fronts with fewer than 2 interior points: {} of {}",
        shape_failures.len(),
        thin.len(),
        2 * SEEDS_SHAPE.count()
    );
    if !shape_failures.is_empty() {
        detail += &format!(" [{}]", shape_failures.join("; "));
    }
    if !thin.is_empty() {
        detail += &format!(" [instance/seed:points {}]", thin.join(" "));
    }
    Verdict {
        id: 2,
        name: "front shape",
        pass,
        detail,
    }
}

fn criteria_3_4(front_plans: &[(Instance, RouteSolution)]) -> (Verdict, Verdict) {
    let mut instances: Vec<(String, Instance)> = Preset::ALL.iter().map(|&p| (format!("{p}/1"), preset_instance(p, 1))).collect();
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/testdata/instance_seed42.json");
    instances.push(("golden-42".into(), instance::load(golden).unwrap()));

    let mut disagreements = Vec::new();
    let mut feasible = 0usize;
    let mut total = 0usize;
    let mut worst_balance = 0.0f64;
    let mut balance_failures = 0usize;
    let conserve = |inst: &Instance, sol: &RouteSolution, worst: &mut f64, fails: &mut usize| {
        let trace = model::soc_trace(inst, sol).unwrap();
        let cg = inst.params.capacity * inst.params.mileage;
        let bought: f64 = sol.charge.values().filter(|&&y| y > 1e-9).sum();
        let residual = trace.beta * cg + checker::driven_km(inst, sol) - (inst.params.initial_soc + bought) * cg;
        let rel = residual.abs() / cg;
        *worst = worst.max(rel);
        if rel > 1e-6 {
            *fails += 1;
        }
    };

    for (label, inst) in &instances {
        let paths = enumerate_paths(&inst.graph, 100_000).unwrap();
        let fz = fuzz::Fuzzer::new(inst, paths);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xfeed);
        for _ in 0..FUZZ_PER_INSTANCE {
            let sol = fz.sample(&mut rng);
            let lib = check_feasible(inst, &sol).is_feasible();
            let ours = checker::feasible(inst, &sol);
            total += 1;
            if lib != ours {
                if disagreements.len() < 5 {
                    disagreements.push(format!("{label}: {sol:?} library={lib} independent={ours}"));
                } else {
                    disagreements.push(String::new());
                }
            }
            if lib && ours {
                feasible += 1;
                conserve(inst, &sol, &mut worst_balance, &mut balance_failures);
            }
        }
    }
    for (inst, sol) in front_plans {
        assert!(check_feasible(inst, sol).is_feasible());
        conserve(inst, sol, &mut worst_balance, &mut balance_failures);
    }

    let shown: Vec<&String> = disagreements.iter().filter(|s| !s.is_empty()).collect();
    let c3 = Verdict {
        id: 3,
        name: "constraint suite",
        pass: disagreements.is_empty() && feasible > 0 && feasible < total,
        detail: format!(
            "{total} fuzzed solutions over {} instances ({feasible} feasible); disagreements with the matrix-form checker: {}{}",
            instances.len(),
            disagreements.len(),
            if shown.is_empty() { String::new() } else { format!(" e.g. {}", shown[0]) }
        ),
    };
    let c4 = Verdict {
        id: 4,
        name: "energy conservation",
        pass: balance_failures == 0,
        detail: format!(
            "{} feasible solutions (fuzzed plus front and oracle plans); worst |residual|/(C*gamma) = {worst_balance:.3e}; over 1e-6: {balance_failures}",
            feasible + front_plans.len()
        ),
    };
    (c3, c4)
}

fn evrp(dir: &Path, args: &[&str]) -> (i32, f64) {
    let start = Instant::now();
    let out = Command::new(BIN).args(args).current_dir(dir).output().expect("run evrp");
    let code = out.status.code().unwrap_or(-1);
    if code != 0 && code != 4 {
        panic!("evrp {args:?} exited {code}: {}", String::from_utf8_lossy(&out.stderr));
    }
    (code, start.elapsed().as_secs_f64())
}

fn read_points(path: &Path) -> Vec<(f64, f64)> {
    // Plain split parse, independent of the library reader.
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect()
}

fn pairwise_standing(p: (f64, f64), others: &[(f64, f64)]) -> &'static str {
    if others.iter().any(|&o| beats(o, p)) {
        "dominated"
    } else if others.iter().any(|&o| beats(p, o)) {
        "dominating"
    } else {
        "nondominated"
    }
}

fn criteria_5_6_7(root: &Path) -> (Verdict, Verdict, Verdict) {
    let mut within = [0usize; 2];
    let mut infeasible_best = Vec::new();
    let mut gaps: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    let mut slowest = 0.0f64;
    let mut monotone_failures = Vec::new();
    let mut final_exploration = Vec::new();
    let mut runs = 0;
    let mut disagreements = 0;
    let mut compared_points = 0;
    let mut good_points = 0;
    let mut classes = [0usize; 3];

    for seed in SEEDS_SEARCH {
        let dir = root.join(format!("search-{seed}"));
        fs::create_dir_all(&dir).unwrap();
        let s = seed.to_string();
        evrp(&dir, &["generate", "--preset", "instance1", "--seed", &s, "--out", "inst.json"]);
        let inst = instance::load(dir.join("inst.json")).unwrap();
        evrp(&dir, &["solve", "--instance", "inst.json", "--method", "eps-front", "--out", "front.csv"]);
        let opt = ExactSolver::new(&inst).unwrap().weighted_optimum(Weights::RAW_SUM).unwrap();
        let opt = Weights::RAW_SUM.apply(&opt.objectives);

        for (k, method) in ["ga", "pso"].into_iter().enumerate() {
            let out = format!("{method}.csv");
            let (code, secs) = evrp(
                &dir,
                &[
                    "solve", "--instance", "inst.json", "--method", method, "--pop", "100", "--epochs", "300", "--seed", &s,
                    "--weights", "raw", "--out", &out,
                ],
            );
            slowest = slowest.max(secs);
            runs += 1;
            let history = formats::read_history(fs::File::open(dir.join(format!("{method}_history.csv"))).unwrap()).unwrap();
            let best = history.epochs.last().unwrap().best_fitness;
            if code != 0 || best >= 1e9 {
                infeasible_best.push(format!("{method}/{seed}"));
            }
            if best <= 1.1 * opt {
                within[k] += 1;
            }
            gaps[k].push(format!("{:+.1}%", 100.0 * (best / opt - 1.0)));

            let f: Vec<f64> = history.best_fitness().collect();
            let nonincreasing = f.windows(2).all(|w| w[1] <= w[0]);
            let peak = history
                .epochs
                .iter()
                .fold(None::<&evrp::metaheuristics::EpochRecord>, |b, e| match b {
                    Some(b) if b.diversity >= e.diversity => Some(b),
                    _ => Some(e),
                })
                .unwrap();
            let complementary = history.epochs.iter().all(|e| e.exploitation_pct == 100.0 - e.exploration_pct);
            if !nonincreasing || peak.exploration_pct != 100.0 || !complementary {
                monotone_failures.push(format!("{method}/{seed}"));
            }
            final_exploration.push(history.epochs.last().unwrap().exploration_pct);

            // Dominance classification through the CLI.
            let report = format!("{method}_vs_front.csv");
            evrp(&dir, &["compare", &out, "front.csv", "--out", &report]);
            let a = read_points(&dir.join(&out));
            let b = read_points(&dir.join("front.csv"));
            let rows: Vec<Vec<String>> = fs::read_to_string(dir.join(&report))
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(str::to_string).collect())
                .collect();
            let mut expected = Vec::new();
            expected.extend(a.iter().map(|&p| ("a", pairwise_standing(p, &b))));
            expected.extend(b.iter().map(|&p| ("b", pairwise_standing(p, &a))));
            if rows.len() != expected.len() {
                disagreements += rows.len().abs_diff(expected.len()).max(1);
            }
            for (row, (set, standing)) in rows.iter().zip(&expected) {
                compared_points += 1;
                if row[0] != *set || row[4] != *standing {
                    disagreements += 1;
                }
            }
            let summary = fs::read_to_string(dir.join(format!("{method}_vs_front_summary.csv"))).unwrap();
            let counts: Vec<usize> = summary.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
            let a_dom = expected.iter().filter(|e| e.0 == "a" && e.1 == "dominated").count();
            let b_dom = expected.iter().filter(|e| e.0 == "b" && e.1 == "dominated").count();
            if counts != [a_dom, b_dom, a.len() + b.len() - a_dom - b_dom] {
                disagreements += 1;
            }
            for &(set, standing) in &expected {
                if set == "a" {
                    match standing {
                        "dominated" => classes[0] += 1,
                        "nondominated" => classes[1] += 1,
                        _ => classes[2] += 1,
                    }
                    if standing != "dominated" {
                        good_points += 1;
                    }
                }
            }
        }
    }

    let need = 8;
    let c5 = Verdict {
        id: 5,
        name: "metaheuristic quality",
        pass: within[0] >= need && within[1] >= need && infeasible_best.is_empty() && slowest < 120.0,
        detail: format!(
            "within 10% of the exact (1,1)-weighted optimum: GA {}/10, PSO {}/10; infeasible bests: {}; slowest run {slowest:.2} s; \
             GA gaps [{}], PSO gaps [{}]",
            within[0],
            within[1],
            infeasible_best.len(),
            gaps[0].join(" "),
            gaps[1].join(" ")
        ),
    };
    let mean_final = final_exploration.iter().sum::<f64>() / final_exploration.len() as f64;
    let c6 = Verdict {
        id: 6,
        name: "monotone search",
        pass: monotone_failures.is_empty(),
        detail: format!(
            "{runs} runs; violations of nonincreasing best / 100% exploration at peak diversity / complementary exploitation: {}{}; \
             mean final exploration {mean_final:.1}%",
            monotone_failures.len(),
            if monotone_failures.is_empty() { String::new() } else { format!(" [{}]", monotone_failures.join(" ")) }
        ),
    };
    let c7 = Verdict {
        id: 7,
        name: "dominance comparison",
        pass: disagreements == 0 && good_points >= 1,
        detail: format!(
            "{compared_points} classified points, disagreements with the pairwise scan: {disagreements}; metaheuristic bests \
             dominated/nondominated/dominating: {}/{}/{}",
            classes[0], classes[1], classes[2]
        ),
    };
    (c5, c6, c7)
}

fn manifest_outputs(dir: &Path, manifest: &Path) -> Vec<PathBuf> {
    let text = fs::read_to_string(dir.join(manifest)).unwrap();
    let line = text.lines().find_map(|l| l.strip_prefix("outputs=")).unwrap();
    line.split(',').map(|p| dir.join(p)).collect()
}

fn criterion_8(root: &Path) -> Verdict {
    let dir = root.join("replay");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("plan.json"), r#"{"path": [0, 5], "charge": {"0": 0.3}}"#).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["generate", "--preset", "instance2", "--seed", "5", "--out", "inst.json"],
        vec!["solve", "--instance", "inst.json", "--method", "exact-time", "--out", "t.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "exact-cost", "--out", "c.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "eps-front", "--out", "front.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "eps-front", "--converse", "--delta", "0.5", "--out", "conv.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "oracle", "--grid", "8", "--out", "oracle.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "ga", "--pop", "40", "--epochs", "30", "--seed", "3", "--out", "ga.csv"],
        vec!["solve", "--instance", "inst.json", "--method", "pso", "--pop", "40", "--epochs", "30", "--seed", "3", "--out", "pso.csv"],
        vec!["compare", "ga.csv", "front.csv", "--out", "cmp.csv"],
        vec!["evaluate", "--instance", "inst.json", "--solution", "plan.json", "--out", "eval.json"],
    ];
    let mut manifests = Vec::new();
    for args in &commands {
        evrp(&dir, args);
        let out = args.windows(2).find(|w| w[0] == "--out").map(|w| w[1]).unwrap();
        manifests.push(Path::new(out).with_extension("manifest"));
    }
    let mut checked = 0;
    let mut differing = Vec::new();
    for m in &manifests {
        let outputs = manifest_outputs(&dir, m);
        let before: Vec<Vec<u8>> = outputs.iter().map(|p| fs::read(p).unwrap()).collect();
        for p in &outputs {
            fs::remove_file(p).unwrap();
        }
        evrp(&dir, &["replay", m.to_str().unwrap()]);
        for (p, old) in outputs.iter().zip(&before) {
            checked += 1;
            if fs::read(p).ok().as_ref() != Some(old) {
                differing.push(p.file_name().unwrap().to_string_lossy().into_owned());
            }
        }
    }
    // Same command in a fresh directory gives the same files too.
    let twin = root.join("replay-twin");
    fs::create_dir_all(&twin).unwrap();
    evrp(&twin, &commands[0]);
    checked += 1;
    if fs::read(twin.join("inst.json")).unwrap() != fs::read(dir.join("inst.json")).unwrap() {
        differing.push("inst.json (fresh run)".into());
    }
    Verdict {
        id: 8,
        name: "determinism",
        pass: differing.is_empty(),
        detail: format!(
            "{} commands replayed from manifests, {checked} output files compared byte for byte; differing: {}",
            commands.len(),
            if differing.is_empty() { "none".to_string() } else { differing.join(" ") }
        ),
    }
}

fn main() {
    // Respect the test harness's filter convention loosely: `--list` prints nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let root = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let mut plans = Vec::new();
    let mut verdicts = vec![criterion_1(&mut plans), criterion_2(&mut plans)];
    let (c3, c4) = criteria_3_4(&plans);
    verdicts.extend([c3, c4]);
    let (c5, c6, c7) = criteria_5_6_7(root.path());
    verdicts.extend([c5, c6, c7]);
    verdicts.push(criterion_8(root.path()));
    verdicts.sort_by_key(|v| v.id);

    println!();
    for v in &verdicts {
        println!("criterion {} [{}] {}: {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {}/{} criteria pass ({:.1} s)", verdicts.len() - failed, verdicts.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
