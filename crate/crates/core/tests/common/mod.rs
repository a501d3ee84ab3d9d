#![allow(dead_code)]

use dos_consensus::dos::DoSBudget;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A feasible budget together with the sampling period and generator seed
/// it is exercised with.
pub struct DosCase {
    pub budget: DoSBudget,
    pub delta: f64,
    pub seed: u64,
    pub steps: usize,
}

pub fn dos_corpus(count: usize, seed: u64) -> Vec<DosCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let delta = [0.05, 0.1, 0.2, 0.5][rng.random_range(0..4)];
        let eta = rng.random_range(0.0..4.0);
        let kappa = rng.random_range(0.0..1.5);
        let tau_d = rng.random_range(1.2 * delta..5.0);
        let t = rng.random_range(1.2..25.0);
        let budget = DoSBudget::new(eta, tau_d, kappa, t).unwrap();
        if !budget.is_feasible(delta) {
            continue;
        }
        out.push(DosCase {
            budget,
            delta,
            seed: rng.random(),
            steps: rng.random_range(50..400),
        });
    }
    out
}

use dos_consensus::dos::{generate, verify_signal, DoSSignal};
use dos_consensus::matops::{spectral_radius, Matrix};
use dos_consensus::sim::{audit, run, AuditReport, LeaderSetup, SimConfig, SimTrace};
use dos_consensus::synthesis::{
    gamma_rate, leaderless_design, lf_design, lf_modal_p, modal_j, transient_gain, DesignOptions, DesignReport,
    Plant,
};
use dos_consensus::topology::{Graph, LeaderLinks};

/// Largest closed-loop modal spectral radius a random scenario may have,
/// so the zoom-in factor leaves room to converge within the horizon.
pub const MAX_MODAL_RHO: f64 = 0.9;
pub const MIN_STEPS: usize = 60;
pub const MAX_STEPS: usize = 500;

/// One randomized closed-loop experiment with its design and attack.
pub struct Scenario {
    pub seed: u64,
    pub config: SimConfig,
    /// `1/T + Δ/τ_D` of the budget, and the design's tolerance.
    pub load: f64,
    pub tolerance: f64,
    pub budget: DoSBudget,
}

pub struct Outcome {
    pub scenario: Scenario,
    pub trace: SimTrace,
    pub audit: AuditReport,
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for j in 1..n {
        let i = rng.random_range(0..j);
        edges.push((i, j, rng.random_range(0.5..1.5)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) && rng.random_bool(0.2) {
                edges.push((i, j, rng.random_range(0.5..1.5)));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn random_a(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = rng.random_range(0.85..1.01);
        for j in i + 1..n {
            a[(i, j)] = rng.random_range(-0.1..0.1);
        }
    }
    a
}

fn modal_rho(p: &Plant, g: &Graph, leader: Option<&LeaderLinks>) -> f64 {
    let m = match leader {
        Some(l) => lf_modal_p(p, g, l, 0, 1.0),
        None => modal_j(p, g, 0, 1.0),
    };
    m.and_then(|m| spectral_radius(&m)).unwrap_or(f64::INFINITY)
}

fn design(p: &Plant, g: &Graph, leader: Option<&LeaderLinks>, b: &DoSBudget) -> Option<DesignReport> {
    let opts = DesignOptions::default();
    let d = match leader {
        Some(l) => DesignReport::LeaderFollower(lf_design(p, g, l, b, &opts).ok()?),
        None => DesignReport::Leaderless(leaderless_design(p, g, b, &opts).ok()?),
    };
    d.checks().iter().all(|c| c.passed).then_some(d)
}

/// Attacks each sampling instant in turn whenever the budget still admits
/// it, extending the current interval across consecutive samples.
pub fn greedy_signal(b: &DoSBudget, delta: f64, steps: usize) -> DoSSignal {
    let horizon = steps as f64 * delta;
    let pulse = 0.01 * delta;
    let mut iv: Vec<(f64, f64)> = Vec::new();
    let mut prev_hit = false;
    for k in 1..=steps {
        let t = k as f64 * delta;
        let mut cand = iv.clone();
        match cand.last_mut() {
            Some(last) if prev_hit => last.1 = t + pulse - last.0,
            _ => cand.push((t, pulse)),
        }
        let s = DoSSignal::new(cand.clone()).unwrap();
        prev_hit = verify_signal(&s, b, horizon).passed();
        if prev_hit {
            iv = cand;
        }
    }
    DoSSignal::new(iv).unwrap()
}

/// Number of steps the run can take before `θ` shrinks into the rounding
/// noise of the states, taking every transmission as a success.
fn precision_horizon(d: &DesignReport, range: f64, growth: f64) -> usize {
    let (g1, theta0) = (d.gamma1(), d.theta0_min());
    (0..MAX_STEPS)
        .find(|&k| theta0 * g1.powi(k as i32) * range < 1e-9 * growth.powi(k as i32).max(1.0))
        .unwrap_or(MAX_STEPS)
}

/// Draws one admissible scenario: a random plant, a connected graph, a
/// gain with modal radius at most `MAX_MODAL_RHO`, a budget loading about
/// half of the design's DoS tolerance and a signal generated under it.
pub fn scenario(seed: u64, with_leader: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let agents = rng.random_range(2..=8);
        let n = rng.random_range(1..=4);
        let delta = [0.05, 0.1, 0.2][rng.random_range(0..3)];
        let a = random_a(&mut rng, n);
        let g = random_graph(&mut rng, agents);
        let leader = with_leader.then(|| {
            let mut gains: Vec<f64> =
                (0..agents).map(|_| if rng.random_bool(0.4) { rng.random_range(0.5..1.5) } else { 0.0 }).collect();
            if gains.iter().all(|v| *v == 0.0) {
                gains[rng.random_range(0..agents)] = 1.0;
            }
            LeaderLinks::new(gains).unwrap()
        });
        let sigma = rng.random_range(0.1..1.0);
        let mk = |kappa: f64| {
            Plant::new(a.clone(), Matrix::identity(n), Matrix::identity(n).scale(kappa), delta, 1.0, sigma).unwrap()
        };
        let admissible: Vec<f64> = (1..=40)
            .map(|i| 0.025 * i as f64)
            .filter(|&kappa| modal_rho(&mk(kappa), &g, leader.as_ref()) <= MAX_MODAL_RHO)
            .collect();
        if admissible.is_empty() {
            continue;
        }
        let kappa = admissible[rng.random_range(0..admissible.len())];
        let plant = mk(kappa);
        let Some(free) = design(&plant, &g, leader.as_ref(), &DoSBudget::free()) else {
            continue;
        };

        // Aim the budget at half the tolerance of its own design: the
        // tolerance moves with the loss bound, so iterate to a fixed point.
        let eta = rng.random_range(1.0..3.0);
        let kappa_dos = rng.random_range(0.0..2.0) * delta;
        let mut share = 0.5 * free.dos_tolerance().min(0.5);
        let mut found = None;
        for _ in 0..30 {
            let budget = DoSBudget::new(eta, 2.0 * delta / share, kappa_dos, 2.0 / share).unwrap();
            match design(&plant, &g, leader.as_ref(), &budget) {
                Some(d) if share <= 0.55 * d.dos_tolerance() => {
                    found = Some((budget, d));
                    break;
                }
                Some(d) => share = 0.5 * d.dos_tolerance(),
                None => share *= 0.7,
            }
        }
        let Some((budget, d)) = found else {
            continue;
        };

        let range = (2 * d.r_min() + 1) as f64 * sigma;
        let growth = spectral_radius(&a).unwrap();
        // Enough steps for the certified scale bound C3·γ^k to fall by 1e4,
        // and few enough that θ stays above the rounding floor even if no
        // attack ever lands.
        let rate = gamma_rate(d.gamma1(), d.gamma2(), budget.load(delta));
        let c3 = transient_gain(d.gamma1(), d.gamma2(), budget.kappa, budget.eta, delta);
        let converge = ((1e-4f64.ln() - c3.ln()) / rate.ln()).ceil().max(0.0) as usize;
        let steps = converge.max(MIN_STEPS);
        if steps > MAX_STEPS || steps > precision_horizon(&d, range, growth) {
            continue;
        }

        let mut draw = || (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>();
        let x0: Vec<Vec<f64>> = (0..agents).map(|_| draw()).collect();
        let leader = leader.map(|links| LeaderSetup { links, x0: draw() });
        // Odd seeds face an attacker that claims every sample the budget
        // allows; even seeds a random one.
        let dos: DoSSignal = if seed % 2 == 1 {
            greedy_signal(&budget, delta, steps)
        } else {
            generate(&budget, steps as f64 * delta, rng.random())
        };
        let tolerance = d.dos_tolerance();
        let config = SimConfig::new(plant, g, leader, d, x0, steps, dos).unwrap();
        return Scenario {
            seed,
            load: budget.load(delta),
            tolerance,
            budget,
            config,
        };
    }
}

pub fn execute(s: Scenario) -> Outcome {
    let trace = run(&s.config).unwrap();
    let audit = audit(&trace, &s.config.design).unwrap();
    Outcome { scenario: s, trace, audit }
}
