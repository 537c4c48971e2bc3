//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::time::Instant;

use robust_ot::barycenter::{
    rsbp_schedule, solve_rsbp, solve_rsbp_observed, BarycenterProblem, PotentialFamily,
};
use robust_ot::cli::bench::{bench_iters, mean_ratios, BenchSettings};
use robust_ot::cli::contraction::{max_ratios, run_contraction};
use robust_ot::config::{SolverConfig, StopReason, StopRule};
use robust_ot::diagnostics::trailing_rate;
use robust_ot::divergence::{entropy, generalized_kl};
use robust_ot::gibbs::log_gibbs_marginals;
use robust_ot::lowrank::{solve_nys, LowRankKernel, NysProblem, PointCloud};
use robust_ot::measure::{CostMatrix, DiscreteMeasure, DualPotentials, TransportPlan};
use robust_ot::objective::{entropic_objective_uot, objective_rsot};
use robust_ot::oracle::{oracle_rot_with, oracle_rsbp_with, oracle_rsot_with, OracleOptions};
use robust_ot::rng::{random_weights, stream, uniform_cost, uniform_simplex};
use robust_ot::rot::{rot_schedule, solve_rot, solve_uot, solve_uot_observed};
use robust_ot::rsot::{rsot_schedule, solve_rsot, solve_rsot_observed};

const TAU: f64 = 1.0;
const EPSILONS: [f64; 2] = [1e-2, 1e-3];
const CORPUS: u64 = 20;
const RSBP_CORPUS: u64 = 10;
const RSBP_EPSILON: f64 = 1e-3;

const IDENTITY_TOL: f64 = 1e-6;
const PLAN_AGREEMENT_TOL: f64 = 1e-10;
const ZERO_SUM_TOL: f64 = 1e-12;
const SPREAD_TOL: f64 = 1e-10;
const RATE_SLACK: f64 = 0.05;
const RATE_FLOOR: f64 = 1e-9;
const FIGURE_SLACK: f64 = 0.02;
const BAND: (f64, f64) = (0.015, 0.023);
const NYS_EPSILON: f64 = 1e-2;
const NYS_MAX_RANK: usize = 8;
const PSD_TOL: f64 = 1e-8;
const COLUMN_TOL: f64 = 1e-10;

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

struct Pair {
    cost: CostMatrix,
    a: DiscreteMeasure,
    b: DiscreteMeasure,
}

fn corpus() -> Vec<Pair> {
    (0..CORPUS)
        .map(|k| {
            let n = 2 + (k % 7) as usize;
            let mut rng = stream("corpus", 0, k);
            let cost = uniform_cost(n, 1.0, 50.0, &mut rng);
            let a = uniform_simplex(n, 1e-3, 1.0, &mut rng);
            let b = uniform_simplex(n, 1e-3, 1.0, &mut rng);
            Pair { cost, a, b }
        })
        .collect()
}

fn rsbp_corpus() -> Vec<BarycenterProblem> {
    (0..RSBP_CORPUS)
        .map(|k| {
            let n = 2 + (k % 5) as usize;
            let mut rng = stream("rsbp-corpus", 0, k);
            let costs = vec![uniform_cost(n, 0.01, 1.0, &mut rng), uniform_cost(n, 0.01, 1.0, &mut rng)];
            let measures = vec![uniform_simplex(n, 1e-3, 1.0, &mut rng), uniform_simplex(n, 1e-3, 1.0, &mut rng)];
            BarycenterProblem::new(costs, measures, random_weights(2, &mut rng)).unwrap()
        })
        .collect()
}

fn oracle_opts() -> OracleOptions {
    OracleOptions::default().with_restarts(4)
}

#[test]
fn rsot_meets_epsilon_against_oracle() {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for p in corpus() {
        let oracle = oracle_rsot_with(&p.cost, &p.a, &p.b, TAU, &oracle_opts()).unwrap();
        for eps in EPSILONS {
            let (_, _, report) = solve_rsot(&p.cost, &p.a, &p.b, &SolverConfig::theorem(TAU, eps)).unwrap();
            let gap = report.objective - oracle.objective;
            worst = worst.max(gap / eps);
            if !(gap <= eps && report.guarantee.valid) {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "rsot epsilon guarantee",
        failures == 0 && secs < 30.0,
        &format!("{failures} violations, worst gap/eps {worst:.3e}, {secs:.1} s"),
    );
}

#[test]
fn rot_meets_epsilon_and_matches_normalized_uot() {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut identity = 0.0f64;
    let mut agreement = 0.0f64;
    for p in corpus() {
        let oracle = oracle_rot_with(&p.cost, &p.a, &p.b, TAU, &oracle_opts()).unwrap();
        for eps in EPSILONS {
            let config = SolverConfig::theorem(TAU, eps);
            let (x_rot, _, report) = solve_rot(&p.cost, &p.a, &p.b, &config).unwrap();
            let gap = report.objective - oracle.objective;
            worst = worst.max(gap / eps);
            if !(gap <= eps && report.guarantee.valid) {
                failures += 1;
            }
            let (x_uot, _, _) = solve_uot(&p.cost, &p.a, &p.b, &config).unwrap();
            agreement = agreement.max(x_rot.sup_distance(&x_uot.normalized().unwrap()));

            let eta = report.eta;
            let reference = SolverConfig::manual(TAU, eta, 50_000_000).with_stop(StopRule::DualResidual(1e-13));
            let (x, _, r) = solve_uot(&p.cost, &p.a, &p.b, &reference).unwrap();
            assert_eq!(r.stop_reason, StopReason::DualResidual);
            let g = entropic_objective_uot(&x, &p.cost, &p.a, &p.b, TAU, eta).unwrap();
            let rhs = TAU * (p.a.mass() + p.b.mass());
            identity = identity.max((g + (2.0 * TAU + eta) * x.mass() - rhs).abs() / rhs.abs());
        }
    }
    verdict(
        "rot epsilon guarantee",
        failures == 0 && identity <= IDENTITY_TOL && agreement <= PLAN_AGREEMENT_TOL,
        &format!(
            "{failures} violations, worst gap/eps {worst:.3e}, mass identity {identity:.2e}, plan agreement {agreement:.2e}"
        ),
    );
}

/// Weighted v-sum and column-marginal spread after every v-update.
struct CenteringAudit<'a> {
    problem: &'a BarycenterProblem,
    eta: f64,
    zero_sum: f64,
    spread: f64,
    checked: usize,
}

impl robust_ot::config::Observer<PotentialFamily> for CenteringAudit<'_> {
    fn observe(&mut self, done: usize, state: &PotentialFamily) {
        if done < 2 || done % 2 != 0 {
            return;
        }
        self.zero_sum = self.zero_sum.max(state.weighted_v_sum(self.problem.weights()));
        let cols: Vec<Vec<f64>> = (0..self.problem.m())
            .map(|i| {
                let m = log_gibbs_marginals(&state.u[i], &state.v[i], &self.problem.costs()[i], self.eta).unwrap();
                m.log_col.iter().map(|c| (c - m.log_mass).exp()).collect()
            })
            .collect();
        for c in &cols[1..] {
            for (x, y) in c.iter().zip(&cols[0]) {
                self.spread = self.spread.max((x - y).abs());
            }
        }
        self.checked += 1;
    }
}

#[test]
fn rsbp_meets_epsilon_with_exact_centering() {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut zero_sum = 0.0f64;
    let mut spread = 0.0f64;
    for p in rsbp_corpus() {
        let oracle = oracle_rsbp_with(&p, TAU, &oracle_opts()).unwrap();
        let eta = rsbp_schedule(&p, RSBP_EPSILON, TAU).unwrap().summary().eta;
        let mut audit = CenteringAudit {
            problem: &p,
            eta,
            zero_sum: 0.0,
            spread: 0.0,
            checked: 0,
        };
        let sol = solve_rsbp_observed(&p, &SolverConfig::theorem(TAU, RSBP_EPSILON), &mut audit).unwrap();
        assert!(audit.checked > 0);
        let gap = sol.report.objective - oracle.objective;
        worst = worst.max(gap / RSBP_EPSILON);
        if !(gap <= RSBP_EPSILON && sol.report.guarantee.valid) {
            failures += 1;
        }
        zero_sum = zero_sum.max(audit.zero_sum);
        spread = spread.max(audit.spread);
    }
    verdict(
        "rsbp epsilon guarantee",
        failures == 0 && zero_sum <= ZERO_SUM_TOL && spread <= SPREAD_TOL,
        &format!("{failures} violations, worst gap/eps {worst:.3e}, zero-sum {zero_sum:.2e}, spread {spread:.2e}"),
    );
}

fn pair_error(x: &DualPotentials, r: &DualPotentials) -> f64 {
    x.sup_distance(r)
}

/// Per-2-iteration rate of the iterates toward a run ten times longer.
fn pair_rate(
    solve: impl Fn(&SolverConfig, &mut dyn robust_ot::config::Observer<DualPotentials>) -> DualPotentials,
    eta: f64,
    iterations: usize,
) -> Option<f64> {
    let reference = solve(
        &SolverConfig::manual(TAU, eta, 10 * iterations)
            .with_stop(StopRule::DualResidual(0.0))
            .with_trace_stride(0),
        &mut robust_ot::config::Silent,
    );
    let mut samples = Vec::new();
    let mut obs = |k: usize, s: &DualPotentials| {
        if k % 2 == 0 {
            samples.push((k, pair_error(s, &reference)));
        }
    };
    solve(
        &SolverConfig::manual(TAU, eta, iterations)
            .with_stop(StopRule::DualResidual(0.0))
            .with_trace_stride(0),
        &mut obs,
    );
    trailing_rate(&samples, RATE_FLOOR)
}

#[test]
fn iterates_contract_geometrically() {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut measured = 0;
    let mut failures = 0;
    let mut check = |rate: Option<f64>, eta: f64| {
        if let Some(r) = rate {
            measured += 1;
            let bound = TAU / (TAU + eta);
            worst_excess = worst_excess.max(r - bound);
            if r > bound + RATE_SLACK {
                failures += 1;
            }
        }
    };
    for p in corpus() {
        let n = p.cost.n();
        for eps in EPSILONS {
            let s = rsot_schedule(n, eps, TAU, &p.cost, &p.a, &p.b).unwrap().summary();
            let rate = pair_rate(
                |c, o| solve_rsot_observed(&p.cost, &p.a, &p.b, c, o).unwrap().1,
                s.eta,
                s.k_required,
            );
            check(rate, s.eta);
            let s = rot_schedule(n, eps, TAU, &p.cost, &p.a, &p.b).unwrap().summary();
            let rate = pair_rate(
                |c, o| solve_uot_observed(&p.cost, &p.a, &p.b, c, o).unwrap().1,
                s.eta,
                s.k_required,
            );
            check(rate, s.eta);
        }
    }
    for p in rsbp_corpus() {
        let s = rsbp_schedule(&p, RSBP_EPSILON, TAU).unwrap().summary();
        let config = |k: usize| {
            SolverConfig::manual(TAU, s.eta, k)
                .with_stop(StopRule::DualResidual(0.0))
                .with_trace_stride(0)
        };
        let reference = solve_rsbp(&p, &config(10 * s.k_required)).unwrap().potentials;
        let mut samples = Vec::new();
        let mut obs = |k: usize, st: &PotentialFamily| {
            if k % 2 == 0 {
                samples.push((k, st.sup_distance(&reference)));
            }
        };
        solve_rsbp_observed(&p, &config(s.k_required), &mut obs).unwrap();
        check(trailing_rate(&samples, RATE_FLOOR), s.eta);
    }
    verdict(
        "geometric contraction",
        failures == 0 && measured > 0,
        &format!("{failures} of {measured} rates above bound + {RATE_SLACK}, worst excess {worst_excess:.3e}"),
    );
}

#[test]
fn bench_iteration_ratios_decrease() {
    let start = Instant::now();
    let settings = BenchSettings::rsot_sweep();
    let rows = bench_iters(&settings).unwrap();
    let within = rows.iter().all(|r| r.k_emp.is_some_and(|k| k <= r.k_theory));
    let means = mean_ratios(&rows, &settings.epsilons);
    let values: Vec<f64> = means.iter().map(|(_, m)| m.unwrap_or(f64::NAN)).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    let listing: Vec<String> = means.iter().map(|(e, m)| format!("{e:e}:{:.2}", m.unwrap_or(f64::NAN))).collect();
    verdict(
        "bench iteration ratios",
        within && decreasing && secs < 600.0,
        &format!("k_emp <= k_theory on all {} rows: {within}; mean ratios {}; {secs:.0} s", rows.len(), listing.join(" ")),
    );
}

#[test]
fn rsbp_cost_band() {
    let n = 10;
    let opts = OracleOptions {
        max_n_barycenter: n,
        ..OracleOptions::default().with_restarts(2)
    };
    let values: Vec<f64> = (0..10u64)
        .map(|seed| {
            let mut rng = stream("rsbp-band", seed, 0);
            let costs = vec![uniform_cost(n, 0.01, 0.1, &mut rng), uniform_cost(n, 0.01, 0.1, &mut rng)];
            let measures = vec![uniform_simplex(n, 0.0, 1.0, &mut rng), uniform_simplex(n, 0.0, 1.0, &mut rng)];
            let p = BarycenterProblem::new(costs, measures, random_weights(2, &mut rng)).unwrap();
            oracle_rsbp_with(&p, TAU, &opts).unwrap().objective
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    verdict(
        "rsbp cost band",
        mean >= BAND.0 && mean <= BAND.1,
        &format!("mean optimal cost {mean:.5} over {} seeds, band [{}, {}]", values.len(), BAND.0, BAND.1),
    );
}

#[test]
fn contraction_figure_within_bound() {
    let (tau, eta) = (0.1, 0.01);
    let rows = run_contraction(&[2, 3, 10], 10, tau, eta, 5, 100, 0).unwrap();
    let (uv, uu) = max_ratios(&rows, 2);
    let bound = tau / (tau + eta);
    let others = [3, 10].iter().all(|m| rows.iter().any(|r| r.m == *m));
    let ok = matches!((uv, uu), (Some(x), Some(y)) if x <= bound + FIGURE_SLACK && y <= bound + FIGURE_SLACK);
    verdict(
        "contraction figure",
        ok && others,
        &format!(
            "m=2 max R_uv {:.5}, max R_uu {:.5}, bound {bound:.5}; m=3,10 emitted: {others}",
            uv.unwrap_or(f64::NAN),
            uu.unwrap_or(f64::NAN)
        ),
    );
}

fn two_clusters(n: usize, seed: u64) -> (PointCloud, DiscreteMeasure, DiscreteMeasure) {
    use rand::Rng;
    let mut rng = stream("nys-cloud", seed, 0);
    let points = (0..n)
        .map(|i| {
            let c = if i % 2 == 0 { 0.02 } else { -0.02 };
            vec![c + 1e-7 * (rng.random::<f64>() - 0.5), c + 1e-7 * (rng.random::<f64>() - 0.5)]
        })
        .collect();
    let a = uniform_simplex(n, 0.1, 1.0, &mut rng);
    let b = uniform_simplex(n, 0.1, 1.0, &mut rng);
    (PointCloud::new(points).unwrap(), a, b)
}

#[test]
fn nystrom_meets_epsilon_at_low_rank() {
    let mut failures = Vec::new();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut max_rank = 0;
    let mut asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for seed in 0..5 {
        let (cloud, a, b) = two_clusters(40, seed);
        let sol = solve_nys(&cloud, &a, &b, NysProblem::Rsot, NYS_EPSILON, TAU, seed).unwrap();
        let cost = cloud.squared_distances();
        let oracle = oracle_rsot_with(&cost, &a, &b, TAU, &oracle_opts().with_max_n(40)).unwrap();
        let f = objective_rsot(&sol.plan, &cost, &a, TAU).unwrap();
        let gap = f - oracle.objective;
        worst_gap = worst_gap.max(gap);
        max_rank = max_rank.max(sol.rank);
        let landmarks = {
            let (k, _) = robust_ot::lowrank::adaptive_nystrom(&cloud, sol.report.eta, sol.budget.threshold, seed).unwrap();
            k.landmarks().to_vec()
        };
        let k = LowRankKernel::from_landmarks(&cloud, &landmarks, sol.report.eta).unwrap();
        let m = k.materialize();
        asym = asym.max((&m - m.transpose()).abs().max());
        let sym = (&m + m.transpose()) * 0.5;
        min_eig = min_eig.min(sym.symmetric_eigenvalues().min());
        if !(gap <= NYS_EPSILON) || sol.rank > NYS_MAX_RANK || sol.dense_fallback {
            failures.push(seed);
        }
    }
    verdict(
        "nystrom end to end",
        failures.is_empty() && asym <= PSD_TOL && min_eig >= -PSD_TOL,
        &format!(
            "failed seeds {failures:?}, worst gap {worst_gap:.2e}, max rank {max_rank}, asymmetry {asym:.1e}, min eigenvalue {min_eig:.1e}"
        ),
    );
}

#[test]
fn core_properties_hold() {
    let mut rng = stream("core-properties", 0, 0);
    let mut kl_ok = true;
    let mut entropy_ok = true;
    for k in 0..1000u64 {
        let n = 2 + (k % 15) as usize;
        let x = uniform_simplex(n, 0.0, 1.0, &mut rng);
        let y = uniform_simplex(n, 0.0, 1.0, &mut rng);
        kl_ok &= generalized_kl(x.weights(), y.weights()).unwrap() >= 0.0;
        kl_ok &= generalized_kl(x.weights(), x.weights()).unwrap() == 0.0;
        let plan = uniform_simplex(n * n, 0.0, 1.0, &mut rng);
        let h = entropy(&TransportPlan::new(n, plan.weights().to_vec()).unwrap());
        entropy_ok &= h >= 1.0 - 1e-12 && h <= 2.0 * (n as f64).ln() + 1.0 + 1e-12;
    }

    let mut rng = stream("core-overflow", 0, 0);
    let cost = uniform_cost(6, 1.0, 50.0, &mut rng);
    let a = uniform_simplex(6, 1e-3, 1.0, &mut rng);
    let b = uniform_simplex(6, 1e-3, 1.0, &mut rng);
    let eta = cost.max_entry() / 1e5;
    let config = SolverConfig::manual(TAU, eta, 2000);
    let (x1, p1, r1) = solve_rsot(&cost, &a, &b, &config).unwrap();
    let (x2, p2, r2) = solve_rot(&cost, &a, &b, &config).unwrap();
    let finite = |x: &TransportPlan, p: &DualPotentials, f: f64| {
        x.entries().iter().all(|v| v.is_finite()) && p.is_finite() && f.is_finite()
    };
    let overflow_ok = finite(&x1, &p1, r1.objective) && finite(&x2, &p2, r2.objective);

    let mut column = 0.0f64;
    for p in corpus().iter().take(5) {
        let mut obs = |done: usize, s: &DualPotentials| {
            if done >= 2 && done % 2 == 0 {
                let m = log_gibbs_marginals(&s.u, &s.v, &p.cost, 0.05).unwrap();
                for (c, bj) in m.log_col.iter().zip(p.b.weights()) {
                    column = column.max((c.exp() - bj).abs());
                }
            }
        };
        solve_rsot_observed(&p.cost, &p.a, &p.b, &SolverConfig::manual(TAU, 0.05, 200), &mut obs).unwrap();
    }
    verdict(
        "core properties",
        kl_ok && entropy_ok && overflow_ok && column <= COLUMN_TOL,
        &format!("kl {kl_ok}, entropy bounds {entropy_ok}, overflow-free at C/eta=1e5 {overflow_ok}, column defect {column:.1e}"),
    );
}
