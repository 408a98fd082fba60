//! Configuration search: pick the feasible configuration the learnt map
//! rates best for a given instance.
//!
//! All formulations are solved exactly by walking the enumerated feasible
//! list. For the PaO objectives the performance variable `r` enters
//! affinely, so its optimum sits at an endpoint of `[0,1]` and is found in
//! closed form. For PaI the objective is smooth but not concave in `r`; it is
//! maximized on a uniform grid and the best grid point is polished with a
//! golden-section search at the chosen configuration.
//!
//! Ties: the first configuration in the feasible list wins (the list from
//! [`enumerate_feasible`](crate::config_space::enumerate_feasible) is in
//! lexicographic order). For PaO, `r = 1` wins a zero slope; for PaI the
//! smallest `r` wins.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config_space::{Configuration, ConstraintSystem};
use crate::error::{Error, Result};
use crate::logreg::{log_sigmoid, sigmoid, LinearModel, MultiOutputModel};

pub const DEFAULT_R_GRID_POINTS: usize = 101;
pub const GOLDEN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// `max σ(z(c))`.
    PaoDirect,
    /// `max r ln σ(z) + (1 − r) ln(1 − σ(z)) + r`.
    PaoLikelihood,
    /// `max r ln σ(z) + (1 − r)(1 − ln σ(z)) + r`: the likelihood objective
    /// with `1 − ln σ` in place of `ln(1 − σ)`. Kept for comparison; its
    /// slope in `r` is never positive, so it always settles on `r = 0`.
    PaoLikelihoodLiteral,
    /// `max r σ(z) + (1 − r)(1 − σ(z))`.
    PaoWeighted,
    /// `max Σ_j c_j σ_j(r) + (1 − c_j)(1 − σ_j(r))`.
    Pai,
}

impl Formulation {
    pub const ALL: [Formulation; 5] = [
        Formulation::PaoDirect,
        Formulation::PaoLikelihood,
        Formulation::PaoLikelihoodLiteral,
        Formulation::PaoWeighted,
        Formulation::Pai,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::PaoDirect => "pao-direct",
            Formulation::PaoLikelihood => "pao-likelihood",
            Formulation::PaoLikelihoodLiteral => "pao-likelihood-literal",
            Formulation::PaoWeighted => "pao-weighted",
            Formulation::Pai => "pai",
        }
    }

    pub fn is_pao(self) -> bool {
        !matches!(self, Formulation::Pai)
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown formulation `{s}`")))
    }
}

/// The learnt map a problem is built on.
#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    Pao(&'a LinearModel),
    Pai(&'a MultiOutputModel),
}

#[derive(Debug, Clone)]
pub struct CsspProblem<'a> {
    formulation: Formulation,
    model: ModelRef<'a>,
    features: &'a [f64],
    feasible: &'a [Configuration],
    constraints: &'a ConstraintSystem,
    r_grid_points: usize,
}

impl<'a> CsspProblem<'a> {
    /// Checks model/formulation compatibility and dimensions: a PaO model
    /// takes `t + s` inputs, a PaI model `t + 1` inputs and `s` outputs.
    pub fn new(
        formulation: Formulation,
        model: ModelRef<'a>,
        features: &'a [f64],
        feasible: &'a [Configuration],
        constraints: &'a ConstraintSystem,
    ) -> Result<Self> {
        let s = constraints.columns();
        if feasible.is_empty() {
            return Err(Error::EmptyFeasibleSet);
        }
        if let Some(c) = feasible.iter().find(|c| c.len() != s) {
            return Err(Error::Dimension {
                expected: s,
                found: c.len(),
            });
        }
        let t = features.len();
        match (formulation.is_pao(), model) {
            (true, ModelRef::Pao(m)) => {
                if m.input_dim() != t + s {
                    return Err(Error::Dimension {
                        expected: t + s,
                        found: m.input_dim(),
                    });
                }
            }
            (false, ModelRef::Pai(m)) => {
                if m.input_dim() != t + 1 {
                    return Err(Error::Dimension {
                        expected: t + 1,
                        found: m.input_dim(),
                    });
                }
                if m.output_dim() != s {
                    return Err(Error::Dimension {
                        expected: s,
                        found: m.output_dim(),
                    });
                }
            }
            (true, ModelRef::Pai(_)) => {
                return Err(Error::Incompatible(format!(
                    "{formulation} needs a single-output (PaO) model"
                )))
            }
            (false, ModelRef::Pao(_)) => {
                return Err(Error::Incompatible(format!(
                    "{formulation} needs a multi-output (PaI) model"
                )))
            }
        }
        Ok(Self {
            formulation,
            model,
            features,
            feasible,
            constraints,
            r_grid_points: DEFAULT_R_GRID_POINTS,
        })
    }

    pub fn with_r_grid_points(mut self, points: usize) -> Self {
        self.r_grid_points = points;
        self
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn feasible(&self) -> &'a [Configuration] {
        self.feasible
    }

    pub fn features(&self) -> &'a [f64] {
        self.features
    }

    fn pao_model(&self) -> &'a LinearModel {
        match self.model {
            ModelRef::Pao(m) => m,
            ModelRef::Pai(_) => unreachable!("checked in CsspProblem::new"),
        }
    }

    fn pai_model(&self) -> &'a MultiOutputModel {
        match self.model {
            ModelRef::Pai(m) => m,
            ModelRef::Pao(_) => unreachable!("checked in CsspProblem::new"),
        }
    }

    /// `z(c) = w·(f̄, c) + b` for every feasible configuration.
    pub fn pao_scores(&self) -> Vec<f64> {
        let m = self.pao_model();
        let t = self.features.len();
        let (wf, wc) = m.weights.split_at(t);
        let base: f64 = wf.iter().zip(self.features).map(|(w, f)| w * f).sum::<f64>() + m.bias;
        self.feasible
            .iter()
            .map(|c| {
                base + wc
                    .iter()
                    .zip(c.bits())
                    .filter(|(_, &b)| b == 1)
                    .map(|(w, _)| w)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Per-output `(offset, slope)` so that output `j` is `σ(offset_j + slope_j·r)`.
    pub fn pai_lines(&self) -> Vec<(f64, f64)> {
        let m = self.pai_model();
        let t = self.features.len();
        m.outputs()
            .iter()
            .map(|o| {
                let offset = o.weights[..t]
                    .iter()
                    .zip(self.features)
                    .map(|(w, f)| w * f)
                    .sum::<f64>()
                    + o.bias;
                (offset, o.weights[t])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsspSolution {
    pub config: Configuration,
    /// Position of `config` in the problem's feasible list.
    pub index: usize,
    pub r: f64,
    pub objective: f64,
    pub formulation: Formulation,
    /// `σ(z(c*))` for the PaO formulations.
    pub predicted: Option<f64>,
}

/// Objective of a PaO formulation at `(z, r)`.
pub fn pao_objective(formulation: Formulation, z: f64, r: f64) -> f64 {
    match formulation {
        Formulation::PaoDirect => sigmoid(z),
        Formulation::PaoLikelihood => r * log_sigmoid(z) + (1.0 - r) * log_sigmoid(-z) + r,
        Formulation::PaoLikelihoodLiteral => {
            let ls = log_sigmoid(z);
            r * ls + (1.0 - r) * (1.0 - ls) + r
        }
        Formulation::PaoWeighted => {
            let s = sigmoid(z);
            r * s + (1.0 - r) * (1.0 - s)
        }
        Formulation::Pai => panic!("pao_objective called with the PaI formulation"),
    }
}

/// Closed-form `r*` for the PaO formulations: the objective is affine in `r`,
/// so `r* = 1` when the slope is nonnegative and `0` otherwise.
pub fn pao_optimal_r(formulation: Formulation, z: f64) -> f64 {
    let slope = match formulation {
        Formulation::PaoDirect => return sigmoid(z),
        // ln σ(z) − ln(1 − σ(z)) + 1 = z + 1
        Formulation::PaoLikelihood => z + 1.0,
        Formulation::PaoLikelihoodLiteral => 2.0 * log_sigmoid(z),
        Formulation::PaoWeighted => 2.0 * sigmoid(z) - 1.0,
        Formulation::Pai => panic!("pao_optimal_r called with the PaI formulation"),
    };
    if slope >= 0.0 {
        1.0
    } else {
        0.0
    }
}

fn pao_solve(p: &CsspProblem<'_>, expected: Formulation) -> Result<CsspSolution> {
    if p.formulation != expected {
        return Err(Error::Incompatible(format!(
            "problem is {}, solver is {expected}",
            p.formulation
        )));
    }
    let scores = p.pao_scores();
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, &z) in scores.iter().enumerate() {
        let r = pao_optimal_r(expected, z);
        let obj = pao_objective(expected, z, r);
        if best.is_none_or(|(_, _, b)| obj > b) {
            best = Some((i, r, obj));
        }
    }
    let (index, r, objective) = best.ok_or(Error::EmptyFeasibleSet)?;
    finish(
        p,
        CsspSolution {
            config: p.feasible[index].clone(),
            index,
            r,
            objective,
            formulation: expected,
            predicted: Some(sigmoid(scores[index])),
        },
    )
}

fn finish(p: &CsspProblem<'_>, solution: CsspSolution) -> Result<CsspSolution> {
    if let Some(row) = p.constraints.first_violation(&solution.config)? {
        return Err(Error::Data(format!(
            "configuration {} violates constraint `{}`",
            solution.config,
            p.constraints.labels()[row]
        )));
    }
    Ok(solution)
}

/// `argmax σ(z(c))`; `r` is reported as the predicted performance.
pub fn solve_pao_direct(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    pao_solve(p, Formulation::PaoDirect)
}

pub fn solve_pao_likelihood(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    pao_solve(p, Formulation::PaoLikelihood)
}

pub fn solve_pao_likelihood_literal(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    pao_solve(p, Formulation::PaoLikelihoodLiteral)
}

pub fn solve_pao_weighted(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    pao_solve(p, Formulation::PaoWeighted)
}

/// PaI objective of configuration `c` at performance level `r`.
pub fn pai_objective(lines: &[(f64, f64)], c: &Configuration, r: f64) -> f64 {
    lines
        .iter()
        .zip(c.bits())
        .map(|(&(a, v), &bit)| {
            let s = sigmoid(a + v * r);
            if bit == 1 {
                s
            } else {
                1.0 - s
            }
        })
        .sum()
}

/// Maximizes `f` on `[lo, hi]` by golden-section search; returns `(x, f(x))`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

pub fn solve_pai(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    if p.formulation != Formulation::Pai {
        return Err(Error::Incompatible(format!(
            "problem is {}, solver is pai",
            p.formulation
        )));
    }
    let points = p.r_grid_points;
    if points < 2 {
        return Err(Error::Argument(format!("r grid needs at least 2 points, got {points}")));
    }
    let lines = p.pai_lines();
    let step = 1.0 / (points - 1) as f64;

    // (objective, config index, grid index); larger objective wins, then the
    // smaller config index, then the smaller r.
    let mut best: Option<(f64, usize, usize)> = None;
    let mut gain = vec![0.0; lines.len()];
    for g in 0..points {
        let r = g as f64 * step;
        let mut base = 0.0;
        for (gj, &(a, v)) in gain.iter_mut().zip(&lines) {
            let s = sigmoid(a + v * r);
            base += 1.0 - s;
            *gj = 2.0 * s - 1.0;
        }
        for (i, c) in p.feasible.iter().enumerate() {
            let obj = base
                + gain
                    .iter()
                    .zip(c.bits())
                    .filter(|(_, &b)| b == 1)
                    .map(|(gj, _)| gj)
                    .sum::<f64>();
            let better = match best {
                None => true,
                Some((b, bi, _)) => obj > b || (obj == b && i < bi),
            };
            if better {
                best = Some((obj, i, g));
            }
        }
    }
    let (_, index, g) = best.ok_or(Error::EmptyFeasibleSet)?;
    let config = &p.feasible[index];
    let grid_r = g as f64 * step;
    let grid_obj = pai_objective(&lines, config, grid_r);

    let lo = if g == 0 { 0.0 } else { grid_r - step };
    let hi = if g + 1 == points { 1.0 } else { grid_r + step };
    let (ref_r, ref_obj) = golden_section_max(|r| pai_objective(&lines, config, r), lo, hi, GOLDEN_TOLERANCE);
    let (r, objective) = if ref_obj > grid_obj {
        (ref_r, ref_obj)
    } else {
        (grid_r, grid_obj)
    };

    finish(
        p,
        CsspSolution {
            config: config.clone(),
            index,
            r,
            objective,
            formulation: Formulation::Pai,
            predicted: None,
        },
    )
}

/// Solves `p` with the solver matching its formulation.
pub fn solve(p: &CsspProblem<'_>) -> Result<CsspSolution> {
    match p.formulation {
        Formulation::PaoDirect => solve_pao_direct(p),
        Formulation::PaoLikelihood => solve_pao_likelihood(p),
        Formulation::PaoLikelihoodLiteral => solve_pao_likelihood_literal(p),
        Formulation::PaoWeighted => solve_pao_weighted(p),
        Formulation::Pai => solve_pai(p),
    }
}

/// Margin of the direct PaI formulation at one value of `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginProbe {
    pub r: f64,
    /// `min_j min(σ_j(r), 1 − σ_j(r))`; may underflow to 0 for huge scores.
    pub margin: f64,
    /// `ln` of the margin, `−softplus(max_j |z_j(r)|)`; finite for every
    /// finite `r`, which is what certifies the margin is strictly positive.
    pub log_margin: f64,
}

/// Certificate that requiring every output to equal its bit,
/// `c_j = σ_j(r)` with `c ∈ {0,1}^s`, has no solution: a sigmoid never
/// reaches 0 or 1, so the margin to the nearest binary value stays positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PaiInfeasible {
    lines: Vec<(f64, f64)>,
    pub probes: Vec<MarginProbe>,
}

impl PaiInfeasible {
    pub fn probe(&self, r: f64) -> MarginProbe {
        probe_lines(&self.lines, r)
    }

    pub fn min_log_margin(&self) -> f64 {
        self.probes.iter().map(|p| p.log_margin).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for PaiInfeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "infeasible: no r makes every output exactly 0 or 1")?;
        for p in &self.probes {
            write!(f, "; margin(r={}) = {:e} (ln {:.6})", p.r, p.margin, p.log_margin)?;
        }
        Ok(())
    }
}

fn probe_lines(lines: &[(f64, f64)], r: f64) -> MarginProbe {
    let worst = lines.iter().map(|&(a, v)| libm::fabs(a + v * r)).fold(0.0, f64::max);
    // min(σ(z), 1 − σ(z)) = σ(−|z|)
    MarginProbe {
        r,
        margin: sigmoid(-worst),
        log_margin: log_sigmoid(-worst),
    }
}

pub fn pai_direct_feasibility(model: &MultiOutputModel, features: &[f64]) -> Result<PaiInfeasible> {
    let t = features.len();
    if model.input_dim() != t + 1 {
        return Err(Error::Dimension {
            expected: t + 1,
            found: model.input_dim(),
        });
    }
    let lines: Vec<(f64, f64)> = model
        .outputs()
        .iter()
        .map(|o| {
            let offset = o.weights[..t].iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + o.bias;
            (offset, o.weights[t])
        })
        .collect();
    let probes = [0.0, 0.5, 1.0].iter().map(|&r| probe_lines(&lines, r)).collect();
    Ok(PaiInfeasible { lines, probes })
}

/// Human-readable one-line summary of a solution.
pub fn describe(solution: &CsspSolution) -> String {
    format!(
        "{} c*={} r*={} objective={}",
        solution.formulation, solution.config, solution.r, solution.objective
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{build_constraints, enumerate_feasible, LinearInequality, Parameter, ParameterSchema};
    use approx::assert_relative_eq;

    fn toy() -> (ParameterSchema, ConstraintSystem, Vec<Configuration>) {
        let schema = ParameterSchema::new(vec![Parameter::numbered("p1", 2), Parameter::numbered("p2", 3)]).unwrap();
        let cs = build_constraints(&schema, &[]).unwrap();
        let feasible = enumerate_feasible(&schema, &cs).unwrap();
        (schema, cs, feasible)
    }

    fn r_grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| i as f64 / (n - 1) as f64)
    }

    #[test]
    fn direct_singleton_and_zero_model() {
        let (_, cs, feasible) = toy();
        let m = LinearModel::new(vec![0.5, 0.0, 1.0, -1.0, 0.3, 0.2], 0.1).unwrap();
        let f = [2.0];
        let one = &feasible[4..5];
        let p = CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&m), &f, one, &cs).unwrap();
        let sol = solve_pao_direct(&p).unwrap();
        assert_eq!(sol.config, feasible[4]);
        let mut x = vec![2.0];
        x.extend(feasible[4].to_f64());
        let expected = sigmoid(m.score(&x).unwrap());
        assert_relative_eq!(sol.objective, expected, epsilon = 1e-15);

        let zero = LinearModel::new(vec![0.0; 6], 0.7).unwrap();
        let p = CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&zero), &f, &feasible, &cs).unwrap();
        let sol = solve_pao_direct(&p).unwrap();
        assert_eq!(sol.index, 0);
        assert_relative_eq!(sol.objective, sigmoid(0.7), epsilon = 1e-15);
    }

    #[test]
    fn direct_matches_exhaustive_evaluation() {
        let (_, cs, feasible) = toy();
        let m = LinearModel::new(vec![0.3, -0.4, 0.9, 0.1, -1.1, 0.6], -0.2).unwrap();
        let f = [0.8];
        let p = CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&m), &f, &feasible, &cs).unwrap();
        let sol = solve_pao_direct(&p).unwrap();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in feasible.iter().enumerate() {
            let mut x = vec![0.8];
            x.extend(c.to_f64());
            let v = m.predict(&x).unwrap();
            if v > best.1 {
                best = (i, v);
            }
        }
        assert_eq!(sol.index, best.0);
        assert_relative_eq!(sol.objective, best.1, epsilon = 1e-15);
    }

    fn single_config_problem<'a>(
        formulation: Formulation,
        m: &'a LinearModel,
        cs: &'a ConstraintSystem,
        feasible: &'a [Configuration],
    ) -> CsspProblem<'a> {
        CsspProblem::new(formulation, ModelRef::Pao(m), &[], feasible, cs).unwrap()
    }

    #[test]
    fn likelihood_slope_rule() {
        let (_, cs, feasible) = toy();
        let one = &feasible[0..1];
        // z = bias, since c = [1,0,1,0,0] gets zero weights.
        for (bias, r_star, objective) in [
            (0.0, 1.0, 0.306_852_819_440_054_7),
            (-10.0, 0.0, -4.539_889_921_686_464e-5),
        ] {
            let m = LinearModel::new(vec![0.0; 5], bias).unwrap();
            let p = single_config_problem(Formulation::PaoLikelihood, &m, &cs, one);
            let sol = solve_pao_likelihood(&p).unwrap();
            assert_eq!(sol.r, r_star);
            assert_relative_eq!(sol.objective, objective, epsilon = 1e-12);
            let grid_best = r_grid(1001)
                .map(|r| pao_objective(Formulation::PaoLikelihood, bias, r))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(sol.objective >= grid_best - 1e-12);
        }
        // Exact slope tie at z = −1 resolves to r* = 1.
        assert_eq!(pao_optimal_r(Formulation::PaoLikelihood, -1.0), 1.0);

        let zero = LinearModel::zeros(5);
        let p = CsspProblem::new(Formulation::PaoLikelihood, ModelRef::Pao(&zero), &[], &feasible, &cs).unwrap();
        let sol = solve(&p).unwrap();
        assert_eq!((sol.index, sol.r), (0, 1.0));
    }

    #[test]
    fn literal_likelihood_always_picks_r_zero() {
        for z in [-5.0, 0.0, 3.0] {
            assert_eq!(pao_optimal_r(Formulation::PaoLikelihoodLiteral, z), 0.0);
        }
        assert_relative_eq!(
            pao_objective(Formulation::PaoLikelihoodLiteral, 0.0, 0.0),
            1.0 - 0.5f64.ln()
        );
    }

    /// Two configurations whose scores are `logit(a)` and `logit(b)`.
    fn two_config(a: f64, b: f64) -> (LinearModel, ConstraintSystem, Vec<Configuration>) {
        let schema = ParameterSchema::new(vec![Parameter::numbered("p", 2)]).unwrap();
        let cs = build_constraints(&schema, &[]).unwrap();
        let feasible = enumerate_feasible(&schema, &cs).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        (LinearModel::new(vec![logit(a), logit(b)], 0.0).unwrap(), cs, feasible)
    }

    #[test]
    fn weighted_rule() {
        let (m, cs, feasible) = two_config(0.8, 0.3);
        let p = CsspProblem::new(Formulation::PaoWeighted, ModelRef::Pao(&m), &[], &feasible, &cs).unwrap();
        let sol = solve_pao_weighted(&p).unwrap();
        assert_eq!((sol.index, sol.r), (0, 1.0));
        assert_relative_eq!(sol.objective, 0.8, epsilon = 1e-12);

        let (m, cs, feasible) = two_config(0.6, 0.3);
        let p = CsspProblem::new(Formulation::PaoWeighted, ModelRef::Pao(&m), &[], &feasible, &cs).unwrap();
        let sol = solve_pao_weighted(&p).unwrap();
        assert_eq!((sol.index, sol.r), (1, 0.0));
        assert_relative_eq!(sol.objective, 0.7, epsilon = 1e-12);
        assert_relative_eq!(sol.predicted.unwrap(), 0.3, epsilon = 1e-12);
        let z = m.weights[1];
        let grid_best = r_grid(1001)
            .map(|r| pao_objective(Formulation::PaoWeighted, z, r))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(sol.objective >= grid_best - 1e-12);

        let (m, cs, feasible) = two_config(0.5, 0.5);
        let p = CsspProblem::new(Formulation::PaoWeighted, ModelRef::Pao(&m), &[], &feasible, &cs).unwrap();
        let sol = solve_pao_weighted(&p).unwrap();
        assert_eq!((sol.index, sol.r), (0, 1.0));
        assert_relative_eq!(sol.objective, 0.5, epsilon = 1e-12);
    }

    fn pai_model(weights: &[(f64, f64, f64)]) -> MultiOutputModel {
        // (feature weight, r weight, bias) per output, t = 1
        MultiOutputModel::new(
            weights
                .iter()
                .map(|&(wf, wr, b)| LinearModel::new(vec![wf, wr], b).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pai_increasing_output_pushes_r_to_one() {
        let schema = ParameterSchema::new(vec![Parameter::numbered("p", 2)]).unwrap();
        // Force c = [0, 1] with an extra row.
        let cs = build_constraints(
            &schema,
            &[LinearInequality::new(
                "off",
                vec![crate::config_space::Term::new("p", "0", 1)],
                0,
            )],
        )
        .unwrap();
        let feasible = enumerate_feasible(&schema, &cs).unwrap();
        assert_eq!(feasible.len(), 1);
        let m = pai_model(&[(0.0, -0.5, 0.0), (0.2, 2.0, -0.3)]);
        let f = [1.0];
        let p = CsspProblem::new(Formulation::Pai, ModelRef::Pai(&m), &f, &feasible, &cs).unwrap();
        let sol = solve_pai(&p).unwrap();
        assert_eq!(sol.r, 1.0);
    }

    #[test]
    fn pai_constant_in_r_picks_zero() {
        let (_, cs, feasible) = toy();
        let m = pai_model(&[
            (0.1, 0.0, 0.2),
            (-0.3, 0.0, 0.0),
            (0.5, 0.0, -1.0),
            (0.0, 0.0, 0.4),
            (1.0, 0.0, 0.0),
        ]);
        let f = [0.5];
        let p = CsspProblem::new(Formulation::Pai, ModelRef::Pai(&m), &f, &feasible, &cs).unwrap();
        let sol = solve_pai(&p).unwrap();
        assert_eq!(sol.r, 0.0);
    }

    #[test]
    fn pai_matches_fine_grid() {
        let (_, cs, feasible) = toy();
        let m = pai_model(&[
            (0.7, -1.3, 0.2),
            (-0.4, 2.1, -0.5),
            (0.9, 0.6, -1.0),
            (0.2, -2.4, 0.4),
            (-1.0, 1.5, 0.3),
        ]);
        let f = [0.25];
        let p = CsspProblem::new(Formulation::Pai, ModelRef::Pai(&m), &f, &feasible, &cs).unwrap();
        let sol = solve_pai(&p).unwrap();
        let lines = p.pai_lines();
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, c) in feasible.iter().enumerate() {
            for r in r_grid(10001) {
                let v = pai_objective(&lines, c, r);
                if v > best.0 {
                    best = (v, i);
                }
            }
        }
        assert_eq!(sol.index, best.1);
        assert!((sol.objective - best.0).abs() <= 1e-4);
        assert!(sol.objective >= best.0 - 1e-9);
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3141) * (x - 0.3141), 0.0, 1.0, 1e-8);
        assert!((x - 0.3141).abs() < 1e-7);
        assert!(fx <= 0.0 && fx > -1e-13);
    }

    #[test]
    fn pai_direct_is_infeasible() {
        let zero = MultiOutputModel::new(vec![LinearModel::zeros(3); 4]).unwrap();
        let cert = pai_direct_feasibility(&zero, &[1.0, 2.0]).unwrap();
        assert_eq!(cert.probes.len(), 3);
        for p in &cert.probes {
            assert_eq!(p.margin, 0.5);
        }
        let big = MultiOutputModel::new(vec![LinearModel::new(vec![300.0, -250.0, 900.0], 40.0).unwrap()]).unwrap();
        let cert = pai_direct_feasibility(&big, &[1.0, 1.0]).unwrap();
        for r in [-1e6, -1.0, 0.0, 1.0, 1e6] {
            let probe = cert.probe(r);
            assert!(probe.log_margin.is_finite());
            assert!(probe.log_margin < 0.0);
        }
        assert!(pai_direct_feasibility(&big, &[1.0]).is_err());
    }

    #[test]
    fn incompatible_models_are_rejected() {
        let (_, cs, feasible) = toy();
        let pao = LinearModel::zeros(6);
        let pai = pai_model(&[(0.0, 0.0, 0.0); 5]);
        let f = [1.0];
        assert!(matches!(
            CsspProblem::new(Formulation::Pai, ModelRef::Pao(&pao), &f, &feasible, &cs),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            CsspProblem::new(Formulation::PaoDirect, ModelRef::Pai(&pai), &f, &feasible, &cs),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&pao), &f, &[], &cs),
            Err(Error::EmptyFeasibleSet)
        ));
        assert!(matches!(
            CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&pao), &[1.0, 2.0], &feasible, &cs),
            Err(Error::Dimension { .. })
        ));
        let p = CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&pao), &f, &feasible, &cs).unwrap();
        assert!(solve_pao_weighted(&p).is_err());
    }

    #[test]
    fn infeasible_list_entry_is_caught() {
        let (_, cs, _) = toy();
        let bad = vec![Configuration::from_bits(vec![1, 1, 0, 0, 1]).unwrap()];
        let m = LinearModel::zeros(5);
        let p = CsspProblem::new(Formulation::PaoDirect, ModelRef::Pao(&m), &[], &bad, &cs).unwrap();
        assert!(matches!(solve(&p), Err(Error::Data(_))));
    }

    #[test]
    fn formulation_names_round_trip() {
        for f in Formulation::ALL {
            assert_eq!(f.name().parse::<Formulation>().unwrap(), f);
        }
        assert!("pao".parse::<Formulation>().is_err());
    }
}
