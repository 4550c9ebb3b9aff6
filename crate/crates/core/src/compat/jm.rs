//! Joint measurability through depolarizing robustness.
//!
//! A parent `{G_λ}` over deterministic strategies `λ: x ↦ a` is searched for
//! the depolarized set `A^η_{a|x} = η A_{a|x} + (1−η) tr[A_{a|x}] 1/d`. The SDP
//! minimises `s = 1 − η ≥ 0` subject to `Σ_{λ(x)=a} G_λ + s D_{a|x} = A_{a|x}`
//! with `D_{a|x} = A_{a|x} − tr[A_{a|x}] 1/d`, which is strictly feasible at
//! `s = 1`. Its dual variables form an incompatibility witness.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::compat::certificate::{verify_parent, verify_witness};
use crate::compat::sdp::{BlockSdp, SdpOptions, SdpSolution};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_basis, hermitian_eigenvalues, ComplexMatrix, ToleranceConfig};
use crate::parallel::{map_slice, Parallelism};
use crate::qobjects::{MeasurementAssemblage, Povm};

/// Width of the undecided band below `η* = 1` and the certificate threshold.
pub const JM_TOL: f64 = 1e-7;

pub const DEFAULT_STRATEGY_CAP: usize = 4096;

/// Effects with smaller trace are treated as zero and excluded from strategies.
const ZERO_EFFECT_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JmStatus {
    JointlyMeasurable,
    Incompatible,
    NumericallyMarginal,
}

impl JmStatus {
    pub fn is_decisive(self) -> bool {
        self != JmStatus::NumericallyMarginal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JmStatus::JointlyMeasurable => "JointlyMeasurable",
            JmStatus::Incompatible => "Incompatible",
            JmStatus::NumericallyMarginal => "NumericallyMarginal",
        }
    }
}

impl std::fmt::Display for JmStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JmOptions {
    pub strategy_cap: usize,
    pub sdp: SdpOptions,
}

impl Default for JmOptions {
    fn default() -> Self {
        Self {
            strategy_cap: DEFAULT_STRATEGY_CAP,
            sdp: SdpOptions {
                parallelism: Parallelism::Sequential,
                ..SdpOptions::default()
            },
        }
    }
}

/// Deterministic strategies over labelled settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpace {
    pub settings: Vec<String>,
    /// Outcome labels per setting.
    pub outcomes: Vec<Vec<String>>,
    /// Outcome index chosen by each strategy, per setting.
    pub strategies: Vec<Vec<usize>>,
}

impl StrategySpace {
    /// Every deterministic strategy of `m`.
    pub fn full(m: &MeasurementAssemblage) -> Self {
        let (settings, outcomes) = labels_of(m);
        let all: Vec<Vec<usize>> = outcomes.iter().map(|o| (0..o.len()).collect()).collect();
        Self {
            settings,
            outcomes,
            strategies: cartesian(&all),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// Outcome labels of strategy `l`, in setting order.
    pub fn labels(&self, l: usize) -> Vec<String> {
        self.strategies[l]
            .iter()
            .enumerate()
            .map(|(x, &a)| self.outcomes[x][a].clone())
            .collect()
    }
}

/// `Π_x o_x`, saturating.
pub fn strategy_count(m: &MeasurementAssemblage) -> u128 {
    m.outcome_counts()
        .iter()
        .fold(1u128, |acc, &o| acc.saturating_mul(o as u128))
}

/// Mixed-radix enumeration; the last setting varies fastest.
pub(crate) fn cartesian(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(choices.len())];
    for options in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&a| {
                    let mut s = prefix.clone();
                    s.push(a);
                    s
                })
            })
            .collect();
    }
    out
}

pub(crate) fn labels_of(m: &MeasurementAssemblage) -> (Vec<String>, Vec<Vec<String>>) {
    let settings = m.settings().map(|(x, _)| x.clone()).collect();
    let outcomes = m.settings().map(|(_, p)| p.labels().cloned().collect()).collect();
    (settings, outcomes)
}

/// Parent POVM indexed by deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentPovm {
    pub settings: Vec<String>,
    /// Outcome label each strategy assigns to each setting.
    pub strategies: Vec<Vec<String>>,
    pub effects: Vec<ComplexMatrix>,
}

impl ParentPovm {
    /// `"x=+,z=-"` style label of strategy `l`.
    pub fn label(&self, l: usize) -> String {
        strategy_label(&self.settings, &self.strategies[l])
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// `Σ_{λ(x)=a} G_λ`.
    pub fn marginal(&self, x: &str, a: &str) -> Option<ComplexMatrix> {
        let xi = self.settings.iter().position(|s| s == x)?;
        let d = self.effects.first()?.rows();
        let mut out = ComplexMatrix::zeros(d, d);
        for (s, g) in self.strategies.iter().zip(&self.effects) {
            if s[xi] == a {
                out += g;
            }
        }
        Some(out)
    }

    /// The parent as a labelled POVM, checked at [`JM_TOL`].
    pub fn povm(&self, cfg: &ToleranceConfig) -> Result<Povm> {
        let effects = (0..self.len()).map(|l| (self.label(l), self.effects[l].clone()));
        Povm::with_completeness_tol(effects, cfg, JM_TOL)
    }
}

pub(crate) fn strategy_label(settings: &[String], outcomes: &[String]) -> String {
    settings
        .iter()
        .zip(outcomes)
        .map(|(x, a)| format!("{x}={a}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Hermitian operators `Y_{a|x}` with `Σ_x Y_{λ(x)|x} ⪯ 0` for every strategy `λ`.
///
/// Any jointly measurable set then has `Σ ⟨Y_{a|x}, A_{a|x}⟩ ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWitness {
    pub operators: BTreeMap<String, BTreeMap<String, ComplexMatrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JmResiduals {
    /// `max ‖Σ_{λ(x)=a} G_λ − A_{a|x}‖_∞` of the parent, when one is reported.
    pub parent_reconstruction: Option<f64>,
    /// Certified witness value, when a witness is reported.
    pub witness_value: Option<f64>,
    pub solver_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmVerdict {
    pub status: JmStatus,
    /// Depolarizing robustness `η* ∈ [0, 1]`.
    pub robustness: f64,
    pub parent: Option<ParentPovm>,
    pub witness: Option<DualWitness>,
    pub residuals: JmResiduals,
}

/// Two-outcome qubit criterion: `‖a₁+a₂‖ + ‖a₁−a₂‖ ≤ 2`.
///
/// Returns whether the pair is jointly measurable and the margin `2 − sum`.
pub fn qubit_jm_criterion(a1: [f64; 3], a2: [f64; 3]) -> Result<(bool, f64)> {
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    for a in [a1, a2] {
        let n = norm(a);
        if !n.is_finite() || n > 1.0 + 1e-12 {
            return Err(Error::InvalidBlochVector { norm: n });
        }
    }
    let plus = norm([a1[0] + a2[0], a1[1] + a2[1], a1[2] + a2[2]]);
    let minus = norm([a1[0] - a2[0], a1[1] - a2[1], a1[2] - a2[2]]);
    let margin = 2.0 - (plus + minus);
    Ok((margin >= 0.0, margin))
}

pub fn jm_decide(m: &MeasurementAssemblage) -> Result<JmVerdict> {
    jm_decide_with(m, &JmOptions::default())
}

/// Decides many sets, one independent solve each.
pub fn jm_decide_batch(sets: &[MeasurementAssemblage], opts: &JmOptions, mode: Parallelism) -> Vec<Result<JmVerdict>> {
    map_slice(sets, mode, |m| jm_decide_with(m, opts))
}

struct JmSdp {
    sdp: BlockSdp,
    strategies: Vec<Vec<usize>>,
    /// Constrained `(x, a)` pairs; row `r` owns constraints `r·d² .. (r+1)·d²`.
    rows: Vec<(usize, usize)>,
    basis: Vec<ComplexMatrix>,
}

fn build_sdp(effects: &[Vec<&ComplexMatrix>], d: usize) -> JmSdp {
    let kept: Vec<Vec<usize>> = effects
        .iter()
        .map(|es| {
            (0..es.len())
                .filter(|&a| es[a].trace().re > ZERO_EFFECT_TRACE)
                .collect()
        })
        .collect();
    let strategies = cartesian(&kept);

    // Outcome sums are fixed by the first setting; drop one outcome of every other.
    let mut rows = Vec::new();
    let mut row_of: Vec<Vec<Option<usize>>> = effects.iter().map(|es| vec![None; es.len()]).collect();
    for (x, ks) in kept.iter().enumerate() {
        for (pos, &a) in ks.iter().enumerate() {
            if x > 0 && pos + 1 == ks.len() {
                continue;
            }
            row_of[x][a] = Some(rows.len());
            rows.push((x, a));
        }
    }

    let basis = hermitian_basis(d);
    let nb = basis.len();
    let mut block_dims = vec![d; strategies.len()];
    block_dims.push(1);
    let s_block = strategies.len();
    let mut sdp = BlockSdp::new(block_dims, rows.len() * nb);
    let basis_ids: Vec<usize> = basis.iter().map(|e| sdp.add_coefficient(e.clone())).collect();
    sdp.set_cost(s_block, ComplexMatrix::from_diagonal(&[1.0]));

    let id = ComplexMatrix::identity(d);
    for (r, &(x, a)) in rows.iter().enumerate() {
        let amat = effects[x][a];
        let dmat = amat - &id.scale(amat.trace().re / d as f64);
        for (k, e) in basis.iter().enumerate() {
            let i = r * nb + k;
            sdp.set_rhs(i, e.trace_product_re(amat));
            let dk = e.trace_product_re(&dmat);
            if dk != 0.0 {
                let c = sdp.add_coefficient(ComplexMatrix::from_diagonal(&[dk]));
                sdp.add_entry(s_block, i, c);
            }
        }
    }
    for (l, strat) in strategies.iter().enumerate() {
        for (x, &a) in strat.iter().enumerate() {
            if let Some(r) = row_of[x][a] {
                for (k, &c) in basis_ids.iter().enumerate() {
                    sdp.add_entry(l, r * nb + k, c);
                }
            }
        }
    }
    JmSdp {
        sdp,
        strategies,
        rows,
        basis,
    }
}

pub fn jm_decide_with(m: &MeasurementAssemblage, opts: &JmOptions) -> Result<JmVerdict> {
    let count = strategy_count(m);
    if count > opts.strategy_cap as u128 {
        return Err(Error::StrategyCapExceeded {
            count,
            cap: opts.strategy_cap,
        });
    }
    let d = m.dim();
    let (settings, outcomes) = labels_of(m);
    let effects: Vec<Vec<&ComplexMatrix>> = m.settings().map(|(_, p)| p.effect_list()).collect();

    let problem = build_sdp(&effects, d);
    let sol = problem.sdp.solve(&opts.sdp)?;
    let s_block = problem.strategies.len();
    let s = sol.x[s_block][(0, 0)].re.max(0.0);
    let robustness = (1.0 - s).clamp(0.0, 1.0);

    let mut residuals = JmResiduals {
        solver_gap: sol.gap,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
        ..JmResiduals::default()
    };

    let mut status = JmStatus::NumericallyMarginal;
    let mut parent = None;
    let mut witness = None;
    if robustness >= 1.0 - JM_TOL {
        let candidate = ParentPovm {
            settings: settings.clone(),
            strategies: problem
                .strategies
                .iter()
                .map(|st| st.iter().enumerate().map(|(x, &a)| outcomes[x][a].clone()).collect())
                .collect(),
            effects: sol.x[..s_block].iter().map(ComplexMatrix::hermitian_part).collect(),
        };
        let check = verify_parent(m, &candidate)?;
        residuals.parent_reconstruction = Some(check.worst());
        if check.worst() <= JM_TOL {
            status = JmStatus::JointlyMeasurable;
            parent = Some(candidate);
        }
    } else {
        let candidate = witness_from_dual(&problem, &sol, &effects, &settings, &outcomes, d);
        let value = verify_witness(m, &candidate, opts.strategy_cap)?.certified_value;
        residuals.witness_value = Some(value);
        if value > JM_TOL {
            status = JmStatus::Incompatible;
            witness = Some(candidate);
        }
    }

    Ok(JmVerdict {
        status,
        robustness,
        parent,
        witness,
        residuals,
    })
}

/// `Y_{a|x} = Σ_k y_{(x,a),k} E_k`, completed on dropped and pruned outcomes,
/// then shifted by a multiple of the identity so that every strategy is covered.
fn witness_from_dual(
    problem: &JmSdp,
    sol: &SdpSolution,
    effects: &[Vec<&ComplexMatrix>],
    settings: &[String],
    outcomes: &[Vec<String>],
    d: usize,
) -> DualWitness {
    let nb = problem.basis.len();
    let mut ops: Vec<Vec<Option<ComplexMatrix>>> = effects.iter().map(|es| vec![None; es.len()]).collect();
    for (r, &(x, a)) in problem.rows.iter().enumerate() {
        let mut y = ComplexMatrix::zeros(d, d);
        for (k, e) in problem.basis.iter().enumerate() {
            y.add_scaled(e, Complex64::new(sol.y[r * nb + k], 0.0));
        }
        ops[x][a] = Some(y.hermitian_part());
    }
    let id = ComplexMatrix::identity(d);
    for (x, es) in effects.iter().enumerate() {
        // The outcome dropped from the constraints carries no dual variable.
        let dropped = (0..es.len())
            .rev()
            .find(|&a| es[a].trace().re > ZERO_EFFECT_TRACE && ops[x][a].is_none());
        if let Some(a) = dropped {
            ops[x][a] = Some(ComplexMatrix::zeros(d, d));
        }
        // A zero effect gets the smallest eigenvalue of a kept outcome times 1,
        // so every strategy through it is dominated by one the solver saw.
        let floor = ops[x]
            .iter()
            .flatten()
            .map(|y| hermitian_eigenvalues(y)[0])
            .fold(f64::INFINITY, f64::min);
        for slot in ops[x].iter_mut() {
            if slot.is_none() {
                *slot = Some(id.scale(floor.min(0.0)));
            }
        }
    }
    let mut operators: BTreeMap<String, BTreeMap<String, ComplexMatrix>> = BTreeMap::new();
    for (x, per_x) in ops.into_iter().enumerate() {
        let entry = operators.entry(settings[x].clone()).or_default();
        for (a, y) in per_x.into_iter().enumerate() {
            entry.insert(outcomes[x][a].clone(), y.expect("filled above"));
        }
    }
    let mut w = DualWitness { operators };
    let eps = crate::compat::certificate::witness_violation(&w, Parallelism::Sequential);
    if eps > 0.0 {
        let shift = id.scale(eps / settings.len() as f64);
        for per_x in w.operators.values_mut() {
            for y in per_x.values_mut() {
                *y -= &shift;
            }
        }
    }
    w
}
