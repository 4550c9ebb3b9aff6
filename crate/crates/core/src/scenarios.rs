//! Concrete scenarios: spatial assemblages, temporal embeddings, channel-state
//! pairs on minimal dilations and distributed sequential-measurement statistics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::compat::steering::{assemblage_dummy_povms, decide_state_steering_with, SteeringOptions, SteeringVerdict};
use crate::dilation::{instruments_from_kraus_presentation, MinimalDilation, NONSIGNALLING_TOL};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, psd_eigen, tensor, ComplexMatrix, Subsystem, ToleranceConfig};
use crate::qobjects::{
    is_nonsignalling, luders_instruments, AssemblageMembers, DensityMatrix, InstrumentMaps, InstrumentSet,
    KrausChannel, MeasurementAssemblage, StateAssemblage,
};
use crate::random::{random_density_matrix, random_measurement_assemblage};

/// Spatial assemblages are non-signalling to this precision by construction.
pub const SPATIAL_NONSIGNALLING_TOL: f64 = 1e-10;

/// Entrywise agreement required of the channel-state constructions.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

pub const BISECTION_TOL: f64 = 1e-4;
pub const BISECTION_MAX_ITER: usize = 40;

/// A constant quoted from the literature and never recomputed here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteratureConstant {
    pub symbol: &'static str,
    pub value: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteratureConstants {
    pub k_g3_inverse: LiteratureConstant,
    pub isotropic_projective_threshold: LiteratureConstant,
}

pub const LITERATURE: LiteratureConstants = LiteratureConstants {
    k_g3_inverse: LiteratureConstant {
        symbol: "1/K_G(3)",
        value: 0.6595,
        note: "approximate inverse Grothendieck constant of order 3; two-qubit isotropic states \
               are local for projective measurements up to this weight",
    },
    isotropic_projective_threshold: LiteratureConstant {
        symbol: "lambda_proj",
        value: 0.5,
        note: "two-qubit isotropic states are steerable with all projective measurements above this weight",
    },
};

/// Literature annotation on locality of the two-qubit isotropic state; never verified here.
pub fn locality_annotation(lambda: f64) -> Option<String> {
    let k = LITERATURE.k_g3_inverse;
    (lambda <= k.value).then(|| {
        format!(
            "local per literature for lambda <= {} ({}); locality is not verified by this tool",
            k.value, k.symbol
        )
    })
}

/// `ρ_{a|x} = tr_A[(A_{a|x} ⊗ 1) ρ_AB]`.
pub fn spatial_assemblage(
    rho_ab: &DensityMatrix,
    alice: &MeasurementAssemblage,
    cfg: &ToleranceConfig,
) -> Result<StateAssemblage> {
    let d_a = alice.dim();
    let n = rho_ab.dim();
    if !n.is_multiple_of(d_a) {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {n} does not factor with Alice's dimension {d_a}"
        )));
    }
    let d_b = n / d_a;
    let id_b = ComplexMatrix::identity(d_b);
    let mut members = AssemblageMembers::new();
    for (x, povm) in alice.settings() {
        let mut outs = BTreeMap::new();
        for (a, e) in povm.effects() {
            let weighted = tensor(e, &id_b).matmul(rho_ab.matrix());
            let reduced = partial_trace(&weighted, (d_a, d_b), Subsystem::B)?;
            outs.insert(a.clone(), reduced.hermitian_part());
        }
        members.insert(x.clone(), outs);
    }
    let sa = StateAssemblage::new(members, cfg)?;
    let report = is_nonsignalling(&sa, SPATIAL_NONSIGNALLING_TOL);
    if !report.nonsignalling {
        return Err(Error::Signalling {
            max_deviation: report.max_deviation,
        });
    }
    Ok(sa)
}

/// `Σ_i |ii⟩ / √d`.
pub fn maximally_entangled(d: usize) -> ComplexMatrix {
    let mut psi = ComplexMatrix::zeros(d * d, 1);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        psi[(i * d + i, 0)] = Complex64::new(amp, 0.0);
    }
    psi
}

/// `λ |ψ⁺⟩⟨ψ⁺| + (1−λ) 1/d²`.
pub fn isotropic_state(lambda: f64, d: usize) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            range: "[0, 1]",
        });
    }
    let n = d * d;
    let mut m = ComplexMatrix::projector(&maximally_entangled(d)).scale(lambda);
    m += &ComplexMatrix::identity(n).scale((1.0 - lambda) / n as f64);
    DensityMatrix::new(m, &ToleranceConfig::default())
}

/// Channel on a minimal dilation with an input state and the dilated target `VρV†`.
#[derive(Debug, Clone)]
pub struct ChannelStatePair {
    pub dilation: MinimalDilation,
    pub input: DensityMatrix,
    /// The intended `VρV†`, built independently of `V`.
    pub target: DensityMatrix,
    /// `‖VρV† − target‖_∞`.
    pub mapping_residual: f64,
}

impl ChannelStatePair {
    fn assemble(kraus: Vec<ComplexMatrix>, input: ComplexMatrix, target: ComplexMatrix) -> Result<Self> {
        let cfg = ToleranceConfig::default();
        let channel = KrausChannel::new(kraus, &cfg)?;
        let dilation = MinimalDilation::from_independent_kraus(channel, &cfg)?;
        let input = DensityMatrix::new(input, &cfg)?;
        let target = DensityMatrix::new(target, &cfg)?;
        let mapping_residual = dilation.isometry().dilate(input.matrix()).max_abs_diff(target.matrix());
        if mapping_residual > CONSTRUCTION_TOL {
            return Err(Error::Validation(format!(
                "VρV† misses the target by {mapping_residual:.3e}"
            )));
        }
        Ok(Self {
            dilation,
            input,
            target,
            mapping_residual,
        })
    }

    /// `VρV†` on dummy ⊗ output.
    pub fn dilated_state(&self) -> ComplexMatrix {
        self.dilation.isometry().dilate(self.input.matrix())
    }
}

fn ket_bra(d_out: usize, d_in: usize, terms: &[(usize, usize, f64)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d_out, d_in);
    for &(r, c, v) in terms {
        m[(r, c)] = Complex64::new(v, 0.0);
    }
    m
}

/// `K₀ = |0⟩⟨0| + |1⟩⟨1|`, `K₁ = |0⟩⟨2| + |1⟩⟨3|` on `ℂ⁴ → ℂ²` with
/// `ρ = λ|ψ⟩⟨ψ| + (1−λ)1/4`, `|ψ⟩ = (|0⟩+|3⟩)/√2`, which dilates to the isotropic state.
pub fn macrorealism_channel_pair(lambda: f64) -> Result<ChannelStatePair> {
    let target = isotropic_state(lambda, 2)?.into_matrix();
    let k0 = ket_bra(2, 4, &[(0, 0, 1.0), (1, 1, 1.0)]);
    let k1 = ket_bra(2, 4, &[(0, 2, 1.0), (1, 3, 1.0)]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = ComplexMatrix::from_fn(4, 1, |r, _| Complex64::new(if r == 0 || r == 3 { h } else { 0.0 }, 0.0));
    let mut rho = ComplexMatrix::projector(&psi).scale(lambda);
    rho += &ComplexMatrix::identity(4).scale((1.0 - lambda) / 4.0);
    ChannelStatePair::assemble(vec![k0, k1], rho, target)
}

/// Two-qutrit target `ρ̃(a)` and its preimage on `ℂ⁷`, for `0 < a ≤ 3/2`.
pub fn appendix_c_construction(a: f64) -> Result<ChannelStatePair> {
    if !(a > 0.0 && a <= 1.5) {
        return Err(Error::OutOfRange {
            name: "a",
            value: a,
            range: "(0, 3/2]",
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ninth = 1.0 / 9.0;

    // ρ̃ = [a|φ⁻⟩⟨φ⁻| + (3−a)(1/2)𝟙⊗|2⟩⟨2| + 2a|2⟩⟨2|⊗(1/2)𝟙 + (6−2a)|22⟩⟨22|] / 9
    let idx = |i: usize, j: usize| 3 * i + j;
    let mut phi = ComplexMatrix::zeros(9, 1);
    phi[(idx(0, 1), 0)] = Complex64::new(h, 0.0);
    phi[(idx(1, 0), 0)] = Complex64::new(-h, 0.0);
    let mut target = ComplexMatrix::projector(&phi).scale(a);
    let mut diag = vec![0.0; 9];
    diag[idx(0, 2)] += (3.0 - a) / 2.0;
    diag[idx(1, 2)] += (3.0 - a) / 2.0;
    diag[idx(2, 0)] += a;
    diag[idx(2, 1)] += a;
    diag[idx(2, 2)] += 6.0 - 2.0 * a;
    target += &ComplexMatrix::from_diagonal(&diag);
    let target = target.scale(ninth);

    // ρ = [a|ψ⟩⟨ψ| + (3−a)(|2⟩⟨2|+|3⟩⟨3|)/2 + a(|4⟩⟨4|+|5⟩⟨5|) + (6−2a)|6⟩⟨6|] / 9
    let mut psi = ComplexMatrix::zeros(7, 1);
    psi[(0, 0)] = Complex64::new(h, 0.0);
    psi[(1, 0)] = Complex64::new(h, 0.0);
    let mut rho = ComplexMatrix::projector(&psi).scale(a);
    rho += &ComplexMatrix::from_diagonal(&[0.0, 0.0, (3.0 - a) / 2.0, (3.0 - a) / 2.0, a, a, 6.0 - 2.0 * a]);
    let rho = rho.scale(ninth);

    let k0 = ket_bra(3, 7, &[(1, 0, 1.0), (2, 2, 1.0)]);
    let k1 = ket_bra(3, 7, &[(0, 1, -1.0), (2, 3, 1.0)]);
    let k2 = ket_bra(3, 7, &[(0, 4, 1.0), (1, 5, 1.0), (2, 6, 1.0)]);
    ChannelStatePair::assemble(vec![k0, k1, k2], rho, target)
}

/// A state assemblage realised as instruments acting on a pure input.
#[derive(Debug, Clone)]
pub struct TemporalEmbedding {
    pub instruments: InstrumentSet,
    pub input: DensityMatrix,
    pub dilation: MinimalDilation,
    /// `Ã_{a|x}`, transposed steering-equivalent observables in the eigenbasis of `ρ_B`.
    pub dummy_povms: MeasurementAssemblage,
}

/// Instruments on the support of `ρ_B` with `K_k = |v_k⟩⟨k|` and input `Σ_i √λ_i |i⟩`
/// that reproduce the assemblage exactly.
pub fn embed_assemblage_temporally(sa: &StateAssemblage, cfg: &ToleranceConfig) -> Result<TemporalEmbedding> {
    let (dummy_povms, pur) = assemblage_dummy_povms(sa, cfg)?;
    let d = sa.dim();
    let r = pur.support_dim();
    let kraus: Vec<ComplexMatrix> = (0..r)
        .map(|k| {
            ComplexMatrix::from_fn(d, r, |row, c| {
                if c == k {
                    pur.eigenbasis[(row, k)]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let channel = KrausChannel::new(
        kraus,
        &ToleranceConfig {
            equality_tol: 1e-9,
            ..*cfg
        },
    )?;
    let dilation = MinimalDilation::from_independent_kraus(channel, cfg)?;

    let completeness = dummy_povms
        .settings()
        .map(|(_, p)| {
            let mut total = ComplexMatrix::zeros(r, r);
            for e in p.effect_list() {
                total += e;
            }
            total.max_abs_diff(&ComplexMatrix::identity(r))
        })
        .fold(0.0, f64::max);
    let instruments = instruments_from_kraus_presentation(
        &dummy_povms,
        dilation.channel().kraus(),
        cfg,
        (2.0 * completeness).max(NONSIGNALLING_TOL),
    )?;

    let total: f64 = pur.eigenvalues.iter().sum();
    let psi = ComplexMatrix::from_fn(r, 1, |i, _| Complex64::new((pur.eigenvalues[i] / total).sqrt(), 0.0));
    let input = DensityMatrix::pure(&psi)?;
    Ok(TemporalEmbedding {
        instruments,
        input,
        dilation,
        dummy_povms,
    })
}

/// Instruments of the state preparator `ℂ → ℂ^d` with `𝓘_{a|x}(1) = ρ_{a|x}`.
///
/// Each map has Kraus vectors `√μ_j |u_j⟩` from the eigendecomposition of `ρ_{a|x}`.
pub fn state_preparator_instruments(sa: &StateAssemblage, cfg: &ToleranceConfig) -> Result<InstrumentSet> {
    let d = sa.dim();
    let mut maps = InstrumentMaps::new();
    for (x, outcomes) in sa.settings() {
        let mut outs = BTreeMap::new();
        for (a, rho) in outcomes {
            let eig = psd_eigen(rho, cfg)?;
            let mut kraus: Vec<ComplexMatrix> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &mu)| mu > 0.0)
                .map(|(j, &mu)| eig.vector(j).scale(mu.sqrt()))
                .collect();
            if kraus.is_empty() {
                kraus.push(ComplexMatrix::zeros(d, 1));
            }
            outs.insert(a.clone(), kraus);
        }
        maps.insert(x.clone(), outs);
    }
    InstrumentSet::new(
        maps,
        &ToleranceConfig {
            equality_tol: NONSIGNALLING_TOL,
            ..*cfg
        },
    )
}

/// Sequential measurements with Alice's dummy POVMs and Bob's output POVMs.
#[derive(Debug, Clone)]
pub struct DistributedScenario {
    pub dilation: MinimalDilation,
    pub input: DensityMatrix,
    pub alice: MeasurementAssemblage,
    pub bob: MeasurementAssemblage,
}

impl DistributedScenario {
    pub fn new(
        dilation: MinimalDilation,
        input: DensityMatrix,
        alice: MeasurementAssemblage,
        bob: MeasurementAssemblage,
    ) -> Result<Self> {
        if alice.dim() != dilation.dummy_dim() || bob.dim() != dilation.d_out() || input.dim() != dilation.d_in() {
            return Err(Error::DimensionMismatch(format!(
                "Alice {} / Bob {} / input {} against dilation r = {}, {} → {}",
                alice.dim(),
                bob.dim(),
                input.dim(),
                dilation.dummy_dim(),
                dilation.d_in(),
                dilation.d_out()
            )));
        }
        Ok(Self {
            dilation,
            input,
            alice,
            bob,
        })
    }
}

/// `p(a, b | x, y)` keyed by `(x, y)` and then `(a, b)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbabilityTable {
    pub entries: BTreeMap<(String, String), BTreeMap<(String, String), f64>>,
}

impl ProbabilityTable {
    pub fn get(&self, x: &str, y: &str, a: &str, b: &str) -> Option<f64> {
        self.entries
            .get(&(x.to_string(), y.to_string()))?
            .get(&(a.to_string(), b.to_string()))
            .copied()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|t| t.values())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_{x,y} |Σ_{a,b} p − 1|`.
    pub fn normalization_error(&self) -> f64 {
        self.entries
            .values()
            .map(|t| (t.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest change of either party's marginal under the other party's setting.
    pub fn signalling_deviation(&self) -> f64 {
        let mut alice: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        let mut bob: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for ((x, y), table) in &self.entries {
            let mut pa: BTreeMap<&String, f64> = BTreeMap::new();
            let mut pb: BTreeMap<&String, f64> = BTreeMap::new();
            for ((a, b), p) in table {
                *pa.entry(a).or_default() += p;
                *pb.entry(b).or_default() += p;
            }
            for (a, p) in pa {
                alice.entry((x.clone(), a.clone())).or_default().push(p);
            }
            for (b, p) in pb {
                bob.entry((y.clone(), b.clone())).or_default().push(p);
            }
        }
        alice
            .values()
            .chain(bob.values())
            .map(|ps| {
                let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// `p(a, b | x, y) = tr[(Ã_{a|x} ⊗ B_{b|y}) V ρ V†]`.
pub fn distributed_probabilities(sc: &DistributedScenario) -> Result<ProbabilityTable> {
    let state = sc.dilation.isometry().dilate(sc.input.matrix());
    let mut table = ProbabilityTable::default();
    for (x, pa) in sc.alice.settings() {
        for (y, pb) in sc.bob.settings() {
            let mut cell = BTreeMap::new();
            for (a, ea) in pa.effects() {
                for (b, eb) in pb.effects() {
                    let p = tensor(ea, eb).trace_product_re(&state);
                    cell.insert((a.clone(), b.clone()), p);
                }
            }
            table.entries.insert((x.clone(), y.clone()), cell);
        }
    }
    let min = table.min_entry();
    let norm = table.normalization_error();
    let signalling = table.signalling_deviation();
    if min < -1e-12 || norm > 1e-10 || signalling > 1e-10 {
        return Err(Error::Validation(format!(
            "probability table is inconsistent (min {min:.3e}, normalization {norm:.3e}, signalling {signalling:.3e})"
        )));
    }
    Ok(table)
}

/// Alice measures sharp Paulis (first `settings` of x, y, z) on half of a two-qubit state.
pub fn pauli_assemblage(rho_ab: &DensityMatrix, settings: usize) -> Result<StateAssemblage> {
    let alice = MeasurementAssemblage::noisy_paulis(settings, 1.0)?;
    spatial_assemblage(rho_ab, &alice, &ToleranceConfig::default())
}

/// Two-qubit isotropic state with `settings` Pauli measurements on Alice's side.
pub fn isotropic_pauli_assemblage(lambda: f64, settings: usize) -> Result<StateAssemblage> {
    pauli_assemblage(&isotropic_state(lambda, 2)?, settings)
}

/// Lüders instruments of noisy Paulis and the maximally mixed qubit input.
pub fn noisy_pauli_temporal_scenario(eta: f64, settings: usize) -> Result<(InstrumentSet, DensityMatrix)> {
    let m = MeasurementAssemblage::noisy_paulis(settings, eta)?;
    Ok((luders_instruments(&m)?, DensityMatrix::maximally_mixed(2)))
}

/// Instruments generated by `dummy` through the redundant presentation
/// `K₁ = K₂ = U/√2` of a unitary channel.
pub fn redundant_unitary_instruments(
    u: &ComplexMatrix,
    dummy: &MeasurementAssemblage,
    cfg: &ToleranceConfig,
) -> Result<(InstrumentSet, Vec<ComplexMatrix>)> {
    if dummy.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "the redundant presentation has two Kraus operators".into(),
        ));
    }
    let k = u.scale(std::f64::consts::FRAC_1_SQRT_2);
    let kraus = vec![k.clone(), k];
    let ins = instruments_from_kraus_presentation(dummy, &kraus, cfg, NONSIGNALLING_TOL)?;
    Ok((ins, kraus))
}

/// Spatial assemblage from a random full-rank `ρ_AB` on `ℂ^d ⊗ ℂ^d` and random POVMs.
pub fn random_nonsignalling_assemblage<R: Rng + ?Sized>(
    d: usize,
    settings: usize,
    outcomes: usize,
    rng: &mut R,
) -> Result<StateAssemblage> {
    let cfg = ToleranceConfig::default();
    let rho = DensityMatrix::new(random_density_matrix(d * d, d * d, rng), &cfg)?;
    let alice = random_measurement_assemblage(d, settings, outcomes, rng);
    spatial_assemblage(&rho, &alice, &cfg)
}

/// Result of a monotone threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Midpoint of the final bracket.
    pub value: f64,
    /// Largest parameter seen on the `false` side.
    pub below: f64,
    /// Smallest parameter seen on the `true` side.
    pub above: f64,
    pub iterations: usize,
}

/// Bisects a predicate that is `false` at `lo` and `true` at `hi`.
pub fn bisect_threshold(
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
    mut above: impl FnMut(f64) -> Result<bool>,
) -> Result<Threshold> {
    let (mut lo, mut hi) = (lo, hi);
    if above(lo)? || !above(hi)? {
        return Err(Error::Validation(format!(
            "bisection needs a sign change on [{lo}, {hi}]"
        )));
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(Threshold {
        value: 0.5 * (lo + hi),
        below: lo,
        above: hi,
        iterations,
    })
}

/// Steerability verdict of the dilated macrorealism state under three Pauli settings.
#[derive(Debug, Clone)]
pub struct IsotropicReport {
    pub lambda: f64,
    pub verdict: SteeringVerdict,
    pub locality_annotation: Option<String>,
    pub mapping_residual: f64,
}

pub fn isotropic_steering_report(lambda: f64, opts: &SteeringOptions) -> Result<IsotropicReport> {
    let pair = macrorealism_channel_pair(lambda)?;
    let dilated = DensityMatrix::new(pair.dilated_state().hermitian_part(), &opts.tolerances)?;
    let sa = pauli_assemblage(&dilated, 3)?;
    let verdict = decide_state_steering_with(&sa, opts)?;
    Ok(IsotropicReport {
        lambda,
        verdict,
        locality_annotation: locality_annotation(lambda),
        mapping_residual: pair.mapping_residual,
    })
}
