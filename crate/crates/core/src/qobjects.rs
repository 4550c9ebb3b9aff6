//! Validated quantum objects: states, POVMs, assemblages, channels, instruments.
//!
//! Setting and outcome labels are opaque strings kept in `BTreeMap`s, so the
//! iteration order (and therefore every index derived from it) is lexicographic.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{check_psd, sqrt_psd, ComplexMatrix, ToleranceConfig};

/// Trace tolerance for normalized states.
pub const TRACE_TOL: f64 = 1e-9;

fn check_square(m: &ComplexMatrix, d: usize, what: &str) -> Result<()> {
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {d}x{d}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Density matrix, or a subnormalized state when built with [`DensityMatrix::subnormalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, cfg: &ToleranceConfig) -> Result<Self> {
        let rho = Self::subnormalized(mat, cfg)?;
        let t = rho.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("state has trace {t}, expected 1")));
        }
        Ok(rho)
    }

    /// Hermitian PSD with trace in `(0, 1]`.
    pub fn subnormalized(mat: ComplexMatrix, cfg: &ToleranceConfig) -> Result<Self> {
        check_psd(&mat, cfg)?;
        let t = mat.trace().re;
        if !(t > 0.0 && t <= 1.0 + TRACE_TOL) {
            return Err(Error::Validation(format!("state has trace {t}, expected (0, 1]")));
        }
        Ok(Self { mat })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn pure(psi: &ComplexMatrix) -> Result<Self> {
        let n = psi.frobenius_norm();
        if psi.cols() != 1 || (n - 1.0).abs() > 1e-9 {
            return Err(Error::Validation("pure state needs a unit column vector".into()));
        }
        Ok(Self {
            mat: ComplexMatrix::projector(psi),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
}

/// Labelled family of positive effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: BTreeMap<String, ComplexMatrix>,
    dim: usize,
}

impl Povm {
    pub fn new(effects: impl IntoIterator<Item = (String, ComplexMatrix)>, cfg: &ToleranceConfig) -> Result<Self> {
        Self::with_completeness_tol(effects, cfg, cfg.equality_tol)
    }

    /// Same as [`Povm::new`] with an explicit tolerance on `Σ effects = I`.
    ///
    /// Solver-produced certificates are checked at their own, looser tolerance.
    pub fn with_completeness_tol(
        effects: impl IntoIterator<Item = (String, ComplexMatrix)>,
        cfg: &ToleranceConfig,
        completeness_tol: f64,
    ) -> Result<Self> {
        let effects: BTreeMap<String, ComplexMatrix> = effects.into_iter().collect();
        let dim = effects
            .values()
            .next()
            .ok_or_else(|| Error::Validation("POVM needs at least one outcome".into()))?
            .rows();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (label, e) in &effects {
            check_square(e, dim, &format!("effect {label:?}"))?;
            check_psd(e, cfg)?;
            total += e;
        }
        let deviation = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > completeness_tol {
            return Err(Error::Validation(format!(
                "POVM effects sum to identity only within {deviation:.3e}"
            )));
        }
        Ok(Self { effects, dim })
    }

    /// Two-outcome qubit observable `½(I ± a·σ)` with outcomes `"+"` and `"-"`.
    pub fn qubit_binary(bloch: [f64; 3]) -> Result<Self> {
        let norm = bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidBlochVector { norm });
        }
        let mut a_sigma = ComplexMatrix::pauli_x().scale(bloch[0]);
        a_sigma += &ComplexMatrix::pauli_y().scale(bloch[1]);
        a_sigma += &ComplexMatrix::pauli_z().scale(bloch[2]);
        let id = ComplexMatrix::identity(2);
        let plus = (&id + &a_sigma).scale(0.5);
        let minus = (&id - &a_sigma).scale(0.5);
        Self::new(
            [("+".to_string(), plus), ("-".to_string(), minus)],
            &ToleranceConfig::default(),
        )
    }

    /// Projective measurement in the eigenbasis of a Hermitian operator given by columns.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        let effects = (0..basis.cols())
            .map(|i| (i.to_string(), ComplexMatrix::projector(&basis.column_vector(i))))
            .collect::<Vec<_>>();
        Self::new(effects, &ToleranceConfig::default())
    }

    pub fn trivial(d: usize) -> Self {
        let mut effects = BTreeMap::new();
        effects.insert("0".to_string(), ComplexMatrix::identity(d));
        Self { effects, dim: d }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.effects.keys()
    }

    pub fn effects(&self) -> impl Iterator<Item = (&String, &ComplexMatrix)> {
        self.effects.iter()
    }

    pub fn effect(&self, label: &str) -> Option<&ComplexMatrix> {
        self.effects.get(label)
    }

    pub fn effect_list(&self) -> Vec<&ComplexMatrix> {
        self.effects.values().collect()
    }
}

/// Set of POVMs indexed by setting label, all on the same space.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementAssemblage {
    settings: BTreeMap<String, Povm>,
    dim: usize,
}

impl MeasurementAssemblage {
    pub fn new(settings: impl IntoIterator<Item = (String, Povm)>) -> Result<Self> {
        let settings: BTreeMap<String, Povm> = settings.into_iter().collect();
        let dim = settings
            .values()
            .next()
            .ok_or_else(|| Error::Validation("measurement assemblage needs a setting".into()))?
            .dim();
        if let Some((x, p)) = settings.iter().find(|(_, p)| p.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "setting {x:?} has dimension {}, expected {dim}",
                p.dim()
            )));
        }
        Ok(Self { settings, dim })
    }

    /// Noisy qubit observables `½(I ± η·n̂·σ)` along the given unit directions.
    pub fn noisy_qubit_observables(directions: &[(&str, [f64; 3])], eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta,
                range: "[0, 1]",
            });
        }
        let povms = directions
            .iter()
            .map(|(label, n)| Povm::qubit_binary([eta * n[0], eta * n[1], eta * n[2]]).map(|p| (label.to_string(), p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(povms)
    }

    /// The Pauli observables X, Y, Z (first `count` of them) with noise `η`.
    pub fn noisy_paulis(count: usize, eta: f64) -> Result<Self> {
        let all = [("x", [1.0, 0.0, 0.0]), ("y", [0.0, 1.0, 0.0]), ("z", [0.0, 0.0, 1.0])];
        if count == 0 || count > 3 {
            return Err(Error::Validation(format!("{count} Pauli settings requested")));
        }
        Self::noisy_qubit_observables(&all[..count], eta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn settings(&self) -> impl Iterator<Item = (&String, &Povm)> {
        self.settings.iter()
    }

    pub fn setting(&self, label: &str) -> Option<&Povm> {
        self.settings.get(label)
    }

    pub fn povms(&self) -> Vec<&Povm> {
        self.settings.values().collect()
    }

    /// Outcome count per setting, in setting order.
    pub fn outcome_counts(&self) -> Vec<usize> {
        self.settings.values().map(Povm::len).collect()
    }

    /// Keeps only the listed settings.
    pub fn restrict(&self, labels: &[&str]) -> Result<Self> {
        let kept = labels
            .iter()
            .map(|l| {
                self.settings
                    .get(*l)
                    .map(|p| (l.to_string(), p.clone()))
                    .ok_or_else(|| Error::Validation(format!("unknown setting {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(kept)
    }
}

pub type AssemblageMembers = BTreeMap<String, BTreeMap<String, ComplexMatrix>>;

/// Subnormalized states `ρ_{a|x}` indexed by setting and outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAssemblage {
    members: AssemblageMembers,
    dim: usize,
}

impl StateAssemblage {
    pub fn new(members: AssemblageMembers, cfg: &ToleranceConfig) -> Result<Self> {
        let dim = members
            .values()
            .flat_map(|m| m.values())
            .next()
            .ok_or_else(|| Error::Validation("state assemblage is empty".into()))?
            .rows();
        for (x, outcomes) in &members {
            if outcomes.is_empty() {
                return Err(Error::Validation(format!("setting {x:?} has no outcomes")));
            }
            let mut total = 0.0;
            for (a, rho) in outcomes {
                check_square(rho, dim, &format!("member ({x:?}, {a:?})"))?;
                check_psd(rho, cfg)?;
                total += rho.trace().re;
            }
            if total > 1.0 + TRACE_TOL {
                return Err(Error::Validation(format!("setting {x:?} has total trace {total} > 1")));
            }
        }
        Ok(Self { members, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &AssemblageMembers {
        &self.members
    }

    pub fn member(&self, x: &str, a: &str) -> Option<&ComplexMatrix> {
        self.members.get(x)?.get(a)
    }

    pub fn settings(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, ComplexMatrix>)> {
        self.members.iter()
    }

    /// `Σ_a ρ_{a|x}` for every setting, in setting order.
    pub fn marginals(&self) -> Vec<ComplexMatrix> {
        self.members
            .values()
            .map(|outcomes| {
                let mut total = ComplexMatrix::zeros(self.dim, self.dim);
                for rho in outcomes.values() {
                    total += rho;
                }
                total
            })
            .collect()
    }

    /// Bob's reduced state `ρ_B`, taken from the first setting.
    pub fn reduced_state(&self) -> ComplexMatrix {
        self.marginals().swap_remove(0)
    }

    /// Applies `f` to every member without re-validating.
    pub fn map_members(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let members = self
            .members
            .iter()
            .map(|(x, outs)| (x.clone(), outs.iter().map(|(a, m)| (a.clone(), f(m))).collect()))
            .collect::<AssemblageMembers>();
        let dim = members
            .values()
            .flat_map(|m| m.values())
            .next()
            .map_or(self.dim, |m| m.rows());
        Self { members, dim }
    }

    /// Max-abs difference between two assemblages with identical labels.
    pub fn max_abs_diff(&self, other: &StateAssemblage) -> f64 {
        let mut dev: f64 = 0.0;
        for (x, outs) in &self.members {
            for (a, m) in outs {
                match other.member(x, a) {
                    Some(o) if o.shape() == m.shape() => dev = dev.max(m.max_abs_diff(o)),
                    _ => return f64::INFINITY,
                }
            }
        }
        let count = |s: &StateAssemblage| s.members.values().map(BTreeMap::len).sum::<usize>();
        if count(self) != count(other) {
            return f64::INFINITY;
        }
        dev
    }
}

/// `Σ_k vec(K_k) vec(K_k)†` with row-major vectorization.
pub fn choi_of_kraus(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let (d_out, d_in) = kraus[0].shape();
    let n = d_out * d_in;
    let mut j = ComplexMatrix::zeros(n, n);
    for k in kraus {
        let v = k.vectorize();
        j += &ComplexMatrix::projector(&v);
    }
    j
}

fn kraus_dims(kraus: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Validation("empty Kraus list".into()))?;
    let (d_out, d_in) = first.shape();
    if let Some(k) = kraus.iter().find(|k| k.shape() != (d_out, d_in)) {
        return Err(Error::DimensionMismatch(format!(
            "Kraus operators of shapes {d_out}x{d_in} and {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    Ok((d_out, d_in))
}

fn sum_kdag_k(kraus: &[ComplexMatrix], d_in: usize) -> ComplexMatrix {
    let mut total = ComplexMatrix::zeros(d_in, d_in);
    for k in kraus {
        total += &k.adjoint().matmul(k);
    }
    total
}

/// Trace-preserving completely positive map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    d_in: usize,
    d_out: usize,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, cfg: &ToleranceConfig) -> Result<Self> {
        let (d_out, d_in) = kraus_dims(&kraus)?;
        let deviation = sum_kdag_k(&kraus, d_in).max_abs_diff(&ComplexMatrix::identity(d_in));
        if deviation > cfg.equality_tol {
            return Err(Error::Validation(format!(
                "Kraus operators are not trace preserving (deviation {deviation:.3e})"
            )));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(d)],
            d_in: d,
            d_out: d,
        }
    }

    pub(crate) fn from_parts_unchecked(kraus: Vec<ComplexMatrix>) -> Self {
        let (d_out, d_in) = kraus[0].shape();
        Self { kraus, d_in, d_out }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> ComplexMatrix {
        choi_of_kraus(&self.kraus)
    }

    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += &k.sandwich(rho);
        }
        out
    }
}

pub type InstrumentMaps = BTreeMap<String, BTreeMap<String, Vec<ComplexMatrix>>>;

/// Instruments `𝓘_{a|x}` stored as one Kraus list per (setting, outcome).
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet {
    maps: InstrumentMaps,
    d_in: usize,
    d_out: usize,
}

impl InstrumentSet {
    pub fn new(maps: InstrumentMaps, cfg: &ToleranceConfig) -> Result<Self> {
        let first = maps
            .values()
            .flat_map(|m| m.values())
            .next()
            .ok_or_else(|| Error::Validation("instrument set is empty".into()))?;
        let (d_out, d_in) = kraus_dims(first)?;
        for (x, outcomes) in &maps {
            if outcomes.is_empty() {
                return Err(Error::Validation(format!("setting {x:?} has no outcomes")));
            }
            let mut total = ComplexMatrix::zeros(d_in, d_in);
            for (a, kraus) in outcomes {
                let dims = kraus_dims(kraus)?;
                if dims != (d_out, d_in) {
                    return Err(Error::DimensionMismatch(format!(
                        "instrument ({x:?}, {a:?}) maps {}→{}, expected {d_in}→{d_out}",
                        dims.1, dims.0
                    )));
                }
                total += &sum_kdag_k(kraus, d_in);
            }
            let deviation = total.max_abs_diff(&ComplexMatrix::identity(d_in));
            if deviation > cfg.equality_tol {
                return Err(Error::Validation(format!(
                    "instrument for setting {x:?} is not trace preserving (deviation {deviation:.3e})"
                )));
            }
        }
        Ok(Self { maps, d_in, d_out })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn maps(&self) -> &InstrumentMaps {
        &self.maps
    }

    pub fn settings(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, Vec<ComplexMatrix>>)> {
        self.maps.iter()
    }

    pub fn kraus(&self, x: &str, a: &str) -> Option<&[ComplexMatrix]> {
        self.maps.get(x)?.get(a).map(Vec::as_slice)
    }

    /// All Kraus operators of one setting, which together form its total channel.
    pub fn total_channel(&self, x: &str) -> Option<KrausChannel> {
        let outcomes = self.maps.get(x)?;
        let kraus: Vec<ComplexMatrix> = outcomes.values().flatten().cloned().collect();
        Some(KrausChannel::from_parts_unchecked(kraus))
    }

    /// Choi matrices of every map, in (setting, outcome) order.
    pub fn chois(&self) -> BTreeMap<String, BTreeMap<String, ComplexMatrix>> {
        self.maps
            .iter()
            .map(|(x, outs)| {
                (
                    x.clone(),
                    outs.iter().map(|(a, k)| (a.clone(), choi_of_kraus(k))).collect(),
                )
            })
            .collect()
    }

    /// Max-abs deviation between the total Choi matrices of all setting pairs.
    pub fn signalling_deviation(&self) -> f64 {
        let totals: Vec<ComplexMatrix> = self
            .maps
            .keys()
            .map(|x| self.total_channel(x).expect("known setting").choi())
            .collect();
        max_pairwise_deviation(&totals)
    }
}

fn max_pairwise_deviation(ms: &[ComplexMatrix]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            dev = dev.max(ms[i].max_abs_diff(&ms[j]));
        }
    }
    dev
}

/// Isometry `V: ℂ^{d_in} → ℂ^r ⊗ ℂ^{d_out}`, dummy factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    v: ComplexMatrix,
    dummy_dim: usize,
    d_in: usize,
    d_out: usize,
}

impl Isometry {
    pub fn new(v: ComplexMatrix, dummy_dim: usize, d_out: usize, cfg: &ToleranceConfig) -> Result<Self> {
        let d_in = v.cols();
        if v.rows() != dummy_dim * d_out {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {dummy_dim}·{d_out}",
                v.rows()
            )));
        }
        let deviation = v.adjoint().matmul(&v).max_abs_diff(&ComplexMatrix::identity(d_in));
        if deviation > cfg.equality_tol {
            return Err(Error::Validation(format!(
                "V†V deviates from the identity by {deviation:.3e}"
            )));
        }
        Ok(Self {
            v,
            dummy_dim,
            d_in,
            d_out,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn dummy_dim(&self) -> usize {
        self.dummy_dim
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `V ρ V†`, an operator on dummy ⊗ output.
    pub fn dilate(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.v.sandwich(rho)
    }
}

/// `Λ(ρ) = Σ_k K_k ρ K_k†`.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.d_in() {
        return Err(Error::DimensionMismatch(format!(
            "channel input dimension {} but state dimension {}",
            ch.d_in(),
            rho.dim()
        )));
    }
    Ok(DensityMatrix {
        mat: ch.apply_matrix(rho.matrix()).hermitian_part(),
    })
}

/// `ρ_{a|x} = 𝓘_{a|x}(ρ)` for every setting and outcome.
pub fn apply_instrument(ins: &InstrumentSet, rho: &DensityMatrix) -> Result<StateAssemblage> {
    if rho.dim() != ins.d_in() {
        return Err(Error::DimensionMismatch(format!(
            "instrument input dimension {} but state dimension {}",
            ins.d_in(),
            rho.dim()
        )));
    }
    let members = ins
        .maps
        .iter()
        .map(|(x, outs)| {
            let states = outs
                .iter()
                .map(|(a, kraus)| {
                    let mut out = ComplexMatrix::zeros(ins.d_out, ins.d_out);
                    for k in kraus {
                        out += &k.sandwich(rho.matrix());
                    }
                    (a.clone(), out.hermitian_part())
                })
                .collect();
            (x.clone(), states)
        })
        .collect();
    Ok(StateAssemblage {
        members,
        dim: ins.d_out,
    })
}

/// Lüders instruments `ρ ↦ √A ρ √A` for every effect.
pub fn luders_instruments(m: &MeasurementAssemblage) -> Result<InstrumentSet> {
    let cfg = ToleranceConfig::default();
    let mut maps = InstrumentMaps::new();
    for (x, povm) in m.settings() {
        let mut outs = BTreeMap::new();
        for (a, e) in povm.effects() {
            outs.insert(a.clone(), vec![sqrt_psd(e, &cfg)?]);
        }
        maps.insert(x.clone(), outs);
    }
    Ok(InstrumentSet {
        maps,
        d_in: m.dim(),
        d_out: m.dim(),
    })
}

/// Outcome of a non-signalling check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingReport {
    pub nonsignalling: bool,
    pub max_deviation: f64,
}

/// Checks `Σ_a ρ_{a|x} = Σ_a ρ_{a|x'}` for all setting pairs.
pub fn is_nonsignalling(sa: &StateAssemblage, tol: f64) -> SignallingReport {
    let max_deviation = max_pairwise_deviation(&sa.marginals());
    SignallingReport {
        nonsignalling: max_deviation <= tol,
        max_deviation,
    }
}

/// Born probabilities `tr[A_{a|x} ρ]`.
pub fn born_probabilities(m: &MeasurementAssemblage, rho: &ComplexMatrix) -> BTreeMap<String, BTreeMap<String, f64>> {
    m.settings()
        .map(|(x, p)| {
            (
                x.clone(),
                p.effects().map(|(a, e)| (a.clone(), e.trace_product_re(rho))).collect(),
            )
        })
        .collect()
}
