//! Minimal Stinespring dilations and the dummy-POVM correspondence.
//!
//! For a channel with linearly independent Kraus operators `K_1..K_r` the
//! isometry `V|ψ⟩ = Σ_k |φ_k⟩ ⊗ K_k|ψ⟩` is a minimal dilation, and every
//! non-signalling instrument set with that total channel is generated by a
//! unique family of POVMs on the `r`-dimensional dummy factor:
//!
//! `𝓘_{a|x}(ρ) = Σ_{k,l} ⟨φ_l|Ã_{a|x}|φ_k⟩ K_k ρ K_l†`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, eig_hermitian, hermitian_eigenvalues, invert, ComplexMatrix, ToleranceConfig};
use crate::qobjects::{
    choi_of_kraus, InstrumentMaps, InstrumentSet, Isometry, KrausChannel, MeasurementAssemblage, Povm,
};

/// Acceptance tolerance for non-signalling and channel agreement of instruments.
pub const NONSIGNALLING_TOL: f64 = 1e-9;

/// Gram condition numbers above this are reported by [`extract_dummy_povms`].
pub const GRAM_CONDITION_WARN: f64 = 1e8;

/// A channel with linearly independent Kraus operators and its isometry.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalDilation {
    channel: KrausChannel,
    isometry: Isometry,
}

impl MinimalDilation {
    /// Canonical minimal dilation: Kraus operators from the Choi eigendecomposition.
    pub fn of_channel(ch: &KrausChannel, cfg: &ToleranceConfig) -> Result<Self> {
        let channel = minimal_kraus(ch, cfg)?;
        let isometry = build_isometry(&channel, cfg)?;
        Ok(Self { channel, isometry })
    }

    /// Uses the given Kraus operators as they are; they must be linearly independent.
    pub fn from_independent_kraus(ch: KrausChannel, cfg: &ToleranceConfig) -> Result<Self> {
        let isometry = build_isometry(&ch, cfg)?;
        Ok(Self { channel: ch, isometry })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn isometry(&self) -> &Isometry {
        &self.isometry
    }

    pub fn dummy_dim(&self) -> usize {
        self.channel.kraus().len()
    }

    pub fn d_in(&self) -> usize {
        self.channel.d_in()
    }

    pub fn d_out(&self) -> usize {
        self.channel.d_out()
    }
}

/// Number of eigenvalues of the Choi matrix above `support_tol`.
pub fn choi_rank(ch: &KrausChannel, cfg: &ToleranceConfig) -> usize {
    hermitian_eigenvalues(&ch.choi())
        .into_iter()
        .filter(|&l| l > cfg.support_tol)
        .count()
}

/// Rank of the Hilbert-Schmidt Gram matrix of a Kraus family.
pub fn kraus_gram_rank(kraus: &[ComplexMatrix], cfg: &ToleranceConfig) -> usize {
    let r = kraus.len();
    let gram = ComplexMatrix::from_fn(r, r, |k, l| kraus[k].hs_inner(&kraus[l]));
    hermitian_eigenvalues(&gram)
        .into_iter()
        .filter(|&l| l > cfg.support_tol)
        .count()
}

/// Canonical minimal Kraus form `K_k = √μ_k · unvec(u_k)` from the Choi eigenpairs.
///
/// The result has as many operators as the Choi rank and they are pairwise
/// orthogonal in the Hilbert-Schmidt inner product.
pub fn minimal_kraus(ch: &KrausChannel, cfg: &ToleranceConfig) -> Result<KrausChannel> {
    let choi = ch.choi().hermitian_part();
    let eig = eig_hermitian(&choi, cfg)?;
    let mut kraus = Vec::new();
    for (i, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu <= cfg.support_tol {
            break;
        }
        let v = eig.vector(i).scale(mu.sqrt());
        kraus.push(ComplexMatrix::unvectorize(&v, ch.d_out(), ch.d_in())?);
    }
    Ok(KrausChannel::from_parts_unchecked(kraus))
}

/// Stacks the Kraus operators into `V = Σ_k |φ_k⟩ ⊗ K_k`.
pub fn build_isometry(ch: &KrausChannel, cfg: &ToleranceConfig) -> Result<Isometry> {
    let kraus = ch.kraus();
    let rank = kraus_gram_rank(kraus, cfg);
    if rank < kraus.len() {
        return Err(Error::NotMinimal {
            rank,
            kraus_count: kraus.len(),
        });
    }
    stack_kraus(kraus, cfg)
}

fn stack_kraus(kraus: &[ComplexMatrix], cfg: &ToleranceConfig) -> Result<Isometry> {
    let (d_out, d_in) = kraus[0].shape();
    let r = kraus.len();
    let v = ComplexMatrix::from_fn(r * d_out, d_in, |row, c| kraus[row / d_out][(row % d_out, c)]);
    // V†V = Σ K†K can pick up rounding beyond equality_tol when r is large.
    let relaxed = ToleranceConfig {
        equality_tol: cfg.equality_tol.max(1e-10 * r as f64),
        ..*cfg
    };
    Isometry::new(v, r, d_out, &relaxed)
}

/// Dummy POVMs together with diagnostics of the linear solve.
#[derive(Debug, Clone)]
pub struct DummyExtraction {
    pub povms: MeasurementAssemblage,
    /// Condition number of the `r²×r²` Gram matrix.
    pub gram_condition: f64,
    /// Set when the condition number exceeds [`GRAM_CONDITION_WARN`].
    pub ill_conditioned: bool,
    /// Largest `‖Ã − Ã†‖` removed by symmetrisation.
    pub hermiticity_correction: f64,
    /// Largest Choi-matrix residual after reconstructing each map from its `Ã`.
    pub reconstruction_residual: f64,
}

/// Solves `𝓘_{a|x}(ρ) = Σ_{k,l} ⟨φ_l|Ã_{a|x}|φ_k⟩ K_k ρ K_l†` for the dummy POVMs.
pub fn dummy_povms_from_instruments(
    ins: &InstrumentSet,
    dil: &MinimalDilation,
    cfg: &ToleranceConfig,
) -> Result<MeasurementAssemblage> {
    extract_dummy_povms(ins, dil, cfg).map(|e| e.povms)
}

/// [`dummy_povms_from_instruments`] with solve diagnostics.
pub fn extract_dummy_povms(
    ins: &InstrumentSet,
    dil: &MinimalDilation,
    cfg: &ToleranceConfig,
) -> Result<DummyExtraction> {
    if ins.d_in() != dil.d_in() || ins.d_out() != dil.d_out() {
        return Err(Error::DimensionMismatch(format!(
            "instruments map {}→{}, dilation maps {}→{}",
            ins.d_in(),
            ins.d_out(),
            dil.d_in(),
            dil.d_out()
        )));
    }
    let signalling = ins.signalling_deviation();
    if signalling > NONSIGNALLING_TOL {
        return Err(Error::Signalling {
            max_deviation: signalling,
        });
    }
    let target = dil.channel().choi();
    let first = ins.maps().keys().next().expect("validated non-empty");
    let mismatch = ins
        .total_channel(first)
        .expect("known setting")
        .choi()
        .max_abs_diff(&target);
    if mismatch > NONSIGNALLING_TOL {
        return Err(Error::ChannelMismatch {
            max_deviation: mismatch,
        });
    }

    let r = dil.dummy_dim();
    let vecs: Vec<ComplexMatrix> = dil.channel().kraus().iter().map(|k| k.vectorize()).collect();
    // ⟨v_p v_q†, v_k v_l†⟩ = (v_p†v_k)(v_l†v_q)
    let overlaps = ComplexMatrix::from_fn(r, r, |p, k| vecs[p].hs_inner(&vecs[k]));
    let gram = ComplexMatrix::from_fn(r * r, r * r, |row, col| {
        let (p, q) = (row / r, row % r);
        let (k, l) = (col / r, col % r);
        overlaps[(p, k)] * overlaps[(l, q)]
    });
    let gram_condition = condition_number(&gram);
    let gram_inv = invert(&gram)?;

    let mut hermiticity_correction: f64 = 0.0;
    let mut reconstruction_residual: f64 = 0.0;
    let mut settings = Vec::new();
    for (x, outcomes) in ins.settings() {
        let mut effects = BTreeMap::new();
        for (a, kraus) in outcomes {
            let choi = choi_of_kraus(kraus);
            let rhs = ComplexMatrix::from_fn(r * r, 1, |row, _| {
                let (p, q) = (row / r, row % r);
                vecs[p].adjoint().matmul(&choi).matmul(&vecs[q])[(0, 0)]
            });
            let coeffs = gram_inv.matmul(&rhs);
            // Coefficient of v_k v_l† is ⟨φ_l|Ã|φ_k⟩.
            let raw = ComplexMatrix::from_fn(r, r, |l, k| coeffs[(k * r + l, 0)]);
            let rebuilt = choi_from_dummy(&raw, &vecs);
            reconstruction_residual = reconstruction_residual.max(rebuilt.max_abs_diff(&choi));
            hermiticity_correction = hermiticity_correction.max(raw.hermiticity_deviation());
            let effect = raw.hermitian_part();
            let min_eigenvalue = hermitian_eigenvalues(&effect)[0];
            if min_eigenvalue < -cfg.psd_tol {
                return Err(Error::InvalidDummyPovm { min_eigenvalue });
            }
            effects.insert(a.clone(), effect);
        }
        settings.push((x.clone(), effects));
    }
    if reconstruction_residual > NONSIGNALLING_TOL {
        return Err(Error::ChannelMismatch {
            max_deviation: reconstruction_residual,
        });
    }

    let dummy_cfg = ToleranceConfig {
        psd_tol: cfg.psd_tol,
        hermiticity_tol: cfg.hermiticity_tol,
        ..*cfg
    };
    let povms = settings
        .into_iter()
        .map(|(x, effects)| Povm::with_completeness_tol(effects, &dummy_cfg, NONSIGNALLING_TOL).map(|p| (x, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DummyExtraction {
        povms: MeasurementAssemblage::new(povms)?,
        gram_condition,
        ill_conditioned: gram_condition > GRAM_CONDITION_WARN,
        hermiticity_correction,
        reconstruction_residual,
    })
}

fn choi_from_dummy(dummy: &ComplexMatrix, vecs: &[ComplexMatrix]) -> ComplexMatrix {
    let n = vecs[0].rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, vk) in vecs.iter().enumerate() {
        for (l, vl) in vecs.iter().enumerate() {
            out.add_scaled(&ComplexMatrix::outer(vk, vl), dummy[(l, k)]);
        }
    }
    out
}

/// Kraus form of `ρ ↦ Σ_{k,l} ⟨φ_l|E|φ_k⟩ K_k ρ K_l†` for a PSD dummy effect `E`.
///
/// With `E = Σ_j w_j w_j†`, the operators `L_j = Σ_k conj(w_j[k]) K_k` do the job.
/// Works for any Kraus presentation, minimal or not.
pub fn kraus_for_dummy_effect(
    effect: &ComplexMatrix,
    kraus: &[ComplexMatrix],
    cfg: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    let r = kraus.len();
    if effect.rows() != r || effect.cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "dummy effect is {}x{}, dilation has dummy dimension {r}",
            effect.rows(),
            effect.cols()
        )));
    }
    let (d_out, d_in) = kraus[0].shape();
    let eig = eig_hermitian(&effect.hermitian_part(), cfg)?;
    let mut out = Vec::new();
    for (j, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu <= 0.0 {
            continue;
        }
        let w = eig.vector(j).scale(mu.sqrt());
        let mut l = ComplexMatrix::zeros(d_out, d_in);
        for (k, kk) in kraus.iter().enumerate() {
            l.add_scaled(kk, w[(k, 0)].conj());
        }
        out.push(l);
    }
    if out.is_empty() {
        out.push(ComplexMatrix::zeros(d_out, d_in));
    }
    Ok(out)
}

/// Instruments generated by dummy POVMs through an arbitrary Kraus presentation.
///
/// `completeness_tol` bounds the trace-preservation error accepted per setting.
pub fn instruments_from_kraus_presentation(
    m: &MeasurementAssemblage,
    kraus: &[ComplexMatrix],
    cfg: &ToleranceConfig,
    completeness_tol: f64,
) -> Result<InstrumentSet> {
    let mut maps = InstrumentMaps::new();
    for (x, povm) in m.settings() {
        let mut outs = BTreeMap::new();
        for (a, e) in povm.effects() {
            outs.insert(a.clone(), kraus_for_dummy_effect(e, kraus, cfg)?);
        }
        maps.insert(x.clone(), outs);
    }
    let check = ToleranceConfig {
        equality_tol: completeness_tol,
        ..*cfg
    };
    InstrumentSet::new(maps, &check)
}

/// `𝓘_{a|x}(ρ) = tr_𝒜[(Ã_{a|x} ⊗ 1) V ρ V†]` for POVMs on the dummy space.
pub fn instruments_from_dummy_povms(
    m: &MeasurementAssemblage,
    dil: &MinimalDilation,
    cfg: &ToleranceConfig,
) -> Result<InstrumentSet> {
    if m.dim() != dil.dummy_dim() {
        return Err(Error::DimensionMismatch(format!(
            "dummy POVMs of dimension {} for a dilation with r = {}",
            m.dim(),
            dil.dummy_dim()
        )));
    }
    instruments_from_kraus_presentation(m, dil.channel().kraus(), cfg, NONSIGNALLING_TOL)
}

/// `𝓘(ρ) = tr_𝒜[(E ⊗ 1) V ρ V†]` evaluated directly from the isometry.
pub fn dilated_action(iso: &Isometry, effect: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let big = iso.dilate(rho);
    let weighted = crate::linalg::tensor(effect, &ComplexMatrix::identity(iso.d_out())).matmul(&big);
    crate::linalg::partial_trace(&weighted, (iso.dummy_dim(), iso.d_out()), crate::linalg::Subsystem::B)
        .expect("dilation dimensions are consistent")
}

/// Canonical purification `(1 ⊗ ρ^{1/2}) Σ_i |i⟩|i⟩` of a state, restricted to its support.
#[derive(Debug, Clone)]
pub struct Purification {
    /// Unit vector on `ℂ^r ⊗ ℂ^d`, dummy factor first.
    pub psi: ComplexMatrix,
    /// Dummy basis vector `|i⟩` corresponds to eigenvector column `i` of this `d×r` matrix.
    pub eigenbasis: ComplexMatrix,
    pub eigenvalues: Vec<f64>,
}

impl Purification {
    pub fn support_dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub fn canonical_purification(rho_b: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<Purification> {
    let eig = crate::linalg::psd_eigen(rho_b, cfg)?;
    let d = rho_b.rows();
    let support: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > cfg.support_tol).collect();
    let r = support.len();
    let eigenbasis = ComplexMatrix::from_fn(d, r, |row, c| eig.eigenvectors[(row, support[c])]);
    let eigenvalues: Vec<f64> = support.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut psi = ComplexMatrix::zeros(r * d, 1);
    for (i, &lam) in eigenvalues.iter().enumerate() {
        for row in 0..d {
            psi[(i * d + row, 0)] = eigenbasis[(row, i)] * lam.sqrt();
        }
    }
    let norm = psi.frobenius_norm();
    psi = psi.scale(1.0 / norm);
    Ok(Purification {
        psi,
        eigenbasis,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, Subsystem};
    use num_complex::Complex64;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    use crate::random::{random_channel, random_density_matrix, random_measurement_assemblage, rng_from_seed};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]])
    }

    #[test]
    fn redundant_unitary_channel_reduces_to_one_kraus() {
        let u = hadamard();
        let half = u.scale(std::f64::consts::FRAC_1_SQRT_2);
        let ch = KrausChannel::new(vec![half.clone(), half], &cfg()).unwrap();
        assert!(matches!(
            build_isometry(&ch, &cfg()),
            Err(Error::NotMinimal {
                rank: 1,
                kraus_count: 2
            })
        ));
        let min = minimal_kraus(&ch, &cfg()).unwrap();
        assert_eq!(min.kraus().len(), 1);
        // Same action up to a global phase on the single operator.
        assert!(min.choi().max_abs_diff(&ch.choi()) < 1e-12);
        let k = &min.kraus()[0];
        let overlap = k.hs_inner(&u).norm();
        assert!((overlap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_dilation() {
        let dil = MinimalDilation::of_channel(&KrausChannel::identity(3), &cfg()).unwrap();
        assert_eq!(dil.dummy_dim(), 1);
        assert!(dil.isometry().matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn dephasing_has_two_kraus() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ch = KrausChannel::new(
            vec![ComplexMatrix::identity(2).scale(h), ComplexMatrix::pauli_z().scale(h)],
            &cfg(),
        )
        .unwrap();
        let min = minimal_kraus(&ch, &cfg()).unwrap();
        assert_eq!(min.kraus().len(), 2);
        assert!(min.choi().max_abs_diff(&ch.choi()) < 1e-10);
        let ip = min.kraus()[0].hs_inner(&min.kraus()[1]).norm();
        assert!(ip < 1e-12);
    }

    #[test]
    fn diagonal_projector_channel_isometry() {
        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        let ch = KrausChannel::new(vec![p0, p1], &cfg()).unwrap();
        let dil = MinimalDilation::from_independent_kraus(ch, &cfg()).unwrap();
        let v = dil.isometry().matrix();
        assert_eq!(v.shape(), (4, 2));
        // V|0⟩ = |φ_0⟩|0⟩ = e_0, V|1⟩ = |φ_1⟩|1⟩ = e_3.
        let mut expected = ComplexMatrix::zeros(4, 2);
        expected[(0, 0)] = Complex64::new(1.0, 0.0);
        expected[(3, 1)] = Complex64::new(1.0, 0.0);
        assert_eq!(v.max_abs_diff(&expected), 0.0);
    }

    #[test]
    fn isometry_reproduces_channel() {
        let mut rng = rng_from_seed(5);
        for r in 1..=4 {
            let ch = random_channel(2, 3, r, &mut rng);
            let dil = MinimalDilation::of_channel(&ch, &cfg()).unwrap();
            assert_eq!(dil.dummy_dim(), r);
            assert_eq!(choi_rank(&ch, &cfg()), r);
            let v = dil.isometry().matrix();
            assert!(v.adjoint().matmul(v).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-10);
            let rho = random_density_matrix(2, 2, &mut rng);
            let via_v = partial_trace(&dil.isometry().dilate(&rho), (r, 3), Subsystem::B).unwrap();
            assert!(via_v.max_abs_diff(&ch.apply_matrix(&rho)) < 1e-10);
        }
    }

    #[test]
    fn projective_luders_has_selector_dummies() {
        // Lüders instrument of the computational measurement; its projectors are
        // the minimal Kraus operators of the total (dephasing) channel.
        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        let ch = KrausChannel::new(vec![p0.clone(), p1.clone()], &cfg()).unwrap();
        let dil = MinimalDilation::from_independent_kraus(ch, &cfg()).unwrap();
        let mut maps = InstrumentMaps::new();
        maps.insert(
            "z".into(),
            [("0".to_string(), vec![p0]), ("1".to_string(), vec![p1])]
                .into_iter()
                .collect(),
        );
        let ins = InstrumentSet::new(maps, &cfg()).unwrap();
        let dummies = dummy_povms_from_instruments(&ins, &dil, &cfg()).unwrap();
        let z = dummies.setting("z").unwrap();
        assert!(
            z.effect("0")
                .unwrap()
                .max_abs_diff(&ComplexMatrix::from_diagonal(&[1.0, 0.0]))
                < 1e-12
        );
        assert!(
            z.effect("1")
                .unwrap()
                .max_abs_diff(&ComplexMatrix::from_diagonal(&[0.0, 1.0]))
                < 1e-12
        );
    }

    #[test]
    fn uniform_dummies_give_scaled_channel() {
        let mut rng = rng_from_seed(6);
        let ch = random_channel(2, 2, 3, &mut rng);
        let dil = MinimalDilation::of_channel(&ch, &cfg()).unwrap();
        let third = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        let povm = Povm::new((0..3).map(|i| (i.to_string(), third.clone())), &cfg()).unwrap();
        let m = MeasurementAssemblage::new([("x".to_string(), povm)]).unwrap();
        let ins = instruments_from_dummy_povms(&m, &dil, &cfg()).unwrap();
        let rho = random_density_matrix(2, 2, &mut rng);
        let full = ch.apply_matrix(&rho);
        for a in ["0", "1", "2"] {
            let k = ins.kraus("x", a).unwrap();
            let part = KrausChannel::from_parts_unchecked(k.to_vec()).apply_matrix(&rho);
            assert!(part.max_abs_diff(&full.scale(1.0 / 3.0)) < 1e-12);
        }
    }

    #[test]
    fn dummy_roundtrip() {
        let mut rng = rng_from_seed(7);
        for r in 1..=3 {
            let ch = random_channel(2, 2, r, &mut rng);
            let dil = MinimalDilation::of_channel(&ch, &cfg()).unwrap();
            let m = random_measurement_assemblage(r, 2, 3, &mut rng);
            let ins = instruments_from_dummy_povms(&m, &dil, &cfg()).unwrap();
            let back = extract_dummy_povms(&ins, &dil, &cfg()).unwrap();
            assert!(!back.ill_conditioned);
            for ((_, p), (_, q)) in m.settings().zip(back.povms.settings()) {
                for ((_, e), (_, f)) in p.effects().zip(q.effects()) {
                    assert!(e.max_abs_diff(f) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn dilated_action_matches_kraus_form() {
        let mut rng = rng_from_seed(8);
        let ch = random_channel(3, 2, 3, &mut rng);
        let dil = MinimalDilation::of_channel(&ch, &cfg()).unwrap();
        let m = random_measurement_assemblage(3, 1, 2, &mut rng);
        let ins = instruments_from_dummy_povms(&m, &dil, &cfg()).unwrap();
        let rho = random_density_matrix(3, 3, &mut rng);
        let (x, povm) = m.settings().next().unwrap();
        for (a, e) in povm.effects() {
            let via_iso = dilated_action(dil.isometry(), e, &rho);
            let via_kraus = KrausChannel::from_parts_unchecked(ins.kraus(x, a).unwrap().to_vec()).apply_matrix(&rho);
            assert!(via_iso.max_abs_diff(&via_kraus) < 1e-12);
        }
    }

    #[test]
    fn extraction_rejects_signalling_and_mismatch() {
        let m = MeasurementAssemblage::noisy_paulis(2, 0.9).unwrap();
        let ins = crate::qobjects::luders_instruments(&m).unwrap();
        let total = ins.total_channel("x").unwrap();
        let dil = MinimalDilation::of_channel(&total, &cfg()).unwrap();
        assert!(matches!(
            extract_dummy_povms(&ins, &dil, &cfg()),
            Err(Error::Signalling { .. })
        ));

        let ident = MinimalDilation::of_channel(&KrausChannel::identity(2), &cfg()).unwrap();
        let single = m.restrict(&["x"]).unwrap();
        let ins = crate::qobjects::luders_instruments(&single).unwrap();
        assert!(matches!(
            extract_dummy_povms(&ins, &ident, &cfg()),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn purification_marginals() {
        let p = canonical_purification(&ComplexMatrix::identity(2).scale(0.5), &cfg()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = ComplexMatrix::column(&[Complex64::new(h, 0.0), zero(), zero(), Complex64::new(h, 0.0)]);
        assert!(p.psi.max_abs_diff(&expected) < 1e-12);

        let p = canonical_purification(&ComplexMatrix::from_diagonal(&[1.0, 0.0]), &cfg()).unwrap();
        assert_eq!(p.support_dim(), 1);
        let marg = partial_trace(&ComplexMatrix::projector(&p.psi), (1, 2), Subsystem::B).unwrap();
        assert!(marg.max_abs_diff(&ComplexMatrix::from_diagonal(&[1.0, 0.0])) < 1e-12);

        let mut rng = rng_from_seed(9);
        let rho = random_density_matrix(3, 3, &mut rng);
        let p = canonical_purification(&rho, &cfg()).unwrap();
        assert!((p.psi.frobenius_norm() - 1.0).abs() < 1e-12);
        let marg = partial_trace(&ComplexMatrix::projector(&p.psi), (3, 3), Subsystem::B).unwrap();
        assert!(marg.max_abs_diff(&rho) < 1e-10);
    }
}
