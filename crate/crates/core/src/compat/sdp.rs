//! Primal-dual interior-point method for small block-diagonal complex SDPs.
//!
//! Primal:  minimise `Σ_j ⟨C_j, X_j⟩`  s.t.  `Σ_j ⟨A_ij, X_j⟩ = b_i`,  `X_j ⪰ 0`.
//! Dual:    maximise `bᵀy`  s.t.  `Z_j = C_j − Σ_i y_i A_ij ⪰ 0`.
//!
//! Blocks are Hermitian; constraint coefficients are Hermitian and are
//! referenced by id from a shared pool, so blocks that repeat the same
//! coefficient (typical for deterministic-strategy parents) reuse work.
//! Search directions are HKM with a Mehrotra predictor-corrector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, hermitian_eigenvalues, invert_hpd, invert_lower, ComplexMatrix};
use crate::parallel::{accumulate, map_range, min_over, Parallelism};

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub max_iter: usize,
    /// Relative duality gap and scaled residual threshold.
    pub tol: f64,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
    pub parallelism: Parallelism,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-9,
            step_fraction: 0.98,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockSdp {
    block_dims: Vec<usize>,
    costs: Vec<ComplexMatrix>,
    rhs: Vec<f64>,
    coefficients: Vec<ComplexMatrix>,
    /// Per block: `(constraint index, coefficient id)`.
    entries: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<ComplexMatrix>,
    pub z: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    /// `‖b − 𝒜(X)‖_∞`.
    pub primal_residual: f64,
    /// `max_j ‖C_j − Z_j − 𝒜*(y)_j‖_∞`.
    pub dual_residual: f64,
    /// `|pobj − dobj|`.
    pub gap: f64,
}

impl BlockSdp {
    pub fn new(block_dims: Vec<usize>, num_constraints: usize) -> Self {
        let costs = block_dims.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        let entries = vec![Vec::new(); block_dims.len()];
        Self {
            block_dims,
            costs,
            rhs: vec![0.0; num_constraints],
            coefficients: Vec::new(),
            entries,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn set_cost(&mut self, block: usize, c: ComplexMatrix) {
        assert_eq!(c.rows(), self.block_dims[block]);
        self.costs[block] = c;
    }

    pub fn set_rhs(&mut self, constraint: usize, value: f64) {
        self.rhs[constraint] = value;
    }

    pub fn add_coefficient(&mut self, c: ComplexMatrix) -> usize {
        self.coefficients.push(c);
        self.coefficients.len() - 1
    }

    pub fn add_entry(&mut self, block: usize, constraint: usize, coefficient: usize) {
        debug_assert_eq!(self.coefficients[coefficient].rows(), self.block_dims[block]);
        self.entries[block].push((constraint, coefficient));
    }

    fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// `𝒜(X)_i = Σ_j Re tr(A_ij X_j)`
    fn apply_a(&self, x: &[ComplexMatrix], mode: Parallelism) -> Vec<f64> {
        accumulate(self.num_blocks(), self.num_constraints(), mode, |acc, j| {
            for &(i, c) in &self.entries[j] {
                acc[i] += self.coefficients[c].trace_product_re(&x[j]);
            }
        })
    }

    /// `𝒜*(y)_j = Σ_i y_i A_ij`
    fn apply_at(&self, y: &[f64], mode: Parallelism) -> Vec<ComplexMatrix> {
        map_range(self.num_blocks(), mode, |j| {
            let n = self.block_dims[j];
            let mut out = ComplexMatrix::zeros(n, n);
            for &(i, c) in &self.entries[j] {
                if y[i] != 0.0 {
                    out.add_scaled(&self.coefficients[c], num_complex::Complex64::new(y[i], 0.0));
                }
            }
            out
        })
    }

    /// Schur complement `M_ik = Re tr(A_i X A_k Z^{-1})`, summed over blocks.
    fn normal_matrix(&self, x: &[ComplexMatrix], zinv: &[ComplexMatrix], mode: Parallelism) -> Vec<f64> {
        let m = self.num_constraints();
        accumulate(self.num_blocks(), m * m, mode, |acc, j| {
            let entries = &self.entries[j];
            if entries.is_empty() {
                return;
            }
            let mut ids: Vec<usize> = entries.iter().map(|&(_, c)| c).collect();
            ids.sort_unstable();
            ids.dedup();
            let prods: Vec<ComplexMatrix> = ids
                .iter()
                .map(|&c| x[j].matmul(&self.coefficients[c]).matmul(&zinv[j]))
                .collect();
            let u = ids.len();
            let mut table = vec![0.0; u * u];
            for (p, &cp) in ids.iter().enumerate() {
                for (q, prod) in prods.iter().enumerate() {
                    table[p * u + q] = self.coefficients[cp].trace_product_re(prod);
                }
            }
            let slot = |c: usize| ids.binary_search(&c).expect("id present");
            let slots: Vec<(usize, usize)> = entries.iter().map(|&(i, c)| (i, slot(c))).collect();
            for &(i, si) in &slots {
                for &(k, sk) in &slots {
                    acc[i * m + k] += table[si * u + sk];
                }
            }
        })
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        let mode = opts.parallelism;
        let nb = self.num_blocks();
        let m = self.num_constraints();
        let total = self.total_dim() as f64;
        let b_scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let c_scale = 1.0 + self.costs.iter().fold(0.0f64, |a, c| a.max(c.max_abs()));

        let mut x: Vec<ComplexMatrix> = self.block_dims.iter().map(|&n| ComplexMatrix::identity(n)).collect();
        let mut z = x.clone();
        let mut y = vec![0.0; m];

        let mut last = None;
        for iter in 0..=opts.max_iter {
            let ax = self.apply_a(&x, mode);
            let rp: Vec<f64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let aty = self.apply_at(&y, mode);
            let rd: Vec<ComplexMatrix> = (0..nb).map(|j| &(&self.costs[j] - &z[j]) - &aty[j]).collect();

            let pobj: f64 = (0..nb).map(|j| self.costs[j].trace_product_re(&x[j])).sum();
            let dobj: f64 = self.rhs.iter().zip(&y).map(|(b, v)| b * v).sum();
            let xz: f64 = (0..nb).map(|j| x[j].trace_product_re(&z[j])).sum();
            let mu = xz / total;
            let primal_residual = rp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let dual_residual = rd.iter().fold(0.0f64, |a, r| a.max(r.max_abs()));
            let gap = (pobj - dobj).abs();
            let rel_gap = gap.max(xz.abs()) / (1.0 + pobj.abs() + dobj.abs());

            let converged =
                primal_residual / b_scale < opts.tol && dual_residual / c_scale < opts.tol && rel_gap < opts.tol;
            last = Some((iter, primal_residual, dual_residual, gap));
            if converged {
                return Ok(SdpSolution {
                    x,
                    z,
                    y,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    iterations: iter,
                    primal_residual,
                    dual_residual,
                    gap,
                });
            }
            if iter == opts.max_iter {
                break;
            }

            let zinv: Vec<ComplexMatrix> = match map_range(nb, mode, |j| invert_hpd(&z[j]))
                .into_iter()
                .collect::<Option<Vec<_>>>()
            {
                Some(v) => v,
                None => break,
            };
            let normal = self.normal_matrix(&x, &zinv, mode);
            let Some(solver) = NormalSolver::new(normal, m) else {
                break;
            };

            // Predictor.
            let xrz: Vec<ComplexMatrix> = map_range(nb, mode, |j| x[j].matmul(&rd[j]).matmul(&zinv[j]));
            let k_aff: Vec<ComplexMatrix> = (0..nb).map(|j| -&(&x[j] + &xrz[j])).collect();
            let (dx_aff, _, dz_aff) = self.direction(&solver, &rp, &rd, &k_aff, &x, &zinv, mode);
            let ap = max_step_all(&x, &dx_aff, mode).min(1.0);
            let ad = max_step_all(&z, &dz_aff, mode).min(1.0);
            let mu_aff: f64 = (0..nb)
                .map(|j| {
                    let xa = &x[j] + &dx_aff[j].scale(ap);
                    let za = &z[j] + &dz_aff[j].scale(ad);
                    xa.trace_product_re(&za)
                })
                .sum::<f64>()
                / total;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let corr: Vec<ComplexMatrix> = map_range(nb, mode, |j| dx_aff[j].matmul(&dz_aff[j]).matmul(&zinv[j]));
            let k_cor: Vec<ComplexMatrix> = (0..nb)
                .map(|j| {
                    let mut k = zinv[j].scale(sigma * mu);
                    k -= &x[j];
                    k -= &xrz[j];
                    k -= &corr[j];
                    k
                })
                .collect();
            let (dx, dy, dz) = self.direction(&solver, &rp, &rd, &k_cor, &x, &zinv, mode);
            let ap = (opts.step_fraction * max_step_all(&x, &dx, mode)).min(1.0);
            let ad = (opts.step_fraction * max_step_all(&z, &dz, mode)).min(1.0);
            if ap <= 1e-14 && ad <= 1e-14 {
                break;
            }
            for j in 0..nb {
                x[j].add_scaled(&dx[j], num_complex::Complex64::new(ap, 0.0));
                x[j] = x[j].hermitian_part();
                z[j].add_scaled(&dz[j], num_complex::Complex64::new(ad, 0.0));
                z[j] = z[j].hermitian_part();
            }
            for (yi, di) in y.iter_mut().zip(&dy) {
                *yi += ad * di;
            }
        }
        let (iterations, primal_residual, dual_residual, gap) = last.unwrap_or((0, f64::NAN, f64::NAN, f64::NAN));
        Err(Error::SolverNotConverged {
            iterations,
            primal_residual,
            dual_residual,
            gap,
        })
    }

    /// Solves for `(ΔX, Δy, ΔZ)` given `K` with `ΔX = K + X 𝒜*(Δy) Z^{-1}`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        solver: &NormalSolver,
        rp: &[f64],
        rd: &[ComplexMatrix],
        k: &[ComplexMatrix],
        x: &[ComplexMatrix],
        zinv: &[ComplexMatrix],
        mode: Parallelism,
    ) -> (Vec<ComplexMatrix>, Vec<f64>, Vec<ComplexMatrix>) {
        let ak = self.apply_a(k, mode);
        let rhs: Vec<f64> = rp.iter().zip(&ak).map(|(r, a)| r - a).collect();
        let dy = solver.solve(&rhs);
        let aty = self.apply_at(&dy, mode);
        let dz: Vec<ComplexMatrix> = (0..self.num_blocks()).map(|j| &rd[j] - &aty[j]).collect();
        let dx: Vec<ComplexMatrix> = map_range(self.num_blocks(), mode, |j| {
            let mut d = k[j].clone();
            d += &x[j].matmul(&aty[j]).matmul(&zinv[j]);
            d.hermitian_part()
        });
        (dx, dy, dz)
    }
}

enum NormalSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl NormalSolver {
    fn new(mut data: Vec<f64>, m: usize) -> Option<Self> {
        // Symmetrise; the HKM Schur complement is symmetric only up to rounding.
        for i in 0..m {
            for k in (i + 1)..m {
                let v = 0.5 * (data[i * m + k] + data[k * m + i]);
                data[i * m + k] = v;
                data[k * m + i] = v;
            }
        }
        let mat = DMatrix::from_row_slice(m, m, &data);
        if let Some(ch) = mat.clone().cholesky() {
            return Some(NormalSolver::Cholesky(ch));
        }
        let max_diag = (0..m).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max);
        let mut reg = mat.clone();
        for i in 0..m {
            reg[(i, i)] += 1e-13 * max_diag.max(1.0);
        }
        if let Some(ch) = reg.cholesky() {
            return Some(NormalSolver::Cholesky(ch));
        }
        let lu = mat.lu();
        if lu.is_invertible() {
            Some(NormalSolver::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        let sol = match self {
            NormalSolver::Cholesky(ch) => ch.solve(&b),
            NormalSolver::Lu(lu) => lu.solve(&b).unwrap_or_else(|| DVector::zeros(rhs.len())),
        };
        sol.iter().copied().collect()
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0` (may be `+∞`).
fn max_step(x: &ComplexMatrix, dx: &ComplexMatrix) -> f64 {
    if x.rows() == 1 {
        let d = dx[(0, 0)].re;
        return if d < 0.0 { -x[(0, 0)].re / d } else { f64::INFINITY };
    }
    let Some(l) = cholesky(x) else {
        return 0.0;
    };
    let linv = invert_lower(&l);
    let w = linv.matmul(dx).matmul(&linv.adjoint());
    let lmin = hermitian_eigenvalues(&w)[0];
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn max_step_all(x: &[ComplexMatrix], dx: &[ComplexMatrix], mode: Parallelism) -> f64 {
    min_over(x.len(), mode, |j| max_step(&x[j], &dx[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_basis;
    use num_complex::Complex64;

    fn opts() -> SdpOptions {
        SdpOptions::default()
    }

    #[test]
    fn linear_program_as_diagonal_blocks() {
        // min x1 + 2 x2  s.t. x1 + x2 = 1, x ≥ 0  →  x = (1, 0), value 1.
        let mut sdp = BlockSdp::new(vec![1, 1], 1);
        sdp.set_cost(0, ComplexMatrix::from_diagonal(&[1.0]));
        sdp.set_cost(1, ComplexMatrix::from_diagonal(&[2.0]));
        let one = sdp.add_coefficient(ComplexMatrix::from_diagonal(&[1.0]));
        sdp.add_entry(0, 0, one);
        sdp.add_entry(1, 0, one);
        sdp.set_rhs(0, 1.0);
        let sol = sdp.solve(&opts()).unwrap();
        assert!((sol.primal_objective - 1.0).abs() < 1e-8);
        assert!((sol.x[0][(0, 0)].re - 1.0).abs() < 1e-7);
        assert!((sol.y[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn minimum_eigenvalue_sdp() {
        // min ⟨C, X⟩ s.t. tr X = 1, X ⪰ 0 has value λ_min(C).
        let i = Complex64::new(0.0, 1.0);
        let c = ComplexMatrix::from_fn(3, 3, |r, k| match (r, k) {
            (0, 0) => Complex64::new(2.0, 0.0),
            (1, 1) => Complex64::new(1.0, 0.0),
            (2, 2) => Complex64::new(3.0, 0.0),
            (0, 1) => 0.5 * i,
            (1, 0) => -0.5 * i,
            (1, 2) => Complex64::new(0.3, 0.0),
            (2, 1) => Complex64::new(0.3, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let expected = hermitian_eigenvalues(&c)[0];
        for mode in [Parallelism::Sequential, Parallelism::Rayon] {
            let mut sdp = BlockSdp::new(vec![3], 1);
            sdp.set_cost(0, c.clone());
            let id = sdp.add_coefficient(ComplexMatrix::identity(3));
            sdp.add_entry(0, 0, id);
            sdp.set_rhs(0, 1.0);
            let sol = sdp
                .solve(&SdpOptions {
                    parallelism: mode,
                    ..opts()
                })
                .unwrap();
            assert!(
                (sol.primal_objective - expected).abs() < 1e-8,
                "{}",
                sol.primal_objective
            );
            assert!((sol.dual_objective - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn hermitian_equality_constraints() {
        // X ⪰ 0 with X fixed entrywise to a PSD target; any cost gives that X.
        let target = ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => Complex64::new(0.7, 0.0),
            (1, 1) => Complex64::new(0.3, 0.0),
            (0, 1) => Complex64::new(0.1, 0.2),
            _ => Complex64::new(0.1, -0.2),
        });
        let basis = hermitian_basis(2);
        let mut sdp = BlockSdp::new(vec![2], 4);
        for (k, e) in basis.iter().enumerate() {
            let id = sdp.add_coefficient(e.clone());
            sdp.add_entry(0, k, id);
            sdp.set_rhs(k, e.trace_product_re(&target));
        }
        let sol = sdp.solve(&opts()).unwrap();
        assert!(sol.x[0].max_abs_diff(&target) < 1e-8);
    }

    #[test]
    fn infeasible_problem_does_not_converge() {
        // tr X = -1 with X ⪰ 0 has no solution.
        let mut sdp = BlockSdp::new(vec![2], 1);
        let id = sdp.add_coefficient(ComplexMatrix::identity(2));
        sdp.add_entry(0, 0, id);
        sdp.set_rhs(0, -1.0);
        assert!(matches!(
            sdp.solve(&SdpOptions { max_iter: 60, ..opts() }),
            Err(Error::SolverNotConverged { .. })
        ));
    }
}
