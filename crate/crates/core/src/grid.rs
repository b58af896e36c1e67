//! Periodic box discretization and spectral field operations.
//!
//! Fields live on a uniform grid over `[0, L_1) x ... x [0, L_d)` with
//! periodic boundary conditions. Differential operators act in Fourier
//! space with wavenumbers `k_j = (2 pi / L_j) * m`, `m in {-N_j/2, ..., N_j/2 - 1}`;
//! integrals use the periodic rectangle rule, which is spectrally accurate
//! for smooth periodic integrands and exact for constants.

use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Ceiling on total grid points so a misconfigured scenario cannot
/// exhaust memory (16M points = 128 MiB per field).
pub const DEFAULT_POINT_BUDGET: usize = 1 << 24;

/// Uniform periodic grid in 1, 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    total: usize,
}

impl Grid {
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Arc<Grid>> {
        Grid::with_point_budget(points, lengths, DEFAULT_POINT_BUDGET)
    }

    pub fn with_point_budget(
        points: &[usize],
        lengths: &[f64],
        budget: usize,
    ) -> Result<Arc<Grid>> {
        let dim = points.len();
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} point counts but {} lengths",
                dim,
                lengths.len()
            )));
        }
        let mut total: usize = 1;
        for (axis, (&n, &l)) in points.iter().zip(lengths).enumerate() {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need an even point count >= 8, got {n}"
                )));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: box length must be positive and finite, got {l}"
                )));
            }
            total = total.checked_mul(n).ok_or_else(|| {
                Error::InvalidGrid("total point count overflows usize".into())
            })?;
        }
        if total > budget {
            return Err(Error::InvalidGrid(format!(
                "total point count {total} exceeds the memory budget of {budget}"
            )));
        }
        let spacing = points
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| l / n as f64)
            .collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * points[a + 1];
        }
        Ok(Arc::new(Grid {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
            spacing,
            strides,
            total,
        }))
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn total_points(&self) -> usize {
        self.total
    }

    /// Cell volume `prod h_i`, the quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Coordinate of the sample with flat index `flat` along `axis`.
    pub fn coord(&self, flat: usize, axis: usize) -> f64 {
        let idx = (flat / self.strides[axis]) % self.points[axis];
        idx as f64 * self.spacing[axis]
    }

    /// Angular wavenumbers along `axis` in FFT storage order.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let scale = 2.0 * std::f64::consts::PI / self.lengths[axis];
        (0..n)
            .map(|m| {
                let signed = if m < n / 2 {
                    m as isize
                } else {
                    m as isize - n as isize
                };
                scale * signed as f64
            })
            .collect()
    }
}

/// Neumaier compensated summation; deterministic and robust to cancellation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Quadratures over finite fields can still overflow (squares of huge
/// values); map any non-finite result to the `+inf` overflow sentinel.
#[inline]
fn sentinel_if_overflowed(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if inverse {
        p.plan_fft_inverse(len)
    } else {
        p.plan_fft_forward(len)
    }
}

/// In-place FFT along one axis of a row-major multi-dimensional buffer.
fn fft_axis(buf: &mut [Complex<f64>], grid: &Grid, axis: usize, inverse: bool) {
    let n = grid.points[axis];
    let inner = grid.strides[axis];
    let outer = grid.total / (n * inner);
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    if inner == 1 {
        // Lines along the last axis are contiguous: one chunked pass.
        fft.process_with_scratch(buf, &mut scratch);
        return;
    }
    let mut line = vec![Complex::default(); n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (j, l) in line.iter_mut().enumerate() {
                *l = buf[base + j * inner];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (j, l) in line.iter().enumerate() {
                buf[base + j * inner] = *l;
            }
        }
    }
}

fn fft_nd(values: &[f64], grid: &Grid) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    for axis in 0..grid.dim() {
        fft_axis(&mut buf, grid, axis, false);
    }
    buf
}

fn ifft_nd_real(mut buf: Vec<Complex<f64>>, grid: &Grid) -> Vec<f64> {
    for axis in 0..grid.dim() {
        fft_axis(&mut buf, grid, axis, true);
    }
    let norm = 1.0 / grid.total as f64;
    buf.iter().map(|c| c.re * norm).collect()
}

/// Visit every Fourier mode with its squared wavenumber `|k|^2`.
fn for_each_mode_k2(grid: &Grid, mut f: impl FnMut(usize, f64)) {
    let k2: Vec<Vec<f64>> = (0..grid.dim())
        .map(|a| grid.wavenumbers(a).iter().map(|k| k * k).collect())
        .collect();
    match grid.dim() {
        1 => {
            for (i, &k) in k2[0].iter().enumerate() {
                f(i, k);
            }
        }
        2 => {
            let mut flat = 0;
            for &ka in &k2[0] {
                for &kb in &k2[1] {
                    f(flat, ka + kb);
                    flat += 1;
                }
            }
        }
        3 => {
            let mut flat = 0;
            for &ka in &k2[0] {
                for &kb in &k2[1] {
                    for &kc in &k2[2] {
                        f(flat, ka + kb + kc);
                        flat += 1;
                    }
                }
            }
        }
        _ => unreachable!("grid dimension checked at construction"),
    }
}

/// Real scalar samples of one field on a [`Grid`].
///
/// The values are finite unless the field is flagged overflowed, which is
/// the terminal state a simulation reaches at blow-up. Operations on
/// overflowed fields either propagate the flag or return the documented
/// sentinel; differential operators refuse them outright.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    overflowed: bool,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.total_points()],
            overflowed: false,
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Result<ScalarField> {
        if !c.is_finite() {
            return Err(Error::NonFinite("constant field value".into()));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.total_points()],
            overflowed: false,
        })
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.total_points() {
            return Err(Error::InvalidGrid(format!(
                "value buffer has {} entries, grid has {}",
                values.len(),
                grid.total_points()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            overflowed: false,
        })
    }

    /// Sample `f` at every grid point; `f` receives the coordinates.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
        let dim = grid.dim();
        let mut coords = [0.0f64; 3];
        let mut values = Vec::with_capacity(grid.total_points());
        for flat in 0..grid.total_points() {
            for (a, c) in coords[..dim].iter_mut().enumerate() {
                *c = grid.coord(flat, a);
            }
            values.push(f(&coords[..dim]));
        }
        ScalarField::from_values(grid, values)
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>, overflowed: bool) -> ScalarField {
        debug_assert_eq!(values.len(), grid.total_points());
        ScalarField {
            grid,
            values,
            overflowed,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_overflowed(&self) -> bool {
        self.overflowed
    }

    /// A copy carrying the overflow flag; marks blow-up terminal states.
    pub(crate) fn with_overflow_flag(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.clone(),
            overflowed: true,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn assert_same_grid(&self, other: &ScalarField) {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid,
            "fields entering a binary operation must share an identical grid"
        );
    }

    /// `prod(h_i) * sum(values)`: the periodic rectangle rule.
    /// Returns `+inf` when the field is flagged overflowed.
    pub fn integrate(&self) -> f64 {
        if self.overflowed {
            return f64::INFINITY;
        }
        sentinel_if_overflowed(
            self.grid.cell_volume() * compensated_sum(self.values.iter().copied()),
        )
    }

    /// Integral of `self * other`.
    pub fn dot_integral(&self, other: &ScalarField) -> f64 {
        self.assert_same_grid(other);
        if self.overflowed || other.overflowed {
            return f64::INFINITY;
        }
        sentinel_if_overflowed(
            self.grid.cell_volume()
                * compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b)),
        )
    }

    /// Integral of `self^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        if self.overflowed {
            return f64::INFINITY;
        }
        sentinel_if_overflowed(
            self.grid.cell_volume() * compensated_sum(self.values.iter().map(|v| v * v)),
        )
    }

    /// Integral of `weight * self^2`.
    pub fn weighted_l2_sq(&self, weight: &ScalarField) -> f64 {
        self.assert_same_grid(weight);
        if self.overflowed || weight.overflowed {
            return f64::INFINITY;
        }
        sentinel_if_overflowed(
            self.grid.cell_volume()
                * compensated_sum(
                    self.values
                        .iter()
                        .zip(&weight.values)
                        .map(|(v, w)| w * v * v),
                ),
        )
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let mut finite = true;
        let values: Vec<f64> = self
            .values
            .iter()
            .map(|&v| {
                let r = f(v);
                finite &= r.is_finite();
                r
            })
            .collect();
        ScalarField::from_raw(self.grid.clone(), values, self.overflowed || !finite)
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        self.assert_same_grid(other);
        let mut finite = true;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| {
                let r = f(a, b);
                finite &= r.is_finite();
                r
            })
            .collect();
        ScalarField::from_raw(
            self.grid.clone(),
            values,
            self.overflowed || other.overflowed || !finite,
        )
    }

    fn reject_overflowed(&self, what: &str) -> Result<()> {
        if self.overflowed {
            Err(Error::NonFinite(what.into()))
        } else {
            Ok(())
        }
    }

    /// Periodic spectral Laplacian: each Fourier mode is multiplied by
    /// `-|k|^2`; the output is real (the imaginary residue is discarded).
    pub fn laplacian(&self) -> Result<ScalarField> {
        self.reject_overflowed("laplacian input")?;
        let mut spec = fft_nd(&self.values, &self.grid);
        for_each_mode_k2(&self.grid, |flat, k2| {
            spec[flat] *= -k2;
        });
        let values = ifft_nd_real(spec, &self.grid);
        Ok(ScalarField::from_raw(self.grid.clone(), values, false))
    }

    /// Spectral partial derivative along `axis`. The Nyquist mode is
    /// zeroed, the standard convention for real fields.
    pub fn derivative(&self, axis: usize) -> Result<ScalarField> {
        self.reject_overflowed("derivative input")?;
        if axis >= self.grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "derivative axis {axis} out of range for dim {}",
                self.grid.dim()
            )));
        }
        let mut spec = fft_nd(&self.values, &self.grid);
        let ks = self.grid.wavenumbers(axis);
        let n = self.grid.points()[axis];
        let inner = self.grid.strides[axis];
        for (flat, c) in spec.iter_mut().enumerate() {
            let idx = (flat / inner) % n;
            let k = if idx == n / 2 { 0.0 } else { ks[idx] };
            *c *= Complex::new(0.0, k);
        }
        let values = ifft_nd_real(spec, &self.grid);
        Ok(ScalarField::from_raw(self.grid.clone(), values, false))
    }

    /// `integral |grad f|^2 dx` computed in Fourier space (Parseval):
    /// `(vol / Ntot^2) * sum_k |k|^2 |fhat_k|^2`.
    /// Returns `+inf` when the field is flagged overflowed.
    pub fn gradient_norm_sq(&self) -> f64 {
        if self.overflowed {
            return f64::INFINITY;
        }
        let spec = fft_nd(&self.values, &self.grid);
        let mut terms = Vec::with_capacity(spec.len());
        for_each_mode_k2(&self.grid, |flat, k2| {
            terms.push(k2 * spec[flat].norm_sqr());
        });
        let ntot = self.grid.total_points() as f64;
        self.grid.volume() / (ntot * ntot) * compensated_sum(terms.into_iter())
    }

    /// Solve `(-Laplacian + shift) g = self` spectrally; `shift > 0`.
    pub fn inverse_helmholtz(&self, shift: f64) -> Result<ScalarField> {
        self.reject_overflowed("inverse_helmholtz input")?;
        if !(shift.is_finite() && shift > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "inverse_helmholtz shift must be positive, got {shift}"
            )));
        }
        let mut spec = fft_nd(&self.values, &self.grid);
        for_each_mode_k2(&self.grid, |flat, k2| {
            spec[flat] /= k2 + shift;
        });
        let values = ifft_nd_real(spec, &self.grid);
        Ok(ScalarField::from_raw(self.grid.clone(), values, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid1(n: usize, l: f64) -> Arc<Grid> {
        Grid::new(&[n], &[l]).unwrap()
    }

    /// Band-limited noise: random Fourier amplitudes up to `kmax` modes
    /// per axis, deterministic in `seed`.
    pub(crate) fn smooth_noise(grid: &Arc<Grid>, kmax: usize, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = grid.dim();
        let mut modes = Vec::new();
        let max_idx = kmax as isize;
        let mut idx = vec![-max_idx; dim];
        loop {
            modes.push((idx.clone(), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] <= max_idx {
                    break;
                }
                idx[a] = -max_idx;
                a += 1;
                if a == dim {
                    return ScalarField::from_fn(grid, |x| {
                        modes
                            .iter()
                            .map(|(m, amp, phase)| {
                                let arg: f64 = m
                                    .iter()
                                    .zip(x)
                                    .zip(grid.lengths())
                                    .map(|((&mi, &xi), &li)| 2.0 * PI * mi as f64 * xi / li)
                                    .sum();
                                amp * (arg + phase).cos()
                            })
                            .sum()
                    })
                    .unwrap();
                }
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(&[7], &[1.0]).is_err());
        assert!(Grid::new(&[9], &[1.0]).is_err());
        assert!(Grid::new(&[16], &[0.0]).is_err());
        assert!(Grid::new(&[16], &[-1.0]).is_err());
        assert!(Grid::new(&[16, 16], &[1.0]).is_err());
        assert!(Grid::new(&[16, 16, 16, 16], &[1.0; 4]).is_err());
        assert!(Grid::with_point_budget(&[1024, 1024], &[1.0, 1.0], 1 << 10).is_err());
        let g = Grid::new(&[16, 32], &[2.0, 8.0]).unwrap();
        assert_eq!(g.spacing(), &[0.125, 0.25]);
        assert_eq!(g.total_points(), 512);
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = grid1(64, 2.0 * PI);
        let f = ScalarField::constant(&g, 3.5).unwrap();
        let lap = f.laplacian().unwrap();
        assert!(lap.sup_norm() < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunction() {
        // sin(2 pi x / L) with L = 2 pi is sin(x); eigenvalue -1.
        let g = grid1(64, 2.0 * PI);
        let f = ScalarField::from_fn(&g, |x| x[0].sin()).unwrap();
        let lap = f.laplacian().unwrap();
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert_relative_eq!(*a, -b, epsilon = 1e-10);
        }
    }

    #[test]
    fn laplacian_matches_finite_differences_at_second_order() {
        // Centered FD oracle: error should drop ~4x when h halves.
        let mut errs = Vec::new();
        for &n in &[64usize, 128] {
            let g = grid1(n, 5.0);
            let f = smooth_noise(&g, 3, 7);
            let lap = f.laplacian().unwrap();
            let h = g.spacing()[0];
            let v = f.values();
            let mut err = 0.0f64;
            for i in 0..n {
                let fd = (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h);
                err = err.max((fd - lap.values()[i]).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..5.0).contains(&ratio),
            "expected ~4x error reduction, got {ratio} ({errs:?})"
        );
    }

    #[test]
    fn laplacian_2d_eigenfunction() {
        let g = Grid::new(&[32, 32], &[2.0 * PI, PI]).unwrap();
        // sin(x) * cos(4y) on [0,2pi)x[0,pi): eigenvalue -(1 + 16).
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * (4.0 * x[1]).cos()).unwrap();
        let lap = f.laplacian().unwrap();
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert_relative_eq!(*a, -17.0 * b, epsilon = 1e-9);
        }
    }

    #[test]
    fn integrate_constant_exact() {
        let g = grid1(16, 2.0);
        let f = ScalarField::constant(&g, 1.0).unwrap();
        assert_relative_eq!(f.integrate(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_full_period_cancels() {
        let g = grid1(64, 3.0);
        let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0] / 3.0).sin()).unwrap();
        assert!(f.integrate().abs() < 1e-13);
    }

    #[test]
    fn integrate_gaussian_matches_refined_grid() {
        let bump = |x: &[f64]| (-((x[0] - 10.0) / 0.3f64).powi(2)).exp();
        let coarse = ScalarField::from_fn(&grid1(128, 20.0), bump).unwrap();
        let fine = ScalarField::from_fn(&grid1(512, 20.0), bump).unwrap();
        assert_relative_eq!(coarse.integrate(), fine.integrate(), max_relative = 1e-8);
    }

    #[test]
    fn gradient_norm_sq_analytic() {
        let g = grid1(64, 2.0 * PI);
        assert_eq!(
            ScalarField::constant(&g, 4.2).unwrap().gradient_norm_sq(),
            0.0
        );
        let f = ScalarField::from_fn(&g, |x| x[0].sin()).unwrap();
        assert_relative_eq!(f.gradient_norm_sq(), PI, max_relative = 1e-12);
    }

    #[test]
    fn gradient_norm_sq_parseval_cross_check() {
        // Independent route: build the derivative fields and integrate
        // their squares in physical space.
        for &seed in &[1u64, 2, 3] {
            let g = Grid::new(&[32, 16], &[3.0, 2.0]).unwrap();
            let f = smooth_noise(&g, 3, seed);
            let direct: f64 = (0..2)
                .map(|a| f.derivative(a).unwrap().l2_norm_sq())
                .sum();
            assert_relative_eq!(f.gradient_norm_sq(), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn divergence_theorem_on_torus() {
        let g = Grid::new(&[32, 32], &[4.0, 7.0]).unwrap();
        let f = smooth_noise(&g, 4, 11);
        let lap = f.laplacian().unwrap();
        let scale = lap.l2_norm_sq().sqrt();
        assert!(lap.integrate().abs() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn integration_by_parts() {
        for &seed in &[5u64, 6] {
            let g = grid1(128, 10.0);
            let f = smooth_noise(&g, 5, seed);
            let lhs = f.gradient_norm_sq();
            let rhs = -f.dot_integral(&f.laplacian().unwrap());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn laplacian_linearity() {
        let g = grid1(64, 6.0);
        let f = smooth_noise(&g, 4, 21);
        let h = smooth_noise(&g, 4, 22);
        let combo = f.scaled(2.5).add_scaled(-1.25, &h);
        let lhs = combo.laplacian().unwrap();
        let rhs = f
            .laplacian()
            .unwrap()
            .scaled(2.5)
            .add_scaled(-1.25, &h.laplacian().unwrap());
        let diff = lhs.add_scaled(-1.0, &rhs).sup_norm();
        assert!(diff <= 1e-10 * lhs.sup_norm().max(1.0));
    }

    #[test]
    fn three_dimensional_identities() {
        let g = Grid::new(&[16, 16, 16], &[2.0 * PI, 2.0 * PI, 2.0 * PI]).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].cos() * (2.0 * x[2]).sin())
            .unwrap();
        let lap = f.laplacian().unwrap();
        // Eigenvalue -(1 + 1 + 4).
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert_relative_eq!(*a, -6.0 * b, epsilon = 1e-9);
        }
        assert_relative_eq!(
            f.gradient_norm_sq(),
            -f.dot_integral(&lap),
            max_relative = 1e-10
        );
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = grid1(16, 1.0);
        assert!(ScalarField::from_values(&g, vec![f64::NAN; 16]).is_err());
        let f = ScalarField::constant(&g, 1.0).unwrap();
        let blown = f.map(|v| v * f64::MAX * 10.0);
        assert!(blown.is_overflowed());
        assert!(blown.laplacian().is_err());
        assert_eq!(blown.integrate(), f64::INFINITY);
        assert_eq!(blown.gradient_norm_sq(), f64::INFINITY);
    }

    #[test]
    #[should_panic(expected = "share an identical grid")]
    fn mismatched_grids_panic() {
        let a = ScalarField::zeros(&grid1(16, 1.0));
        let b = ScalarField::zeros(&grid1(32, 1.0));
        let _ = a.dot_integral(&b);
    }

    #[test]
    fn inverse_helmholtz_inverts_operator() {
        let g = grid1(64, 8.0);
        let f = smooth_noise(&g, 4, 31);
        let sol = f.inverse_helmholtz(2.0).unwrap();
        // (-lap + 2) sol == f
        let back = sol.laplacian().unwrap().scaled(-1.0).add_scaled(2.0, &sol);
        let diff = back.add_scaled(-1.0, &f).sup_norm();
        assert!(diff < 1e-10 * f.sup_norm().max(1.0));
    }
}
