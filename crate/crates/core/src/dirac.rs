//! Spectral evolution of a two-component spinor wavepacket on a periodic grid,
//! under the exact per-step operator
//!
//! ```text
//! V(s) = exp{-i [theta_p sigma_3 - s phi sigma_2]}
//! ```
//!
//! and under its factored form `exp(-i theta_p sigma_3) exp(i s phi sigma_2)`,
//! which is the walk's coin followed by its shift.
//!
//! Lengths are in units of `c Delta`; `theta_p = theta_scale * p` with `p` the
//! discrete wavenumber, so `theta_scale = 1` moves the free up-component by
//! exactly one cell per step.
//!
//! Both operators are diagonal in momentum, so an N-step trajectory is one
//! forward transform, N per-mode 2x2 products and one inverse transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::numerics::total_variation;
use crate::sampling::{map_blocks, Sign, SignStream};
use crate::walk::{evolve, WalkParams};
use crate::{Error, Result};

/// Minimum grid resolution.
pub const MIN_POINTS_PER_CELL: usize = 32;
/// Cells at each edge of the grid that must stay empty.
pub const GUARD_CELLS: usize = 2;
/// Largest tolerated mass in the guard cells of any trajectory.
pub const WRAP_TOLERANCE: f64 = 1e-8;
/// Width of the default wavepacket, in cells.
pub const DEFAULT_WIDTH: f64 = 0.5;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Periodic grid of `extent` cells of unit length, `points_per_cell` points
/// each. Cells are `[k - 1/2, k + 1/2)` for `k = -extent/2 .. extent/2 - 1`;
/// grid points sit at the midpoints of their intervals, so no point lies on a
/// cell boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    extent: usize,
    points_per_cell: usize,
}

impl GridSpec {
    pub fn new(extent: usize, points_per_cell: usize) -> Result<Self> {
        if extent < 2 || !extent.is_multiple_of(2) {
            return Err(Error::Grid(format!("extent must be even and at least 2, got {extent}")));
        }
        if points_per_cell < MIN_POINTS_PER_CELL {
            return Err(Error::Grid(format!(
                "need at least {MIN_POINTS_PER_CELL} points per cell, got {points_per_cell}"
            )));
        }
        let n_points = extent
            .checked_mul(points_per_cell)
            .ok_or_else(|| Error::Resource("grid size overflows".into()))?;
        if !n_points.is_power_of_two() {
            return Err(Error::Grid(format!("grid size {n_points} is not a power of two")));
        }
        Ok(Self {
            extent,
            points_per_cell,
        })
    }

    /// Smallest power-of-two extent with `L >= 2 (N + 4)`, at the minimum
    /// resolution.
    pub fn for_steps(n_steps: usize) -> Result<Self> {
        Self::new((2 * (n_steps + 4)).next_power_of_two(), MIN_POINTS_PER_CELL)
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn n_points(&self) -> usize {
        self.extent * self.points_per_cell
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.points_per_cell as f64
    }

    /// Lowest cell index.
    pub fn k_min(&self) -> i64 {
        -((self.extent / 2) as i64)
    }

    pub fn k_max(&self) -> i64 {
        (self.extent / 2) as i64 - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.k_min() as f64 - 0.5 + (i as f64 + 0.5) * self.dx()
    }

    /// Cell containing grid point `i`, i.e. `floor(x + 1/2)`.
    pub fn cell_of(&self, i: usize) -> i64 {
        self.k_min() + (i / self.points_per_cell) as i64
    }

    /// Discrete wavenumber of FFT bin `m`, in `(-pi/dx, pi/dx]`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n_points();
        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        2.0 * PI * signed / self.extent as f64
    }

    /// Whether an `n_steps` run from `center` keeps clear of the guard cells.
    pub fn fits(&self, center: i64, n_steps: usize) -> bool {
        let reach = n_steps as i64 + GUARD_CELLS as i64;
        center - reach >= self.k_min() && center + reach <= self.k_max()
    }
}

/// Position-space spinor amplitudes, normalized so that
/// `dx * sum(|up|^2 + |down|^2) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub up: Vec<Complex64>,
    pub down: Vec<Complex64>,
    pub grid: GridSpec,
}

impl SpinorField {
    pub fn norm(&self) -> f64 {
        let s: f64 = self
            .up
            .iter()
            .zip(&self.down)
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .sum();
        s * self.grid.dx()
    }

    /// `<x>` over both components.
    pub fn mean_position(&self) -> f64 {
        let s: f64 = self
            .up
            .iter()
            .zip(&self.down)
            .enumerate()
            .map(|(i, (u, d))| self.grid.x(i) * (u.norm_sqr() + d.norm_sqr()))
            .sum();
        s * self.grid.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    /// Support width of the `cos^2` bump in cells; must lie in `(0, 1)`.
    pub width: f64,
    /// Lattice site at the centre of the bump.
    pub center: i64,
}

impl Default for WavepacketSpec {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            center: 0,
        }
    }
}

/// `F(x - k)` with `F(x) = cos^2(pi x / w)` on `|x| < w/2`, in the up
/// component, normalized on the grid.
pub fn make_wavepacket(spec: &WavepacketSpec, grid: &GridSpec) -> Result<SpinorField> {
    if !(spec.width > 0.0 && spec.width < 1.0) {
        return Err(Error::Domain(format!(
            "wavepacket support must fit inside one cell, got width {}",
            spec.width
        )));
    }
    if spec.center < grid.k_min() || spec.center > grid.k_max() {
        return Err(Error::Grid(format!("centre {} lies off the grid", spec.center)));
    }
    let n = grid.n_points();
    let half = 0.5 * spec.width;
    let mut up: Vec<Complex64> = (0..n)
        .map(|i| {
            let y = grid.x(i) - spec.center as f64;
            if y.abs() < half {
                Complex64::new((PI * y / spec.width).cos().powi(2), 0.0)
            } else {
                ZERO
            }
        })
        .collect();
    let norm: f64 = up.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dx();
    if norm == 0.0 {
        return Err(Error::Grid("wavepacket narrower than the grid spacing".into()));
    }
    let scale = 1.0 / norm.sqrt();
    up.iter_mut().for_each(|c| *c *= scale);
    Ok(SpinorField {
        up,
        down: vec![ZERO; n],
        grid: *grid,
    })
}

/// Root-mean-square `theta_p` of a field, the momentum scale entering the
/// validity condition `|c <p> Delta / hbar| << 1`.
pub fn momentum_spread(field: &SpinorField, theta_scale: f64) -> f64 {
    let n = field.grid.n_points();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut up = field.up.clone();
    let mut down = field.down.clone();
    fft.process(&mut up);
    fft.process(&mut down);
    let (mut num, mut den) = (0.0, 0.0);
    for m in 0..n {
        let w = up[m].norm_sqr() + down[m].norm_sqr();
        let theta = theta_scale * field.grid.wavenumber(m);
        num += theta * theta * w;
        den += w;
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Exact,
    Split,
}

/// Row-major 2x2 complex matrix.
pub type Mat2 = [Complex64; 4];

/// `cos(W) I - i sin(W)/W (theta sigma_3 - s phi sigma_2)`, `W = sqrt(theta^2 + phi^2)`.
pub fn exact_matrix(theta: f64, phi: f64, s: f64) -> Mat2 {
    let omega = theta.hypot(phi);
    let (cos, sinc) = if omega < 1e-4 {
        let w2 = omega * omega;
        (1.0 - 0.5 * w2 + w2 * w2 / 24.0, 1.0 - w2 / 6.0 + w2 * w2 / 120.0)
    } else {
        (omega.cos(), omega.sin() / omega)
    };
    let mix = s * phi * sinc;
    [
        Complex64::new(cos, -theta * sinc),
        Complex64::new(mix, 0.0),
        Complex64::new(-mix, 0.0),
        Complex64::new(cos, theta * sinc),
    ]
}

/// `exp(-i theta sigma_3) exp(i s phi sigma_2)`.
pub fn split_matrix(theta: f64, phi: f64, s: f64) -> Mat2 {
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    let ahead = Complex64::new(cos_t, -sin_t);
    let behind = Complex64::new(cos_t, sin_t);
    [
        ahead * cos_p,
        ahead * (s * sin_p),
        -behind * (s * sin_p),
        behind * cos_p,
    ]
}

/// Largest singular value of a 2x2 matrix.
pub fn operator_norm(m: &Mat2) -> f64 {
    let [a, b, c, d] = *m;
    let frob = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
    let det = (a * d - b * c).norm_sqr();
    let half = 0.5 * frob;
    (half + (half * half - det).max(0.0).sqrt()).sqrt()
}

/// Per-mode step operators for both field signs, plus the transforms.
pub struct Propagator {
    grid: GridSpec,
    plus: Vec<Mat2>,
    minus: Vec<Mat2>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Propagator {
    pub fn new(grid: &GridSpec, operator: Operator, theta_scale: f64, phi: f64) -> Self {
        let n = grid.n_points();
        let matrix = match operator {
            Operator::Exact => exact_matrix,
            Operator::Split => split_matrix,
        };
        let thetas: Vec<f64> = (0..n).map(|m| theta_scale * grid.wavenumber(m)).collect();
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            plus: thetas.iter().map(|&t| matrix(t, phi, 1.0)).collect(),
            minus: thetas.iter().map(|&t| matrix(t, phi, -1.0)).collect(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Applies one step to momentum-space amplitudes in place.
    pub fn apply_in_momentum(&self, up: &mut [Complex64], down: &mut [Complex64], sign: Sign) {
        let mats = match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        };
        for ((u, d), m) in up.iter_mut().zip(down.iter_mut()).zip(mats) {
            let (a, b) = (*u, *d);
            *u = m[0] * a + m[1] * b;
            *d = m[2] * a + m[3] * b;
        }
    }

    pub fn to_momentum(&self, field: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(field, scratch);
    }

    /// Inverse transform including the `1/n` normalization.
    pub fn to_position(&self, field: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(field, scratch);
        let scale = 1.0 / field.len() as f64;
        field.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![ZERO; len]
    }

    /// Evolves a position-space field through the given signs.
    pub fn evolve(&self, field: &SpinorField, signs: &[Sign]) -> SpinorField {
        let mut scratch = self.scratch();
        let mut up = field.up.clone();
        let mut down = field.down.clone();
        self.to_momentum(&mut up, &mut scratch);
        self.to_momentum(&mut down, &mut scratch);
        for &s in signs {
            self.apply_in_momentum(&mut up, &mut down, s);
        }
        self.to_position(&mut up, &mut scratch);
        self.to_position(&mut down, &mut scratch);
        SpinorField {
            up,
            down,
            grid: field.grid,
        }
    }
}

fn single_step(
    field: &SpinorField,
    sign: Sign,
    theta_scale: f64,
    phi: f64,
    operator: Operator,
) -> SpinorField {
    Propagator::new(&field.grid, operator, theta_scale, phi).evolve(field, &[sign])
}

/// One application of the exact operator `V(s)`.
pub fn exact_step(field: &SpinorField, sign: Sign, theta_scale: f64, phi: f64) -> SpinorField {
    single_step(field, sign, theta_scale, phi, Operator::Exact)
}

/// One application of the factored operator.
pub fn split_step(field: &SpinorField, sign: Sign, theta_scale: f64, phi: f64) -> SpinorField {
    single_step(field, sign, theta_scale, phi, Operator::Split)
}

/// Component masses per lattice cell, `k = k_min ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedField {
    pub k_min: i64,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl BinnedField {
    fn zeros(grid: &GridSpec) -> Self {
        Self {
            k_min: grid.k_min(),
            up: vec![0.0; grid.extent()],
            down: vec![0.0; grid.extent()],
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.up.len() as i64).map(move |i| self.k_min + i)
    }

    /// `up + down` per cell.
    pub fn total_per_cell(&self) -> Vec<f64> {
        self.up.iter().zip(&self.down).map(|(u, d)| u + d).collect()
    }

    pub fn total(&self) -> f64 {
        self.up.iter().chain(&self.down).sum()
    }

    fn accumulate(&mut self, other: &BinnedField) {
        for (a, b) in self.up.iter_mut().zip(&other.up) {
            *a += b;
        }
        for (a, b) in self.down.iter_mut().zip(&other.down) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        self.up.iter_mut().chain(self.down.iter_mut()).for_each(|v| *v *= factor);
    }

    /// Mass in the outermost [`GUARD_CELLS`] cells on either side.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.up.len();
        (0..GUARD_CELLS)
            .chain(n - GUARD_CELLS..n)
            .map(|i| self.up[i] + self.down[i])
            .sum()
    }
}

/// Integrates `|up|^2` and `|down|^2` over each cell `[k - 1/2, k + 1/2)`.
pub fn bin_to_lattice(field: &SpinorField) -> BinnedField {
    let grid = &field.grid;
    let mut binned = BinnedField::zeros(grid);
    bin_into(&field.up, &field.down, grid, &mut binned);
    binned
}

fn bin_into(up: &[Complex64], down: &[Complex64], grid: &GridSpec, out: &mut BinnedField) {
    let ppc = grid.points_per_cell();
    let dx = grid.dx();
    for (cell, (u, d)) in up.chunks(ppc).zip(down.chunks(ppc)).enumerate() {
        out.up[cell] = u.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
        out.down[cell] = d.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    pub n_steps: usize,
    /// Half rotation angle `mu B0 Delta / 2`; `eps = |tan(phi)|`.
    pub phi: f64,
    pub n_realizations: u64,
    pub seed: u64,
    pub wavepacket: WavepacketSpec,
    pub grid: GridSpec,
    pub theta_scale: f64,
}

impl CompareConfig {
    /// Default wavepacket at the origin on the smallest adequate grid.
    pub fn new(n_steps: usize, phi: f64, n_realizations: u64, seed: u64) -> Result<Self> {
        Ok(Self {
            n_steps,
            phi,
            n_realizations,
            seed,
            wavepacket: WavepacketSpec::default(),
            grid: GridSpec::for_steps(n_steps)?,
            theta_scale: 1.0,
        })
    }
}

/// Ensemble-mean cell masses along the exact and factored dynamics and the
/// walk prediction, all on the grid's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleComparison {
    pub epsilon: f64,
    pub exact: BinnedField,
    pub split: BinnedField,
    /// Walk `(alpha, beta)` placed on the same cells.
    pub walk: BinnedField,
    pub tv_exact_split: f64,
    pub tv_split_walk: f64,
    pub tv_exact_walk: f64,
    /// Largest guard-cell mass seen in any single trajectory.
    pub boundary_mass: f64,
}

/// Runs exact and factored ensembles over the same sign sequences (the
/// streams of [`SignStream`], shared with the lattice Monte Carlo) and compares
/// their cell-binned means with each other and with the walk.
pub fn ensemble_compare(config: &CompareConfig) -> Result<EnsembleComparison> {
    let CompareConfig {
        n_steps,
        phi,
        n_realizations,
        seed,
        wavepacket,
        grid,
        theta_scale,
    } = *config;
    if n_realizations == 0 {
        return Err(Error::Domain("at least one realization is required".into()));
    }
    if !(phi.is_finite() && phi.abs() < 0.5 * PI) {
        return Err(Error::Domain(format!("phi must lie in (-pi/2, pi/2), got {phi}")));
    }
    if !theta_scale.is_finite() {
        return Err(Error::Domain(format!("theta scale must be finite, got {theta_scale}")));
    }
    if !grid.fits(wavepacket.center, n_steps) {
        return Err(Error::Grid(format!(
            "an extent of {} cells is too small for {n_steps} steps from site {}",
            grid.extent(),
            wavepacket.center
        )));
    }
    let epsilon = phi.tan().abs();
    let initial = make_wavepacket(&wavepacket, &grid)?;
    let exact = Propagator::new(&grid, Operator::Exact, theta_scale, phi);
    let split = Propagator::new(&grid, Operator::Split, theta_scale, phi);

    let mut scratch = exact.scratch();
    let mut up0 = initial.up.clone();
    let mut down0 = initial.down.clone();
    exact.to_momentum(&mut up0, &mut scratch);
    exact.to_momentum(&mut down0, &mut scratch);

    struct Block {
        exact: BinnedField,
        split: BinnedField,
        boundary: f64,
    }

    let blocks = map_blocks(n_realizations as usize, |range| {
        let mut scratch = exact.scratch();
        let mut sum = Block {
            exact: BinnedField::zeros(&grid),
            split: BinnedField::zeros(&grid),
            boundary: 0.0,
        };
        let mut cell = BinnedField::zeros(&grid);
        let mut signs = Vec::with_capacity(n_steps);
        for r in range {
            signs.clear();
            let mut stream = SignStream::new(seed, r as u64);
            signs.extend((0..n_steps).map(|_| stream.next_sign()));
            for (prop, acc) in [(&exact, &mut sum.exact), (&split, &mut sum.split)] {
                let mut up = up0.clone();
                let mut down = down0.clone();
                for &s in &signs {
                    prop.apply_in_momentum(&mut up, &mut down, s);
                }
                prop.to_position(&mut up, &mut scratch);
                prop.to_position(&mut down, &mut scratch);
                bin_into(&up, &down, &grid, &mut cell);
                sum.boundary = sum.boundary.max(cell.boundary_mass());
                acc.accumulate(&cell);
            }
        }
        sum
    });

    let mut exact_mean = BinnedField::zeros(&grid);
    let mut split_mean = BinnedField::zeros(&grid);
    let mut boundary_mass = 0.0f64;
    for b in &blocks {
        exact_mean.accumulate(&b.exact);
        split_mean.accumulate(&b.split);
        boundary_mass = boundary_mass.max(b.boundary);
    }
    if boundary_mass > WRAP_TOLERANCE {
        return Err(Error::Grid(format!(
            "wraparound: {boundary_mass:e} of the mass reached the guard cells"
        )));
    }
    let inv = 1.0 / n_realizations as f64;
    exact_mean.scale(inv);
    split_mean.scale(inv);

    let state = evolve(&WalkParams::new(epsilon, n_steps)?);
    let mut walk = BinnedField::zeros(&grid);
    for k in state.sites() {
        let i = (k + wavepacket.center - grid.k_min()) as usize;
        walk.up[i] = state.alpha_at(k);
        walk.down[i] = state.beta_at(k);
    }

    let (e, s, w) = (
        exact_mean.total_per_cell(),
        split_mean.total_per_cell(),
        walk.total_per_cell(),
    );
    Ok(EnsembleComparison {
        epsilon,
        tv_exact_split: total_variation(&e, &s),
        tv_split_walk: total_variation(&s, &w),
        tv_exact_walk: total_variation(&e, &w),
        exact: exact_mean,
        split: split_mean,
        walk,
        boundary_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monte_carlo::single_trajectory;
    use crate::sampling::signs_for;

    fn grid() -> GridSpec {
        GridSpec::new(16, 32).unwrap()
    }

    fn packet() -> SpinorField {
        make_wavepacket(&WavepacketSpec::default(), &grid()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(16, 16).is_err());
        assert!(GridSpec::new(12, 32).is_err());
        assert!(GridSpec::new(15, 32).is_err());
        let g = GridSpec::for_steps(50).unwrap();
        assert_eq!(g.extent(), 128);
        assert_eq!(g.n_points(), 4096);
        assert!(g.fits(0, 50) && !g.fits(0, 63));
        assert_eq!(g.cell_of(0), -64);
        assert_eq!(g.cell_of(4095), 63);
        for i in [0, 31, 32, 2047, 2048, 4095] {
            assert_eq!(g.cell_of(i), (g.x(i) + 0.5).floor() as i64);
        }
    }

    #[test]
    fn wavepacket_sits_in_one_cell() {
        let f = packet();
        assert!((f.norm() - 1.0).abs() < 1e-14);
        let b = bin_to_lattice(&f);
        assert!((b.up[8] - 1.0).abs() < 1e-14);
        assert!((b.total() - 1.0).abs() < 1e-14);

        let g = grid();
        let shifted = make_wavepacket(&WavepacketSpec { width: 0.5, center: 1 }, &g).unwrap();
        let overlap: f64 = f.up.iter().zip(&shifted.up).map(|(a, b)| (a.conj() * b).re).sum();
        assert!(overlap.abs() * g.dx() < 1e-14);

        assert!(make_wavepacket(&WavepacketSpec { width: 1.2, center: 0 }, &g).is_err());
        assert!(make_wavepacket(&WavepacketSpec { width: 0.5, center: 40 }, &g).is_err());
    }

    #[test]
    fn free_step_translates_by_one_cell() {
        let f = packet();
        let mut g = f.clone();
        for step in 1..=5 {
            g = exact_step(&g, Sign::Plus, 1.0, 0.0);
            assert!((g.mean_position() - step as f64).abs() < 1e-12);
            let b = bin_to_lattice(&g);
            assert!((b.up[8 + step] - 1.0).abs() < 1e-12);
        }
        let s = split_step(&f, Sign::Minus, 1.0, 0.0);
        let e = exact_step(&f, Sign::Minus, 1.0, 0.0);
        for (a, b) in s.up.iter().zip(&e.up) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_momentum_mode_is_the_coin() {
        let phi = 0.3f64;
        for s in [1.0, -1.0] {
            let m = exact_matrix(0.0, phi, s);
            let coin = [phi.cos(), s * phi.sin(), -s * phi.sin(), phi.cos()];
            for (a, b) in m.iter().zip(coin) {
                assert!((a - Complex64::new(b, 0.0)).norm() < 1e-15);
            }
            assert_eq!(split_matrix(0.0, phi, s), m);
        }
        let id = exact_matrix(0.0, 0.0, 1.0);
        assert_eq!(id, [Complex64::new(1.0, 0.0), ZERO, ZERO, Complex64::new(1.0, 0.0)]);
        let tiny = exact_matrix(1e-9, 1e-9, 1.0);
        assert!((tiny[0] - Complex64::new(1.0, -1e-9)).norm() < 1e-15);
    }

    #[test]
    fn matrices_are_unitary() {
        for &(t, p) in &[(0.0, 0.2), (1.3, 0.7), (-3.0, 0.05), (10.0, 1.5)] {
            for m in [exact_matrix(t, p, 1.0), split_matrix(t, p, -1.0)] {
                let [a, b, c, d] = m;
                assert!((a.norm_sqr() + c.norm_sqr() - 1.0).abs() < 1e-14);
                assert!((b.norm_sqr() + d.norm_sqr() - 1.0).abs() < 1e-14);
                assert!((a.conj() * b + c.conj() * d).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn split_error_follows_commutator() {
        for i in 1..=10 {
            for j in 1..=10 {
                let theta = 0.02 * i as f64;
                let phi = 0.02 * j as f64;
                let e = exact_matrix(theta, phi, 1.0);
                let s = split_matrix(theta, phi, 1.0);
                let diff: Mat2 = std::array::from_fn(|n| e[n] - s[n]);
                let err = operator_norm(&diff);
                let lead = theta * phi;
                assert!(err <= lead * (1.0 + theta + phi), "{theta} {phi} {err}");
                assert!(err >= lead * (1.0 - theta - phi), "{theta} {phi} {err}");
            }
        }
    }

    #[test]
    fn exact_evolution_is_unitary() {
        let g = GridSpec::new(512, 32).unwrap();
        let f = make_wavepacket(&WavepacketSpec::default(), &g).unwrap();
        let prop = Propagator::new(&g, Operator::Exact, 1.0, 0.2);
        let out = prop.evolve(&f, &signs_for(3, 0, 200));
        assert!((out.norm() - 1.0).abs() < 1e-11);
        assert!((bin_to_lattice(&out).total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn split_trajectory_is_the_lattice_walk() {
        let n = 12;
        let eps: f64 = 0.2;
        let g = GridSpec::for_steps(n).unwrap();
        let f = make_wavepacket(&WavepacketSpec::default(), &g).unwrap();
        let prop = Propagator::new(&g, Operator::Split, 1.0, eps.atan());
        for r in 0..4 {
            let signs = signs_for(11, r, n);
            let b = bin_to_lattice(&prop.evolve(&f, &signs));
            let psi = single_trajectory(&WalkParams::new(eps, n).unwrap(), &signs).unwrap();
            let (alpha, beta) = psi.probabilities();
            for (j, k) in (-(n as i64)..=n as i64).step_by(2).enumerate() {
                let i = (k - g.k_min()) as usize;
                assert!((b.up[i] - alpha[j]).abs() < 1e-12);
                assert!((b.down[i] - beta[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_ensembles_coincide() {
        let cfg = CompareConfig::new(6, 0.0, 10, 1).unwrap();
        let c = ensemble_compare(&cfg).unwrap();
        assert!(c.tv_exact_split < 1e-13);
        assert!(c.tv_split_walk < 1e-13);
        assert_eq!(c.epsilon, 0.0);
    }

    #[test]
    fn wraparound_is_detected() {
        let mut cfg = CompareConfig::new(10, 0.1, 4, 1).unwrap();
        cfg.grid = GridSpec::new(16, 32).unwrap();
        assert!(matches!(ensemble_compare(&cfg), Err(Error::Grid(_))));
        cfg.n_realizations = 0;
        assert!(ensemble_compare(&cfg).is_err());
    }

    #[test]
    fn momentum_spread_of_default_packet() {
        // <F'^2>/<F^2> for cos^2(pi x / w) is (2 pi / w)^2 / 3
        let spread = momentum_spread(&packet(), 1.0);
        let expected = 2.0 * PI / DEFAULT_WIDTH / 3f64.sqrt();
        assert!((spread - expected).abs() / expected < 1e-3, "{spread}");
    }
}
