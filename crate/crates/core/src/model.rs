//! Model parameters, exponent windows, potentials and the evolution
//! right-hand side.
//!
//! The dynamical system is written in the equivalent form obtained by
//! scaling the first equation with `alpha = a2 (p+1) / (a1 (q+1))` and
//! setting `a2' = a2 / (q+1)`; with those weights the two equations share
//! a single conserved energy. Dividing back out, the accelerations are
//!
//! ```text
//! u_tt = lap u - m1^2 u - K1 u + (a2'(p+1)/alpha) |v|^{q+1} |u|^{p-1} u
//! v_tt = lap v - m2^2 v - K2 v +  a2'(q+1)        |u|^{p+1} |v|^{q-1} v
//! ```
//!
//! and the coefficients reduce to the original couplings `a1`, `a2`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Outcome of the exponent-condition check.
///
/// `valid` is the window of the local theory; `ground_state_ok` is the
/// stricter window in which the variational ground state is available
/// (any `p, q > 1` for `n = 2`; `1 < p, q < 2/(n-2)` for `n = 3`).
#[derive(Debug, Clone)]
pub struct ExponentVerdict {
    pub valid: bool,
    pub ground_state_ok: bool,
    pub reason: String,
}

pub fn validate_exponents(p: f64, q: f64, n: usize) -> ExponentVerdict {
    let reject = |reason: String| ExponentVerdict {
        valid: false,
        ground_state_ok: false,
        reason,
    };
    if !p.is_finite() || !q.is_finite() {
        return reject("exponents must be finite".into());
    }
    if n == 0 {
        return reject("spatial dimension must be at least 1".into());
    }
    if p <= 1.0 || q <= 1.0 {
        return reject(format!("exponents must exceed 1, got p={p}, q={q}"));
    }
    if n <= 2 {
        return ExponentVerdict {
            valid: true,
            ground_state_ok: n == 2,
            reason: if n == 2 {
                "p, q > 1 suffices for n <= 2; ground-state window open".into()
            } else {
                "p, q > 1 suffices for n <= 2; ground-state theory covers n = 2, 3 only".into()
            },
        };
    }
    let bound = (n as f64 + 2.0) / (n as f64 - 2.0);
    let cond_q = (q < p + 1.0 && p + 1.0 < bound) || (p + 1.0 < q && q < bound);
    let cond_p = (p < q + 1.0 && q + 1.0 < bound) || (q + 1.0 < p && p < bound);
    if !(cond_q && cond_p) {
        return reject(format!(
            "for n={n} need q<p+1<{bound} or p+1<q<{bound}, and symmetrically in p; \
             got p={p}, q={q}"
        ));
    }
    let gs_bound = 2.0 / (n as f64 - 2.0);
    let ground_state_ok = n == 3 && p < gs_bound && q < gs_bound;
    ExponentVerdict {
        valid: true,
        ground_state_ok,
        reason: if ground_state_ok {
            format!("valid; ground-state window 1 < p, q < {gs_bound} satisfied")
        } else {
            format!("valid for evolution; ground-state window requires 1 < p, q < {gs_bound}")
        },
    }
}

/// Masses, couplings and exponents, plus the derived equivalent-form
/// weights. Immutable after construction and shareable across runs.
#[derive(Debug, Clone)]
pub struct ModelParams {
    m1: f64,
    m2: f64,
    a1: f64,
    a2: f64,
    p: f64,
    q: f64,
    dim: usize,
    alpha: f64,
    a2prime: f64,
    linear_test_mode: bool,
}

impl ModelParams {
    pub fn new(m1: f64, m2: f64, a1: f64, a2: f64, p: f64, q: f64, dim: usize) -> Result<Self> {
        let verdict = validate_exponents(p, q, dim);
        if !verdict.valid {
            return Err(Error::InvalidParams(verdict.reason));
        }
        Self::build(m1, m2, a1, a2, p, q, dim)
    }

    /// Parameters with the exponent-window check skipped; `p, q >= 1` is
    /// still required so the power terms stay continuous at zero. The
    /// closed-form oracle lives at the boundary pair `p = q = 1`, which
    /// the evolution theory excludes.
    pub fn relaxed_exponents(
        m1: f64,
        m2: f64,
        a1: f64,
        a2: f64,
        p: f64,
        q: f64,
        dim: usize,
    ) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "even relaxed exponents must be >= 1, got p={p}, q={q}"
            )));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidParams(format!("dimension must be 1..=3, got {dim}")));
        }
        Self::build(m1, m2, a1, a2, p, q, dim)
    }

    fn build(m1: f64, m2: f64, a1: f64, a2: f64, p: f64, q: f64, dim: usize) -> Result<Self> {
        for (name, v) in [("m1", m1), ("m2", m2), ("a1", a1), ("a2", a2), ("p", p), ("q", q)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if m1 == 0.0 || m2 == 0.0 {
            return Err(Error::InvalidParams("masses must be nonzero".into()));
        }
        if a1 <= 0.0 || a2 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "couplings must be positive, got a1={a1}, a2={a2}"
            )));
        }
        Ok(ModelParams {
            m1,
            m2,
            a1,
            a2,
            p,
            q,
            dim,
            alpha: a2 * (p + 1.0) / (a1 * (q + 1.0)),
            a2prime: a2 / (q + 1.0),
            linear_test_mode: false,
        })
    }

    /// Disable the couplings entirely. Exists solely for verifying the
    /// integrator order against plane-wave solutions of the linear
    /// equations; this regime is outside the admissible parameter range
    /// of the nonlinear theory.
    pub fn with_linear_test_mode(mut self, on: bool) -> Self {
        self.linear_test_mode = on;
        self
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn a2prime(&self) -> f64 {
        self.a2prime
    }
    pub fn linear_test_mode(&self) -> bool {
        self.linear_test_mode
    }

    /// `min(m1^2, m2^2)`, the mass constant in the blow-up thresholds.
    pub fn min_mass_sq(&self) -> f64 {
        (self.m1 * self.m1).min(self.m2 * self.m2)
    }

    pub fn exponent_verdict(&self) -> ExponentVerdict {
        validate_exponents(self.p, self.q, self.dim)
    }
}

/// Exponentiation with an integer fast path; `powf` would dominate the
/// right-hand-side cost for the common integer exponents.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Exponent {
    Int(i32),
    Real(f64),
}

impl Exponent {
    pub(crate) fn new(e: f64) -> Exponent {
        if e.fract() == 0.0 && e.abs() <= 64.0 {
            Exponent::Int(e as i32)
        } else {
            Exponent::Real(e)
        }
    }

    /// `|v|^e`.
    #[inline]
    pub(crate) fn abs_pow(self, v: f64) -> f64 {
        match self {
            Exponent::Int(n) => v.abs().powi(n),
            Exponent::Real(e) => v.abs().powf(e),
        }
    }

    /// `sign(v) |v|^e`, continuous at 0 for `e > 0`.
    #[inline]
    pub(crate) fn signed_pow(self, v: f64) -> f64 {
        let m = self.abs_pow(v);
        if v < 0.0 {
            -m
        } else {
            m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Harmonic,
    GaussianWell,
    File,
}

/// The pair of nonnegative potentials sampled on the grid.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    k1: ScalarField,
    k2: ScalarField,
    kind: PotentialKind,
}

impl PotentialPair {
    pub fn zero(grid: &Arc<Grid>) -> PotentialPair {
        PotentialPair {
            k1: ScalarField::zeros(grid),
            k2: ScalarField::zeros(grid),
            kind: PotentialKind::Zero,
        }
    }

    /// `K(x) = |x - center|^2` on both components.
    pub fn harmonic(grid: &Arc<Grid>) -> PotentialPair {
        let k = ScalarField::from_fn(grid, |x| {
            x.iter()
                .zip(grid.lengths())
                .map(|(&xi, &l)| (xi - 0.5 * l) * (xi - 0.5 * l))
                .sum()
        })
        .expect("harmonic potential is finite");
        PotentialPair {
            k2: k.clone(),
            k1: k,
            kind: PotentialKind::Harmonic,
        }
    }

    /// `K(x) = depth * (1 - exp(-|x - center|^2 / width^2))`: zero at the
    /// box center, approaching `depth` away from it.
    pub fn gaussian_well(grid: &Arc<Grid>, depth: f64, width: f64) -> Result<PotentialPair> {
        if !(depth.is_finite() && depth >= 0.0) || !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "gaussian well needs depth >= 0 and width > 0, got depth={depth}, width={width}"
            )));
        }
        let k = ScalarField::from_fn(grid, |x| {
            let r2: f64 = x
                .iter()
                .zip(grid.lengths())
                .map(|(&xi, &l)| (xi - 0.5 * l) * (xi - 0.5 * l))
                .sum();
            depth * (1.0 - (-r2 / (width * width)).exp())
        })?;
        Ok(PotentialPair {
            k2: k.clone(),
            k1: k,
            kind: PotentialKind::GaussianWell,
        })
    }

    /// Use one sampled field for both potentials. Nonnegativity is strict:
    /// any negative sample is rejected.
    pub fn from_field(field: ScalarField) -> Result<PotentialPair> {
        Self::validate_nonnegative(&field)?;
        Ok(PotentialPair {
            k1: field.clone(),
            k2: field,
            kind: PotentialKind::File,
        })
    }

    pub fn from_fields(k1: ScalarField, k2: ScalarField, kind: PotentialKind) -> Result<Self> {
        Self::validate_nonnegative(&k1)?;
        Self::validate_nonnegative(&k2)?;
        Ok(PotentialPair { k1, k2, kind })
    }

    fn validate_nonnegative(field: &ScalarField) -> Result<()> {
        if field.is_overflowed() {
            return Err(Error::NonFinite("potential field".into()));
        }
        if let Some((i, v)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v < 0.0)
        {
            return Err(Error::InvalidPotential(format!(
                "potential must be nonnegative; sample {i} is {v}"
            )));
        }
        Ok(())
    }

    pub fn k1(&self) -> &ScalarField {
        &self.k1
    }
    pub fn k2(&self) -> &ScalarField {
        &self.k2
    }
    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Largest potential value over both components (enters the time-step
    /// stability bound).
    pub fn sup(&self) -> f64 {
        self.k1
            .values()
            .iter()
            .chain(self.k2.values())
            .fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Full dynamical state `(u, u_t, v, v_t)` at one time instant.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub u: ScalarField,
    pub ut: ScalarField,
    pub v: ScalarField,
    pub vt: ScalarField,
    pub t: f64,
}

impl StateVector {
    pub fn new(
        u: ScalarField,
        ut: ScalarField,
        v: ScalarField,
        vt: ScalarField,
        t: f64,
    ) -> Result<StateVector> {
        let g = u.grid();
        for f in [&ut, &v, &vt] {
            if f.grid().as_ref() != g.as_ref() {
                return Err(Error::InvalidGrid(
                    "state components must share one grid".into(),
                ));
            }
        }
        Ok(StateVector { u, ut, v, vt, t })
    }

    pub fn zero(grid: &Arc<Grid>) -> StateVector {
        StateVector {
            u: ScalarField::zeros(grid),
            ut: ScalarField::zeros(grid),
            v: ScalarField::zeros(grid),
            vt: ScalarField::zeros(grid),
            t: 0.0,
        }
    }

    /// Rest data `(u0, 0, v0, 0)` at `t = 0`.
    pub fn at_rest(u0: ScalarField, v0: ScalarField) -> Result<StateVector> {
        let g = u0.grid().clone();
        StateVector::new(
            u0,
            ScalarField::zeros(&g),
            v0,
            ScalarField::zeros(&g),
            0.0,
        )
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn is_overflowed(&self) -> bool {
        self.u.is_overflowed()
            || self.ut.is_overflowed()
            || self.v.is_overflowed()
            || self.vt.is_overflowed()
    }

    pub fn negated(&self) -> StateVector {
        StateVector {
            u: self.u.scaled(-1.0),
            ut: self.ut.scaled(-1.0),
            v: self.v.scaled(-1.0),
            vt: self.vt.scaled(-1.0),
            t: self.t,
        }
    }
}

/// Right-hand side of the second-order system: `(u_tt, v_tt)`.
///
/// The power terms use `|.|` with a sign-carrying factor, so non-integer
/// exponents are well defined for negative field values. Overflow during
/// power evaluation yields fields flagged overflowed rather than an error;
/// the integrator turns that flag into a terminal state.
pub fn acceleration(
    state: &StateVector,
    params: &ModelParams,
    pot: &PotentialPair,
) -> Result<(ScalarField, ScalarField)> {
    if state.is_overflowed() {
        return Err(Error::NonFinite("acceleration input state".into()));
    }
    let lap_u = state.u.laplacian()?;
    let lap_v = state.v.laplacian()?;
    let m1sq = params.m1() * params.m1();
    let m2sq = params.m2() * params.m2();
    let coef_u = params.a2prime() * (params.p() + 1.0) / params.alpha();
    let coef_v = params.a2prime() * (params.q() + 1.0);
    let pw_p = Exponent::new(params.p());
    let pw_q = Exponent::new(params.q());
    let pw_p1 = Exponent::new(params.p() + 1.0);
    let pw_q1 = Exponent::new(params.q() + 1.0);
    let linear = params.linear_test_mode();

    let grid = state.grid().clone();
    let n = grid.total_points();
    let (u, v) = (state.u.values(), state.v.values());
    let (k1, k2) = (pot.k1().values(), pot.k2().values());
    let mut acc_u = Vec::with_capacity(n);
    let mut acc_v = Vec::with_capacity(n);
    let mut finite = true;
    for i in 0..n {
        let (ui, vi) = (u[i], v[i]);
        let mut au = lap_u.values()[i] - m1sq * ui - k1[i] * ui;
        let mut av = lap_v.values()[i] - m2sq * vi - k2[i] * vi;
        if !linear {
            au += coef_u * pw_q1.abs_pow(vi) * pw_p.signed_pow(ui);
            av += coef_v * pw_p1.abs_pow(ui) * pw_q.signed_pow(vi);
        }
        finite &= au.is_finite() && av.is_finite();
        acc_u.push(au);
        acc_v.push(av);
    }
    Ok((
        ScalarField::from_raw(grid.clone(), acc_u, !finite),
        ScalarField::from_raw(grid, acc_v, !finite),
    ))
}
