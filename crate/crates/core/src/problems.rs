//! One-dimensional Cauchy problems `u_t + F(x, t, u, u_x, u_xx) = 0` on a
//! space-time box, and collocation sampling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::Jet2;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("empty domain: x in [{x_lo}, {x_hi}], t in [0, {t_hi}]")]
    EmptyDomain { x_lo: f64, x_hi: f64, t_hi: f64 },
    #[error("viscosity must be positive, got {0}")]
    Viscosity(f64),
    #[error("collocation counts must be at least 1")]
    ZeroCount,
    #[error("unknown problem `{0}` (expected transport | hamilton-jacobi | heat | burgers)")]
    UnknownProblem(String),
}

/// `[x_lo, x_hi] × [0, t_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DomainBox<T> {
    pub x_lo: T,
    pub x_hi: T,
    pub t_hi: T,
}

impl<T: Scalar> DomainBox<T> {
    pub fn new(x_lo: T, x_hi: T, t_hi: T) -> Result<Self, ProblemError> {
        if !(x_lo < x_hi) || !(t_hi > T::zero()) {
            return Err(ProblemError::EmptyDomain {
                x_lo: x_lo.to_f64_lossy(),
                x_hi: x_hi.to_f64_lossy(),
                t_hi: t_hi.to_f64_lossy(),
            });
        }
        Ok(Self { x_lo, x_hi, t_hi })
    }

    /// `[−1, 1] × [0, 1]`.
    pub fn standard() -> Self {
        Self { x_lo: -T::one(), x_hi: T::one(), t_hi: T::one() }
    }

    pub fn width(&self) -> T {
        self.x_hi - self.x_lo
    }

    pub fn volume(&self) -> T {
        self.width() * self.t_hi
    }

    pub fn contains(&self, x: T, t: T) -> bool {
        x >= self.x_lo && x <= self.x_hi && t >= T::zero() && t <= self.t_hi
    }
}

/// Initial data `φ`. Every variant has closed-form first and second
/// derivatives so exact solutions can be pushed through jets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition<T> {
    Zero,
    Constant { value: T },
    /// `amplitude · sin(wavenumber · x)`.
    Sine { amplitude: T, wavenumber: T },
    /// Normal density with the given mean and variance.
    Gaussian { mean: T, variance: T },
    /// `height · exp(1 − 1/(1 − s²))` for `s = (x − center)/radius`, `|s| < 1`.
    Bump { center: T, radius: T, height: T },
    Sum { terms: Vec<InitialCondition<T>> },
}

impl<T: Scalar> InitialCondition<T> {
    /// `sin(πx/2)`.
    pub fn half_sine() -> Self {
        InitialCondition::Sine { amplitude: T::one(), wavenumber: T::FRAC_PI_2() }
    }

    pub fn eval(&self, x: T) -> T {
        self.derivs(x).0
    }

    /// `(φ, φ', φ'')` at `x`.
    pub fn derivs(&self, x: T) -> (T, T, T) {
        let z = T::zero();
        match self {
            InitialCondition::Zero => (z, z, z),
            InitialCondition::Constant { value } => (*value, z, z),
            InitialCondition::Sine { amplitude, wavenumber } => {
                let (s, c) = (*wavenumber * x).sin_cos();
                let k = *wavenumber;
                (*amplitude * s, *amplitude * k * c, -*amplitude * k * k * s)
            }
            InitialCondition::Gaussian { mean, variance } => {
                let d = x - *mean;
                let v = *variance;
                let f = (-d * d / (T::lit(2.0) * v)).exp() / (T::TAU() * v).sqrt();
                (f, -d / v * f, (d * d / (v * v) - v.recip()) * f)
            }
            InitialCondition::Bump { center, radius, height } => {
                let s = (x - *center) / *radius;
                let q = T::one() - s * s;
                if q <= T::zero() {
                    return (z, z, z);
                }
                let f = *height * (T::one() - q.recip()).exp();
                let r = *radius;
                // g = 1 − 1/q; derivatives with respect to x.
                let g1 = T::lit(-2.0) * s / (q * q) / r;
                let g2 = (T::lit(-2.0) / (q * q) - T::lit(8.0) * s * s / (q * q * q)) / (r * r);
                (f, f * g1, f * (g1 * g1 + g2))
            }
            InitialCondition::Sum { terms } => terms.iter().fold((z, z, z), |acc, t| {
                let d = t.derivs(x);
                (acc.0 + d.0, acc.1 + d.1, acc.2 + d.2)
            }),
        }
    }

    /// Interval outside which `φ` vanishes; `None` if the support is
    /// unbounded.
    pub fn support(&self) -> Option<(T, T)> {
        match self {
            InitialCondition::Zero => Some((T::zero(), T::zero())),
            InitialCondition::Bump { center, radius, .. } => Some((*center - *radius, *center + *radius)),
            InitialCondition::Sum { terms } => terms.iter().try_fold(None, |acc: Option<(T, T)>, t| {
                let (lo, hi) = t.support()?;
                Some(Some(match acc {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                }))
            })?,
            _ => None,
        }
    }

    /// Disjoint intervals covering the support, for piecewise quadrature.
    /// `None` if some part has unbounded support.
    pub fn support_pieces(&self) -> Option<Vec<(T, T)>> {
        match self {
            InitialCondition::Zero => Some(vec![]),
            InitialCondition::Bump { .. } => self.support().map(|s| vec![s]),
            InitialCondition::Sum { terms } => {
                let mut all = Vec::new();
                for t in terms {
                    all.extend(t.support_pieces()?);
                }
                all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
                let mut merged: Vec<(T, T)> = Vec::new();
                for (lo, hi) in all {
                    match merged.last_mut() {
                        Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                        _ => merged.push((lo, hi)),
                    }
                }
                Some(merged)
            }
            _ => None,
        }
    }

    /// Upper bound on `sup |φ|`.
    pub fn sup_abs(&self) -> T {
        match self {
            InitialCondition::Zero => T::zero(),
            InitialCondition::Constant { value } => value.abs(),
            InitialCondition::Sine { amplitude, .. } => amplitude.abs(),
            InitialCondition::Gaussian { variance, .. } => (T::TAU() * *variance).sqrt().recip(),
            InitialCondition::Bump { height, .. } => height.abs(),
            InitialCondition::Sum { terms } => terms.iter().map(|t| t.sup_abs()).sum(),
        }
    }

    pub fn is_odd(&self) -> bool {
        match self {
            InitialCondition::Zero | InitialCondition::Sine { .. } => true,
            InitialCondition::Sum { terms } => terms.iter().all(|t| t.is_odd()),
            _ => false,
        }
    }
}

/// The `F` part of `u_t + F = 0`, as a function of the jet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum PdeOperator<T> {
    /// `u_t + b u_x − c`.
    Transport { b: T, c: T },
    /// `u_t + u_x²`.
    HamiltonJacobi,
    /// `u_t − u_xx`.
    Heat,
    /// `u_t + μ u u_x − ν u_xx`.
    Burgers { mu: T, nu: T },
}

impl<T: Scalar> PdeOperator<T> {
    #[inline]
    pub fn residual(&self, u: &Jet2<T>) -> T {
        match *self {
            PdeOperator::Transport { b, c } => u.dt + b * u.dx - c,
            PdeOperator::HamiltonJacobi => u.dt + u.dx * u.dx,
            PdeOperator::Heat => u.dt - u.dxx,
            PdeOperator::Burgers { mu, nu } => u.dt + mu * u.val * u.dx - nu * u.dxx,
        }
    }

    /// Partials of the residual with respect to `(u, u_x, u_t, u_xx)`.
    #[inline]
    pub fn residual_partials(&self, u: &Jet2<T>) -> Jet2<T> {
        let (z, one) = (T::zero(), T::one());
        match *self {
            PdeOperator::Transport { b, .. } => Jet2::new(z, b, one, z),
            PdeOperator::HamiltonJacobi => Jet2::new(z, T::lit(2.0) * u.dx, one, z),
            PdeOperator::Heat => Jet2::new(z, z, one, -one),
            PdeOperator::Burgers { mu, nu } => Jet2::new(mu * u.dx, mu * u.val, one, -nu),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Transport,
    HamiltonJacobi,
    Heat,
    Burgers,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] =
        [ProblemKind::Transport, ProblemKind::HamiltonJacobi, ProblemKind::Heat, ProblemKind::Burgers];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Transport => "transport",
            ProblemKind::HamiltonJacobi => "hamilton-jacobi",
            ProblemKind::Heat => "heat",
            ProblemKind::Burgers => "burgers",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transport" => Ok(ProblemKind::Transport),
            "hamilton-jacobi" | "hj" => Ok(ProblemKind::HamiltonJacobi),
            "heat" => Ok(ProblemKind::Heat),
            "burgers" => Ok(ProblemKind::Burgers),
            other => Err(ProblemError::UnknownProblem(other.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CauchyProblem<T> {
    pub kind: ProblemKind,
    pub operator: PdeOperator<T>,
    pub initial: InitialCondition<T>,
    pub domain: DomainBox<T>,
}

impl<T: Scalar> CauchyProblem<T> {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn with_domain(mut self, domain: DomainBox<T>) -> Self {
        self.domain = domain;
        self
    }

    #[inline]
    pub fn residual(&self, u: &Jet2<T>) -> T {
        self.operator.residual(u)
    }

    /// Jet of a registered exact solution at `(x, t)`, when one is known.
    pub fn exact_jet(&self, x: T, t: T) -> Option<Jet2<T>> {
        match (&self.operator, &self.initial) {
            (PdeOperator::Transport { b, c }, ic) => {
                let (f, f1, f2) = ic.derivs(x - *b * t);
                Some(Jet2::new(f + *c * t, f1, -*b * f1 + *c, f2))
            }
            (_, InitialCondition::Zero) => Some(Jet2::zero()),
            (PdeOperator::Heat, InitialCondition::Constant { value }) => Some(Jet2::constant(*value)),
            (PdeOperator::Heat, InitialCondition::Gaussian { mean, variance }) => {
                let v = *variance + T::lit(2.0) * t;
                let g = InitialCondition::Gaussian { mean: *mean, variance: v };
                let (f, f1, f2) = g.derivs(x);
                // u_t = u_xx for the heat equation.
                Some(Jet2::new(f, f1, f2, f2))
            }
            (PdeOperator::Burgers { .. }, InitialCondition::Constant { value }) => Some(Jet2::constant(*value)),
            _ => None,
        }
    }
}

/// `u_t + b u_x = c` with constant coefficients on `[−1, 1] × [0, 1]`.
pub fn make_transport<T: Scalar>(b: T, c: T, initial: InitialCondition<T>) -> CauchyProblem<T> {
    CauchyProblem {
        kind: ProblemKind::Transport,
        operator: PdeOperator::Transport { b, c },
        initial,
        domain: DomainBox::standard(),
    }
}

/// `u_t + u_x² = 0`, `u(x, 0) = 0`.
pub fn make_hamilton_jacobi<T: Scalar>() -> CauchyProblem<T> {
    CauchyProblem {
        kind: ProblemKind::HamiltonJacobi,
        operator: PdeOperator::HamiltonJacobi,
        initial: InitialCondition::Zero,
        domain: DomainBox::standard(),
    }
}

/// `u_t = u_xx`.
pub fn make_heat<T: Scalar>(initial: InitialCondition<T>) -> CauchyProblem<T> {
    CauchyProblem { kind: ProblemKind::Heat, operator: PdeOperator::Heat, initial, domain: DomainBox::standard() }
}

/// `u_t + μ u u_x = ν u_xx`, `u(x, 0) = sin(πx/2)`.
pub fn make_burgers<T: Scalar>(mu: T, nu: T) -> Result<CauchyProblem<T>, ProblemError> {
    if !(nu > T::zero()) {
        return Err(ProblemError::Viscosity(nu.to_f64_lossy()));
    }
    Ok(CauchyProblem {
        kind: ProblemKind::Burgers,
        operator: PdeOperator::Burgers { mu, nu },
        initial: InitialCondition::half_sine(),
        domain: DomainBox::standard(),
    })
}

/// Default instance of each problem, as selected by name.
pub fn default_problem<T: Scalar>(kind: ProblemKind) -> CauchyProblem<T> {
    match kind {
        ProblemKind::Transport => make_transport(T::one(), T::zero(), InitialCondition::half_sine()),
        ProblemKind::HamiltonJacobi => make_hamilton_jacobi(),
        ProblemKind::Heat => make_heat(InitialCondition::Bump { center: T::zero(), radius: T::one(), height: T::one() }),
        ProblemKind::Burgers => make_burgers(-T::one(), T::lit(1e-3)).expect("positive viscosity"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Sampler {
    /// Tensor grid including boundary rows; `nx` initial points.
    Grid { nx: usize, nt: usize },
    /// I.i.d. uniform points.
    Uniform { interior: usize, initial: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CollocationSet<T> {
    pub interior: Vec<(T, T)>,
    pub initial: Vec<T>,
    pub sampler: Sampler,
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + h * T::from_usize_lossy(i) })
                .collect()
        }
    }
}

pub fn sample_collocation<T: Scalar>(
    domain: &DomainBox<T>,
    sampler: Sampler,
) -> Result<CollocationSet<T>, ProblemError> {
    match sampler {
        Sampler::Grid { nx, nt } => {
            if nx == 0 || nt == 0 {
                return Err(ProblemError::ZeroCount);
            }
            let xs = linspace(domain.x_lo, domain.x_hi, nx);
            let ts = linspace(T::zero(), domain.t_hi, nt);
            let interior = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
            Ok(CollocationSet { interior, initial: xs, sampler })
        }
        Sampler::Uniform { interior, initial, seed } => {
            if interior == 0 || initial == 0 {
                return Err(ProblemError::ZeroCount);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lo, hi, th) = (domain.x_lo.to_f64_lossy(), domain.x_hi.to_f64_lossy(), domain.t_hi.to_f64_lossy());
            let pts = (0..interior)
                .map(|_| (T::lit(rng.gen_range(lo..=hi)), T::lit(rng.gen_range(0.0..=th))))
                .collect();
            let init = (0..initial).map(|_| T::lit(rng.gen_range(lo..=hi))).collect();
            Ok(CollocationSet { interior: pts, initial: init, sampler })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn transport_exact_solution_has_zero_residual() {
        let p = make_transport(1.0_f64, 0.0, InitialCondition::half_sine());
        let j = p.exact_jet(0.3, 0.4).unwrap();
        assert!(p.residual(&j).abs() < 1e-12);
        assert!(p.exact_jet(0.5, 0.5).unwrap().val.abs() < 1e-16);
        let p = make_transport(1.0_f64, 0.0, InitialCondition::Constant { value: 1.0 });
        assert_eq!(p.residual(&Jet2::constant(1.0)), 0.0);
        let p = make_transport(2.0_f64, 0.5, InitialCondition::half_sine());
        let j = p.exact_jet(-0.2, 0.7).unwrap();
        assert!(p.residual(&j).abs() < 1e-14);
    }

    #[test]
    fn hamilton_jacobi_examples() {
        let p = make_hamilton_jacobi::<f64>();
        assert_eq!(p.residual(&Jet2::zero()), 0.0);
        // u = x − t branch of the a = 1 family.
        let u = Jet2::new(0.5 - 1.0, 1.0, -1.0, 0.0);
        assert_eq!(p.residual(&u), 0.0);
    }

    #[test]
    fn caloric_polynomials() {
        let p = make_heat::<f64>(InitialCondition::Constant { value: 1.0 });
        assert_eq!(p.residual(&p.exact_jet(0.2, 0.3).unwrap()), 0.0);
        let x = Jet2::var_x(0.4_f64);
        let t = Jet2::var_t(0.9_f64);
        assert_eq!(p.residual(&x), 0.0);
        assert_eq!(p.residual(&(x * x + t * 2.0)), 0.0);
    }

    #[test]
    fn heat_gaussian_exact_jet() {
        let p = make_heat(InitialCondition::Gaussian { mean: 0.0_f64, variance: 1.0 });
        let j = p.exact_jet(0.3, 0.5).unwrap();
        let want = (-0.09_f64 / 4.0).exp() / (2.0 * std::f64::consts::PI * 2.0).sqrt();
        assert_relative_eq!(j.val, want, max_relative = 1e-14);
        assert_eq!(p.residual(&j), 0.0);
    }

    #[test]
    fn burgers_zero_and_validation() {
        let p = make_burgers(-1.0_f64, 1e-3).unwrap();
        assert_eq!(p.residual(&Jet2::zero()), 0.0);
        assert!(make_burgers(-1.0_f64, 0.0).is_err());
        assert!(p.initial.is_odd());
    }

    #[test]
    fn half_sine_square_integral_is_one() {
        let g = crate::quadrature::GaussLegendre::new(20);
        let ic = InitialCondition::<f64>::half_sine();
        let v = g.integrate(-1.0, 1.0, |x| ic.eval(x).powi(2));
        assert_relative_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ic_derivatives_match_fd() {
        let ics = [
            InitialCondition::half_sine(),
            InitialCondition::Gaussian { mean: 0.2, variance: 0.3 },
            InitialCondition::Bump { center: 0.1, radius: 0.8, height: 2.0 },
        ];
        let h = 1e-4;
        for ic in &ics {
            let x = 0.37;
            let (_, d1, d2) = ic.derivs(x);
            let f = |x| ic.eval(x);
            assert_relative_eq!(d1, (f(x + h) - f(x - h)) / (2.0 * h), max_relative = 1e-6);
            assert_relative_eq!(d2, (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h), max_relative = 1e-5);
        }
    }

    #[test]
    fn support_of_sums() {
        let ic = InitialCondition::Sum {
            terms: vec![
                InitialCondition::Bump { center: 0.0_f64, radius: 1.0, height: 1.0 },
                InitialCondition::Bump { center: 3.0, radius: 1.0, height: 4.0 },
            ],
        };
        assert_eq!(ic.support(), Some((-1.0, 4.0)));
        assert_eq!(ic.support_pieces(), Some(vec![(-1.0, 1.0), (2.0, 4.0)]));
        assert_eq!(ic.sup_abs(), 5.0);
        assert_eq!(InitialCondition::<f64>::half_sine().support(), None);
    }

    #[test]
    fn grid_sampler() {
        let c = sample_collocation(&DomainBox::<f64>::standard(), Sampler::Grid { nx: 3, nt: 3 }).unwrap();
        let xs: Vec<f64> = c.interior.iter().take(3).map(|p| p.0).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        let ts: Vec<f64> = c.interior.iter().step_by(3).map(|p| p.1).collect();
        assert_eq!(ts, vec![0.0, 0.5, 1.0]);
        assert!(sample_collocation(&DomainBox::<f64>::standard(), Sampler::Grid { nx: 0, nt: 3 }).is_err());
    }

    #[test]
    fn uniform_sampler_reproducible_and_inside() {
        let d = DomainBox::<f64>::standard();
        let s = Sampler::Uniform { interior: 10_000, initial: 100, seed: 5 };
        let a = sample_collocation(&d, s).unwrap();
        let b = sample_collocation(&d, s).unwrap();
        assert_eq!(a, b);
        assert!(a.interior.iter().all(|&(x, t)| d.contains(x, t)));
        assert!(a.initial.iter().all(|&x| (-1.0..=1.0).contains(&x)));
    }

    #[test]
    fn problem_names_parse() {
        for k in ProblemKind::ALL {
            assert_eq!(k.name().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("wave".parse::<ProblemKind>().is_err());
    }

    proptest! {
        #[test]
        fn transport_exact_residual_vanishes(x in -1.0..1.0_f64, t in 0.0..1.0_f64, b in -2.0..2.0_f64, c in -1.0..1.0_f64) {
            let p = make_transport(b, c, InitialCondition::half_sine());
            let j = p.exact_jet(x, t).unwrap();
            prop_assert!(p.residual(&j).abs() < 1e-12);
        }
    }
}
